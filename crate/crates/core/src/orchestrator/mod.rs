//! The training loop: sample a batch, roll out G candidates per target
//! language, verify, expand the exploration pool, then compute weights,
//! advantages and the objective, and hand the batch to a sink.

mod batch;

pub use batch::{
    direction_key, export_batch, import_batch, BatchCandidate, BatchItem, DirectionStats, StepMetrics, TrainingBatch,
};

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lang::{LanguageId, LanguageSet};
use crate::policy::{DecodeParams, Generation, GenerationRequest, Policy, PolicyError};
use crate::pools::{
    enqueue_verified, exploration_capacity, sample_batch, CodeUnit, ExplorationPool, PoolEntry, PoolError, SeedPool,
};
use crate::rlmath::{self, CandidateRollout, ObjectiveConfig, ObjectiveError, TranslationGroup};
use crate::sandbox::{bounded_map, ExecutionLimits, SandboxError, Verdict, Verifier};
use crate::testspec::{subsample_suite, DatasetRecord, TestSuite};
use crate::transpiler::{emit_harness, render_declaration, HarnessSource, TranspileError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub num_steps: u64,
    pub batch_size: usize,
    pub group_size: usize,
    pub clip_epsilon: f64,
    pub kl_coefficient: f64,
    /// Forwarded to the external trainer; unused here.
    pub learning_rate: f64,
    /// Forwarded to the external trainer; unused here.
    pub micro_batch_size: usize,
    /// Average rather than sum the objective over (item, target) groups.
    pub batch_mean: bool,
    pub languages: LanguageSet,
    pub limits: ExecutionLimits,
    pub rng_seed: u64,
    pub decode: DecodeParams,
    /// Fraction of each test suite kept for verification.
    pub test_fraction: f64,
    pub policy_parallelism: usize,
    /// 0 uses the number of available CPUs.
    pub sandbox_parallelism: usize,
    /// Write a checkpoint every this many steps; 0 disables.
    pub checkpoint_every: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            num_steps: 100,
            batch_size: 256,
            group_size: 8,
            clip_epsilon: 0.2,
            kl_coefficient: 0.01,
            learning_rate: 1e-6,
            micro_batch_size: 8,
            batch_mean: false,
            languages: LanguageSet::reference(),
            limits: ExecutionLimits::default(),
            rng_seed: 0,
            decode: DecodeParams::default(),
            test_fraction: 1.0,
            policy_parallelism: 8,
            sandbox_parallelism: 0,
            checkpoint_every: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let fail = |m: String| Err(TrainError::Config(m));
        if self.num_steps < 1 {
            return fail("num_steps must be at least 1".into());
        }
        if self.batch_size < 1 {
            return fail("batch_size must be at least 1".into());
        }
        if self.policy_parallelism < 1 {
            return fail("parallelism must be at least 1".into());
        }
        if !(self.test_fraction > 0.0 && self.test_fraction <= 1.0) {
            return fail(format!("test_fraction must be in (0, 1], got {}", self.test_fraction));
        }
        self.objective().validate().map_err(TrainError::Config)?;
        self.decode.validate().map_err(TrainError::Config)?;
        self.limits.validate().map_err(|e| TrainError::Config(e.to_string()))?;
        Ok(())
    }

    pub fn objective(&self) -> ObjectiveConfig {
        ObjectiveConfig {
            clip_epsilon: self.clip_epsilon,
            kl_coefficient: self.kl_coefficient,
            group_size: self.group_size,
            batch_mean: self.batch_mean,
        }
    }

    pub fn sandbox_workers(&self) -> usize {
        match self.sandbox_parallelism {
            0 => std::thread::available_parallelism().map_or(4, |n| n.get()),
            n => n,
        }
    }

    pub fn explore_capacity(&self) -> usize {
        exploration_capacity(self.languages.len(), self.batch_size)
    }
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("aborting: {0}")]
    SandboxUnavailable(SandboxError),
    #[error("harness for suite `{suite}`: {source}")]
    Harness { suite: String, source: TranspileError },
    #[error(transparent)]
    Pool(#[from] PoolError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error("sink: {0}")]
    Sink(#[from] std::io::Error),
}

/// Receives one batch per step.
pub trait BatchSink {
    fn consume(&mut self, batch: &TrainingBatch) -> std::io::Result<()>;
}

/// Discards batches.
#[derive(Debug, Default)]
pub struct NullSink;

impl BatchSink for NullSink {
    fn consume(&mut self, _batch: &TrainingBatch) -> std::io::Result<()> {
        Ok(())
    }
}

/// Keeps every batch in memory.
#[derive(Debug, Default)]
pub struct MemorySink {
    pub batches: Vec<TrainingBatch>,
}

impl BatchSink for MemorySink {
    fn consume(&mut self, batch: &TrainingBatch) -> std::io::Result<()> {
        self.batches.push(batch.clone());
        Ok(())
    }
}

/// Writes `batch_<step>.jsonl` per step and appends to `metrics.jsonl`.
#[derive(Debug)]
pub struct ExportSink {
    dir: PathBuf,
}

impl ExportSink {
    pub const METRICS_FILE: &'static str = "metrics.jsonl";

    pub fn new(dir: impl Into<PathBuf>) -> std::io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

impl BatchSink for ExportSink {
    fn consume(&mut self, batch: &TrainingBatch) -> std::io::Result<()> {
        export_batch(batch, self.dir.join(TrainingBatch::file_name(batch.step)))?;
        let mut f = fs::OpenOptions::new().create(true).append(true).open(self.dir.join(Self::METRICS_FILE))?;
        serde_json::to_writer(&mut f, &batch.metrics)?;
        f.write_all(b"\n")
    }
}

/// Pool state sufficient to resume a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainState {
    /// Steps completed.
    pub step: u64,
    pub seed: SeedPool,
    pub explore: ExplorationPool,
}

impl TrainState {
    pub fn save(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        fs::write(path, serde_json::to_vec(self)?)
    }

    pub fn load(path: impl AsRef<Path>) -> std::io::Result<Self> {
        Ok(serde_json::from_slice(&fs::read(path)?)?)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub steps: u64,
    pub directions: BTreeMap<String, DirectionStats>,
    pub items_defined: u64,
    pub items_skipped: u64,
    pub enqueued: u64,
    pub policy_failures: u64,
    pub sandbox_errors: u64,
    /// First step whose batch contained an explored (non-pivot) source.
    pub first_explored_step: Option<u64>,
    pub final_explore_size: usize,
    pub objective_total: f64,
}

impl RunSummary {
    fn absorb(&mut self, m: &StepMetrics) {
        self.steps += 1;
        for (k, v) in &m.directions {
            self.directions.entry(k.clone()).or_default().merge(v);
        }
        self.items_defined += m.items_defined as u64;
        self.items_skipped += m.items_skipped as u64;
        self.enqueued += m.enqueued as u64;
        self.policy_failures += m.policy_failures as u64;
        self.sandbox_errors += m.sandbox_errors as u64;
        if m.explore_sourced > 0 && self.first_explored_step.is_none() {
            self.first_explored_step = Some(m.step);
        }
        self.final_explore_size = m.explore_size;
        self.objective_total += m.objective;
    }
}

/// splitmix64 finalizer over a sequence of words.
fn mix(words: &[u64]) -> u64 {
    let mut h: u64 = 0x9e37_79b9_7f4a_7c15;
    for &w in words {
        let mut z = h ^ w.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        h = z ^ (z >> 31);
    }
    h
}

pub struct Trainer {
    config: TrainConfig,
    suites: HashMap<String, TestSuite>,
    harnesses: HashMap<(String, LanguageId), HarnessSource>,
    state: TrainState,
    summary: RunSummary,
    checkpoint_dir: Option<PathBuf>,
}

/// Outcome of one (item, target) rollout before weighting.
struct Rollout {
    item: usize,
    target: LanguageId,
    prompt: String,
    generations: Result<Vec<Generation>, PolicyError>,
}

impl Trainer {
    pub fn new(config: TrainConfig, dataset: &[DatasetRecord]) -> Result<Self, TrainError> {
        config.validate()?;
        let pivot = config.languages.pivot().clone();
        let seed = SeedPool::from_records(dataset, &pivot)?;
        let explore = ExplorationPool::new(config.explore_capacity());
        Self::with_state(config, dataset, TrainState { step: 0, seed, explore })
    }

    pub fn resume(config: TrainConfig, dataset: &[DatasetRecord], state: TrainState) -> Result<Self, TrainError> {
        config.validate()?;
        if state.explore.capacity() != config.explore_capacity() {
            return Err(TrainError::Config(format!(
                "checkpoint capacity {} does not match configured {}",
                state.explore.capacity(),
                config.explore_capacity()
            )));
        }
        Self::with_state(config, dataset, state)
    }

    fn with_state(config: TrainConfig, dataset: &[DatasetRecord], state: TrainState) -> Result<Self, TrainError> {
        let mut suites = HashMap::new();
        let mut harnesses = HashMap::new();
        for r in dataset {
            let mut suite = r.suite();
            if config.test_fraction < 1.0 {
                suite = subsample_suite(&suite, config.test_fraction, mix(&[config.rng_seed, 0x5u64]));
            }
            for lang in config.languages.languages() {
                let h = emit_harness(&suite, lang)
                    .map_err(|source| TrainError::Harness { suite: r.suite_id.clone(), source })?;
                harnesses.insert((r.suite_id.clone(), lang.clone()), h);
            }
            suites.insert(r.suite_id.clone(), suite);
        }
        Ok(Self { config, suites, harnesses, state, summary: RunSummary::default(), checkpoint_dir: None })
    }

    pub fn with_checkpoint_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.checkpoint_dir = Some(dir.into());
        self
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn state(&self) -> &TrainState {
        &self.state
    }

    pub fn summary(&self) -> &RunSummary {
        &self.summary
    }

    pub fn suite(&self, suite_id: &str) -> Option<&TestSuite> {
        self.suites.get(suite_id)
    }

    /// Runs the remaining steps up to `num_steps`.
    pub fn run(
        &mut self,
        policy: &dyn Policy,
        verifier: &dyn Verifier,
        sink: &mut dyn BatchSink,
    ) -> Result<RunSummary, TrainError> {
        for lang in self.config.languages.languages() {
            verifier.probe(lang).map_err(TrainError::SandboxUnavailable)?;
        }
        while self.state.step < self.config.num_steps {
            let batch = self.step(policy, verifier)?;
            sink.consume(&batch)?;
            let every = self.config.checkpoint_every;
            if every > 0 && self.state.step.is_multiple_of(every) {
                if let Some(dir) = &self.checkpoint_dir {
                    fs::create_dir_all(dir)?;
                    self.state.save(dir.join(format!("checkpoint_{:06}.json", self.state.step)))?;
                    self.state.explore.export(dir.join(format!("explore_{:06}.jsonl", self.state.step)))?;
                }
            }
        }
        Ok(self.summary.clone())
    }

    fn request(&self, entry: &PoolEntry, target: &LanguageId) -> GenerationRequest {
        let sig = render_declaration(&entry.code.entrypoint, target).unwrap_or_default();
        GenerationRequest {
            source: entry.code.clone(),
            target: target.clone(),
            target_signature: sig,
            num_candidates: self.config.group_size,
            decode: self.config.decode,
        }
    }

    /// Executes one step and returns its batch.
    pub fn step(&mut self, policy: &dyn Policy, verifier: &dyn Verifier) -> Result<TrainingBatch, TrainError> {
        let started = Instant::now();
        let step = self.state.step + 1;
        let cfg = &self.config;
        let batch = sample_batch(&mut self.state.seed, &mut self.state.explore, cfg.batch_size, cfg.rng_seed);
        let explore_sourced = batch.iter().filter(|e| !e.is_seed()).count();

        // rollout
        let mut pairs = Vec::new();
        for (i, entry) in batch.iter().enumerate() {
            for t in cfg.languages.targets_for(&entry.code.language) {
                pairs.push((i, t.clone()));
            }
        }
        let rollouts: Vec<Rollout> = bounded_map(&pairs, cfg.policy_parallelism, |(i, t)| {
            let req = self.request(&batch[*i], t);
            Rollout { item: *i, target: t.clone(), prompt: req.prompt(), generations: policy.generate(&req) }
        });

        // verification, flattened over every candidate of every rollout
        let mut tasks = Vec::new();
        for (r, ro) in rollouts.iter().enumerate() {
            if let Ok(gens) = &ro.generations {
                for (j, g) in gens.iter().enumerate() {
                    if !g.extraction_empty() {
                        tasks.push((r, j));
                    }
                }
            }
        }
        let verdicts = bounded_map(&tasks, cfg.sandbox_workers(), |&(r, j)| {
            let ro = &rollouts[r];
            let suite = &batch[ro.item].suite_ref;
            let harness = &self.harnesses[&(suite.clone(), ro.target.clone())];
            let text = &ro.generations.as_ref().unwrap()[j].source_text;
            verifier.verify(text, &ro.target, harness, &cfg.limits)
        });
        let mut judged: HashMap<(usize, usize), Verdict> = HashMap::new();
        let mut sandbox_errors = 0;
        for (&(r, j), res) in tasks.iter().zip(verdicts) {
            let v = match res {
                Ok((v, _)) => v,
                Err(e @ SandboxError::Unavailable { .. }) => return Err(TrainError::SandboxUnavailable(e)),
                Err(e) => {
                    tracing::warn!(error = %e, "candidate not judged");
                    sandbox_errors += 1;
                    Verdict::sandbox_internal(&e)
                }
            };
            judged.insert((r, j), v);
        }

        let mut metrics = StepMetrics {
            step,
            batch_size: batch.len(),
            explore_sourced,
            explore_capacity: self.state.explore.capacity(),
            sandbox_errors,
            ..Default::default()
        };
        let evicted_before = self.state.explore.evicted();

        // per (item, target) candidate rollouts
        let mut per_item: Vec<Vec<(LanguageId, String, Vec<CandidateRollout>, Vec<String>)>> =
            vec![Vec::new(); batch.len()];
        for (r, ro) in rollouts.into_iter().enumerate() {
            let src_lang = &batch[ro.item].code.language;
            let stats = metrics.directions.entry(direction_key(src_lang, &ro.target)).or_default();
            stats.requests += 1;
            let gens = match ro.generations {
                Ok(g) => g,
                Err(e) => {
                    tracing::warn!(suite = %batch[ro.item].suite_ref, target = %ro.target, error = %e, "generation failed");
                    metrics.policy_failures += 1;
                    stats.candidates += cfg.group_size as u64;
                    continue;
                }
            };
            let mut cands = Vec::with_capacity(gens.len());
            let mut texts = Vec::with_capacity(gens.len());
            for (j, g) in gens.into_iter().enumerate() {
                let verdict = judged.remove(&(r, j)).unwrap_or_else(|| {
                    metrics.extraction_empty += 1;
                    Verdict::extraction_empty()
                });
                let reward = verdict.reward();
                stats.candidates += 1;
                stats.passes += u64::from(reward);
                cands.push(CandidateRollout {
                    tokens: g.tokens,
                    rollout_logprobs: g.logprobs,
                    reward,
                    verdict: Some(verdict),
                });
                texts.push(g.source_text);
            }
            per_item[ro.item].push((ro.target, ro.prompt, cands, texts));
        }

        // pool expansion precedes weighting
        for (i, groups) in per_item.iter().enumerate() {
            for (k, (target, _, cands, texts)) in groups.iter().enumerate() {
                let passing: Vec<CodeUnit> = cands
                    .iter()
                    .zip(texts)
                    .filter(|(c, _)| c.reward == 1)
                    .map(|(_, t)| CodeUnit {
                        source_text: t.clone(),
                        language: target.clone(),
                        entrypoint: batch[i].code.entrypoint.clone(),
                    })
                    .collect();
                let seed = mix(&[cfg.rng_seed, step, i as u64, k as u64]);
                if enqueue_verified(&mut self.state.explore, &batch[i], &passing, target, step, seed).is_some() {
                    metrics.enqueued += 1;
                }
            }
        }

        // weights and advantages
        let mut groups_out: Vec<TranslationGroup> = Vec::new();
        let mut prompts = Vec::new();
        for (i, groups) in per_item.into_iter().enumerate() {
            let entry = &batch[i];
            let mut item_prompts = Vec::new();
            let per_target: Vec<_> = groups
                .into_iter()
                .map(|(t, p, c, _)| {
                    item_prompts.push(p);
                    (t, c)
                })
                .collect();
            let built = rlmath::build_groups(&entry.suite_ref, &entry.code.language, per_target);
            if built.iter().all(|g| g.weight.is_none()) {
                metrics.items_skipped += 1;
                continue;
            }
            metrics.items_defined += 1;
            for (g, p) in built.into_iter().zip(item_prompts) {
                if g.weight.is_some() {
                    groups_out.push(g);
                    prompts.push(p);
                }
            }
        }

        let lp = rlmath::rollout_logprobs(&groups_out);
        metrics.objective = rlmath::grpo_objective(&groups_out, &lp, &lp, &cfg.objective())?;
        metrics.explore_size = self.state.explore.len();
        metrics.evicted = self.state.explore.evicted() - evicted_before;
        metrics.seed_epoch = self.state.seed.epoch();
        metrics.seed_cursor = self.state.seed.cursor();

        let items = groups_out
            .into_iter()
            .zip(prompts)
            .map(|(g, prompt)| BatchItem {
                suite_id: g.source_ref,
                source_lang: g.source_lang,
                target_lang: g.target,
                weight: g.weight.expect("filtered above"),
                prompt,
                candidates: g
                    .candidates
                    .into_iter()
                    .zip(g.advantages)
                    .map(|(c, advantage)| BatchCandidate {
                        tokens: c.tokens,
                        rollout_logprobs: c.rollout_logprobs,
                        reward: c.reward,
                        advantage,
                    })
                    .collect(),
            })
            .collect();

        metrics.wall_time = started.elapsed().as_secs_f64();
        self.summary.absorb(&metrics);
        self.state.step = step;
        tracing::info!(
            step,
            defined = metrics.items_defined,
            skipped = metrics.items_skipped,
            explore = metrics.explore_size,
            "step complete"
        );
        Ok(TrainingBatch { step, items, metrics })
    }
}

/// Convenience wrapper: build a trainer and run all steps.
pub fn run_training(
    config: TrainConfig,
    dataset: &[DatasetRecord],
    policy: &dyn Policy,
    verifier: &dyn Verifier,
    sink: &mut dyn BatchSink,
) -> Result<RunSummary, TrainError> {
    Trainer::new(config, dataset)?.run(policy, verifier, sink)
}

/// Distinct (source, target) directions present in a sequence of batches.
pub fn observed_directions<'a>(batches: impl IntoIterator<Item = &'a TrainingBatch>) -> BTreeSet<(LanguageId, LanguageId)> {
    batches
        .into_iter()
        .flat_map(|b| b.items.iter().map(|i| (i.source_lang.clone(), i.target_lang.clone())))
        .collect()
}
