//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! A criterion that cannot run because a language toolchain is missing is
//! reported as FAIL with the reason. Such failures only fail the process when
//! `ACCEPTANCE_REQUIRE_TOOLCHAINS` is set; every other failure always does.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use polytrans_core::config::RunConfig;
use polytrans_core::corpus::{fixture_root, load_corpus, reference_verifier, scripted_table, Problem};
use polytrans_core::evaluator::{average_ca1, evaluate_ca1, render_table, DirectionResult, EvalOptions};
use polytrans_core::orchestrator::{observed_directions, TrainConfig, Trainer, TrainingBatch};
use polytrans_core::policy::{DecodeMode, Generation, GenerationRequest, Policy, PolicyError, ScriptedPolicy, TableEntry, TranslationTable};
use polytrans_core::pools::{exploration_capacity, Origin};
use polytrans_core::rlmath::toy::ToyPolicy;
use polytrans_core::rlmath::{
    build_groups, grpo_objective, group_advantages, kl_penalty_token, language_weight, rollout_logprobs,
    token_surrogate, CandidateRollout, ObjectiveConfig, TranslationGroup,
};
use polytrans_core::sandbox::{bounded_map, ExecutionLimits, Outcome, Sandbox, Verifier};
use polytrans_core::testspec::{
    subsample_size, subsample_suite, DatasetRecord, EntrypointSignature, LiteralValue, SemanticType, TestCase, TestSuite,
};
use polytrans_core::transpiler::emit_harness;
use polytrans_core::{LanguageId, LanguageSet};

enum Failure {
    Check(String),
    /// The checks that could run passed, but a toolchain was missing.
    Toolchain(String),
}

type Verdict = Result<String, Failure>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(Failure::Check(format!($($fmt)+)));
        }
    };
}

fn within(elapsed: Duration, limit: f64, what: &str) -> Result<(), Failure> {
    if elapsed.as_secs_f64() < limit {
        Ok(())
    } else {
        Err(Failure::Check(format!("{what} took {:.2}s, limit {limit}s", elapsed.as_secs_f64())))
    }
}

fn langs() -> LanguageSet {
    LanguageSet::reference()
}

fn corpus() -> Vec<Problem> {
    let l = langs();
    load_corpus(&fixture_root(), l.languages(), l.pivot()).expect("fixture corpus")
}

fn records(p: &[Problem]) -> Vec<DatasetRecord> {
    p.iter().map(|p| p.record.clone()).collect()
}

fn missing_toolchains(sb: &Sandbox) -> Vec<(LanguageId, String)> {
    langs()
        .languages()
        .iter()
        .filter_map(|l| sb.check_toolchain(l).err().map(|e| (l.clone(), e.to_string())))
        .collect()
}

// 1 -------------------------------------------------------------------------

fn weight_algebra() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut skipped = 0;
    for n in 0..10_000 {
        let m = rng.gen_range(2..=4);
        let rs: Vec<u8> = (0..m).map(|_| if rng.gen_bool(0.3) { 0 } else { rng.gen_range(0..=8) }).collect();
        let per_target = rs
            .iter()
            .enumerate()
            .map(|(k, &r)| {
                let c = (0..8u8)
                    .map(|j| CandidateRollout { tokens: vec![1], rollout_logprobs: vec![-1.0], reward: u8::from(j < r), verdict: None })
                    .collect();
                (LanguageId::new(format!("t{k}")), c)
            })
            .collect();
        let groups = build_groups("s", &LanguageId::python(), per_target);
        let total: u32 = rs.iter().map(|&r| u32::from(r)).sum();
        if total == 0 {
            ensure!(groups.iter().all(|g| g.weight.is_none()), "vector {n}: weight defined with zero total");
            skipped += 1;
            continue;
        }
        let mut sum = 0.0;
        for (g, &r) in groups.iter().zip(&rs) {
            let w = g.weight.expect("defined");
            let expected = 1.0 - f64::from(r) / f64::from(total);
            ensure!((w - expected).abs() <= 1e-12, "vector {n}: w = {w}, expected {expected}");
            ensure!((0.0..=1.0).contains(&w), "vector {n}: w = {w} outside [0, 1]");
            ensure!(language_weight(u32::from(r), total - u32::from(r)) == Some(w), "vector {n}: group weight differs");
            sum += w;
        }
        ensure!((sum - (m as f64 - 1.0)).abs() <= 1e-12, "vector {n}: sum {sum} != {}", m - 1);
    }
    within(start.elapsed(), 1.0, "weight suite")?;
    Ok(format!("10000 vectors, {skipped} skipped, {:.3}s", start.elapsed().as_secs_f64()))
}

// 2 -------------------------------------------------------------------------

fn advantage_suite() -> Verdict {
    let start = Instant::now();
    let mut patterns = 0;
    for g in [2usize, 4, 8] {
        for mask in 0u32..(1 << g) {
            let rewards: Vec<u8> = (0..g).map(|j| ((mask >> j) & 1) as u8).collect();
            let a = group_advantages(&rewards);
            ensure!(a.len() == g, "G={g} mask {mask:b}: {} advantages", a.len());
            patterns += 1;
            if mask == 0 || mask == (1 << g) - 1 {
                ensure!(a.iter().all(|&x| x == 0.0), "G={g} degenerate mask {mask:b}: {a:?}");
                continue;
            }
            let n = g as f64;
            let mean = a.iter().sum::<f64>() / n;
            let sd = (a.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt();
            ensure!(mean.abs() <= 1e-9, "G={g} mask {mask:b}: mean {mean}");
            ensure!((sd - 1.0).abs() <= 1e-9, "G={g} mask {mask:b}: std {sd}");
        }
    }
    within(start.elapsed(), 1.0, "advantage suite")?;
    Ok(format!("{patterns} patterns, {:.3}s", start.elapsed().as_secs_f64()))
}

// 3 -------------------------------------------------------------------------

/// Straight-line scalar reimplementation of the objective.
fn objective_oracle(groups: &[TranslationGroup], cur: &[Vec<Vec<f64>>], reff: &[Vec<Vec<f64>>], eps: f64, beta: f64) -> f64 {
    let mut total = 0.0;
    for (gi, grp) in groups.iter().enumerate() {
        let w = grp.weight.unwrap();
        let g = grp.candidates.len() as f64;
        let mut inner = 0.0;
        for (j, cand) in grp.candidates.iter().enumerate() {
            let adv = grp.advantages[j];
            let n = cand.tokens.len() as f64;
            let mut s = 0.0;
            for t in 0..cand.tokens.len() {
                let ratio = (cur[gi][j][t] - cand.rollout_logprobs[t]).exp();
                let clipped = if ratio < 1.0 - eps {
                    1.0 - eps
                } else if ratio > 1.0 + eps {
                    1.0 + eps
                } else {
                    ratio
                };
                let a = ratio * adv;
                let b = clipped * adv;
                let q = (reff[gi][j][t] - cur[gi][j][t]).exp();
                s += (if a < b { a } else { b }) - beta * (q - q.ln() - 1.0);
            }
            inner += s / n;
        }
        total += w * inner / g;
    }
    total
}

fn random_groups(rng: &mut ChaCha8Rng, n_groups: usize, g: usize, len: usize, vocab: u32) -> Vec<TranslationGroup> {
    (0..n_groups)
        .map(|i| {
            let candidates: Vec<CandidateRollout> = (0..g)
                .map(|_| {
                    let n = rng.gen_range(1..=len);
                    CandidateRollout {
                        tokens: (0..n).map(|_| rng.gen_range(0..vocab)).collect(),
                        rollout_logprobs: (0..n).map(|_| -rng.gen_range(0.05..3.0)).collect(),
                        reward: rng.gen_range(0..2),
                        verdict: None,
                    }
                })
                .collect();
            let rewards: Vec<u8> = candidates.iter().map(|c| c.reward).collect();
            TranslationGroup {
                source_ref: format!("s{i}"),
                source_lang: LanguageId::python(),
                target: LanguageId::cpp(),
                cumulative_reward: rewards.iter().map(|&r| u32::from(r)).sum(),
                sibling_reward: 1,
                weight: Some(rng.gen_range(0.0..1.0)),
                advantages: group_advantages(&rewards),
                candidates,
            }
        })
        .collect()
}

fn perturb(rng: &mut ChaCha8Rng, lp: &[Vec<Vec<f64>>], scale: f64) -> Vec<Vec<Vec<f64>>> {
    lp.iter()
        .map(|g| g.iter().map(|c| c.iter().map(|x| (x + rng.gen_range(-scale..scale)).min(0.0)).collect()).collect())
        .collect()
}

fn objective_oracle_suite() -> Verdict {
    let mut worst: f64 = 0.0;
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let n_groups = rng.gen_range(1..=3);
        let g = rng.gen_range(2..=4);
        let groups = random_groups(&mut rng, n_groups, g, 3, 12);
        let old = rollout_logprobs(&groups);
        let cur = perturb(&mut rng, &old, 0.4);
        let reff = perturb(&mut rng, &old, 0.4);
        let cfg = ObjectiveConfig { kl_coefficient: rng.gen_range(0.0..0.1), ..Default::default() };
        let got = grpo_objective(&groups, &cur, &reff, &cfg).map_err(|e| Failure::Check(e.to_string()))?;
        let want = objective_oracle(&groups, &cur, &reff, cfg.clip_epsilon, cfg.kl_coefficient);
        worst = worst.max((got - want).abs());
        ensure!((got - want).abs() <= 1e-12, "instance {seed}: {got} vs oracle {want}");
    }

    ensure!(token_surrogate(1.0, 0.7, 0.3) == 0.7, "identity ratio");
    ensure!(token_surrogate(2.0, 1.0, 0.2) == 1.2, "clip at 1+eps");
    ensure!(token_surrogate(0.5, -1.0, 0.2) == -0.8, "pessimistic negative advantage");
    ensure!(kl_penalty_token(-1.0, -1.0) == 0.0, "kl of equal logprobs");
    let k = kl_penalty_token(0.5f64.ln(), 0.25f64.ln());
    ensure!((k - (0.5 + 2f64.ln() - 1.0)).abs() <= 1e-12 && (k - 0.19315).abs() < 5e-6, "kl corner {k}");
    let s3 = 3f64.sqrt();
    let a = group_advantages(&[1, 0, 0, 0]);
    for (x, y) in a.iter().zip([s3, -1.0 / s3, -1.0 / s3, -1.0 / s3]) {
        ensure!((x - y).abs() <= 1e-12, "advantages {a:?}");
    }
    ensure!(group_advantages(&[1, 0]) == [1.0, -1.0], "two-point advantages");

    // single one-token candidate, r = 2, A = 1, w = 1, G = 1, beta = 0
    let one = TranslationGroup {
        source_ref: "s".into(),
        source_lang: LanguageId::python(),
        target: LanguageId::cpp(),
        candidates: vec![CandidateRollout { tokens: vec![0], rollout_logprobs: vec![-1.5], reward: 1, verdict: None }],
        cumulative_reward: 1,
        sibling_reward: 0,
        weight: Some(1.0),
        advantages: vec![1.0],
    };
    let cur = vec![vec![vec![-1.5 + 2f64.ln()]]];
    let v = grpo_objective(std::slice::from_ref(&one), &cur, &cur, &ObjectiveConfig { kl_coefficient: 0.0, ..Default::default() })
        .map_err(|e| Failure::Check(e.to_string()))?;
    ensure!((v - 1.2).abs() <= 1e-12, "clipped objective {v}");

    // fresh policy: w times the mean advantage
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut fresh = random_groups(&mut rng, 1, 6, 4, 10);
    fresh[0].advantages = vec![0.3, -1.0, 2.0, 0.0, 0.5, 0.1];
    let lp = rollout_logprobs(&fresh);
    let v = grpo_objective(&fresh, &lp, &lp, &ObjectiveConfig::default()).map_err(|e| Failure::Check(e.to_string()))?;
    let want = fresh[0].weight.unwrap() * 1.9 / 6.0;
    ensure!((v - want).abs() <= 1e-12, "fresh policy {v} vs {want}");
    Ok(format!("100 instances, max |diff| {worst:.1e}, corner cases exact"))
}

// 4 -------------------------------------------------------------------------

fn gradient_check() -> Verdict {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(200 + seed);
        let vocab = rng.gen_range(4..=16);
        let positions = rng.gen_range(1..=5);
        let policy = ToyPolicy {
            logits: (0..positions).map(|_| (0..vocab).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect(),
        };
        let n_groups = rng.gen_range(1..=3);
        let mut groups = random_groups(&mut rng, n_groups, 4, positions, vocab as u32);
        let cur = policy.score(&groups);
        for (g, cg) in groups.iter_mut().zip(&cur) {
            for (c, lc) in g.candidates.iter_mut().zip(cg) {
                c.rollout_logprobs = lc.iter().map(|x| (x + rng.gen_range(-0.5..0.5)).min(0.0)).collect();
            }
        }
        let reff = perturb(&mut rng, &cur, 0.3);
        let cfg = ObjectiveConfig { kl_coefficient: 0.05, ..Default::default() };
        let (_, analytic) = policy.objective_grad(&groups, &reff, &cfg).map_err(|e| Failure::Check(e.to_string()))?;

        let h = 1e-6;
        let mut err = 0.0;
        let mut norm = 0.0;
        for t in 0..positions {
            for v in 0..vocab {
                let mut p = policy.clone();
                p.logits[t][v] += h;
                let up = p.objective(&groups, &reff, &cfg).unwrap();
                p.logits[t][v] -= 2.0 * h;
                let down = p.objective(&groups, &reff, &cfg).unwrap();
                let numeric = (up - down) / (2.0 * h);
                err += (analytic[t][v] - numeric).powi(2);
                norm += numeric * numeric;
            }
        }
        let rel = err.sqrt() / norm.sqrt().max(1e-12);
        ensure!(rel < 1e-4, "instance {seed}: relative error {rel:.2e}");
        worst = worst.max(rel);
    }
    within(start.elapsed(), 30.0, "gradient check")?;
    Ok(format!("20 instances, worst relative error {worst:.2e}, {:.2}s", start.elapsed().as_secs_f64()))
}

// 5 -------------------------------------------------------------------------

fn differential_oracle() -> Verdict {
    let start = Instant::now();
    let problems = corpus();
    ensure!(problems.len() >= 20, "only {} fixture problems", problems.len());
    let sb = Sandbox::default();
    let missing = missing_toolchains(&sb);
    let runnable: Vec<LanguageId> =
        langs().languages().iter().filter(|l| missing.iter().all(|(m, _)| m != *l)).cloned().collect();

    let mut jobs = Vec::new();
    for p in &problems {
        ensure!(p.record.references.len() == 3, "{}: {} references", p.record.suite_id, p.record.references.len());
        let suite = p.record.suite();
        for lang in &runnable {
            let h = emit_harness(&suite, lang).map_err(|e| Failure::Check(format!("{}: {e}", suite.suite_id)))?;
            jobs.push((p.record.references[lang.as_str()].clone(), lang.clone(), h.clone(), true));
            ensure!(p.mutants[lang.as_str()].len() == 1, "{} {lang}: expected one mutant", suite.suite_id);
            jobs.push((p.mutants[lang.as_str()][0].clone(), lang.clone(), h, false));
        }
    }
    let workers = std::thread::available_parallelism().map_or(4, |n| n.get());
    let lim = ExecutionLimits::default();
    let results = bounded_map(&jobs, workers, |(src, lang, h, _)| sb.verify(src, lang, h, &lim));
    let mut per_lang: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for ((_, lang, h, good), res) in jobs.iter().zip(results) {
        let (v, _) = res.map_err(|e| Failure::Check(format!("{} {lang}: {e}", h.suite_id)))?;
        let e = per_lang.entry(lang.to_string()).or_default();
        if *good {
            ensure!(v.outcome == Outcome::Pass, "{} {lang} reference: {:?} {}", h.suite_id, v.outcome, v.diagnostics);
            e.0 += 1;
        } else {
            ensure!(v.outcome != Outcome::Pass, "{} {lang} mutant passed", h.suite_id);
            e.1 += 1;
        }
    }
    within(start.elapsed(), 300.0, "differential oracle")?;
    let summary = per_lang
        .iter()
        .map(|(l, (r, m))| format!("{l} {r}/{n} references pass, {m}/{n} mutants fail", n = problems.len()))
        .collect::<Vec<_>>()
        .join("; ");
    if missing.is_empty() {
        Ok(format!("{} problems: {summary}", problems.len()))
    } else {
        let why = missing.iter().map(|(l, e)| format!("{l}: {e}")).collect::<Vec<_>>().join("; ");
        Err(Failure::Toolchain(format!("not executed: {why}. Executed: {summary}")))
    }
}

// 6 -------------------------------------------------------------------------

fn square_suite() -> TestSuite {
    let sig = EntrypointSignature::new("square", vec![SemanticType::Int], SemanticType::Int);
    let cases = (0..8).map(|i| TestCase { args: vec![LiteralValue::Int(i)], expected: LiteralValue::Int(i * i) }).collect();
    TestSuite::new("square", sig, cases)
}

fn sandbox_verdicts() -> Verdict {
    let sb = Sandbox::default();
    let suite = square_suite();
    let lim = ExecutionLimits::default().with_run_timeout(2.0);
    let programs: [(&str, &str, Outcome); 10] = [
        ("python", "def square(x):\n    return x * x\n", Outcome::Pass),
        ("python", "def square(x):\n    return x *\n", Outcome::CompileError),
        ("python", "def square(x):\n    raise ValueError('boom')\n", Outcome::RuntimeError),
        ("python", "def square(x):\n    while True:\n        pass\n", Outcome::Timeout),
        ("python", "def square(x):\n    return 0 if x == 7 else x * x\n", Outcome::WrongAnswer),
        ("cpp", "long long square(long long x) { return x * x; }\n", Outcome::Pass),
        ("cpp", "long long square(long long x) { return x * ; }\n", Outcome::CompileError),
        ("cpp", "#include <cstdlib>\nlong long square(long long x) { if (x == 3) std::abort(); return x * x; }\n", Outcome::RuntimeError),
        ("cpp", "long long square(long long x) { volatile long long s = 0; while (true) s += x; return s; }\n", Outcome::Timeout),
        ("cpp", "long long square(long long x) { return x == 7 ? 0 : x * x; }\n", Outcome::WrongAnswer),
    ];
    let mut seen = BTreeSet::new();
    for (lang, src, want) in programs {
        let lang = LanguageId::new(lang);
        let h = emit_harness(&suite, &lang).map_err(|e| Failure::Check(e.to_string()))?;
        let (v, r) = sb.verify(src, &lang, &h, &lim).map_err(|e| Failure::Check(format!("{lang}: {e}")))?;
        ensure!(v.outcome == want, "{lang} expected {want:?}, got {:?}: {}", v.outcome, v.diagnostics);
        ensure!(r == u8::from(want == Outcome::Pass), "{lang} {want:?} has reward {r}");
        if want == Outcome::WrongAnswer {
            ensure!(v.first_failing_case == Some(7), "{lang}: 7/8 candidate failed at {:?}", v.first_failing_case);
        }
        seen.insert(format!("{:?}", v.outcome));
    }
    ensure!(seen.len() == Outcome::ALL.len(), "outcomes seen: {seen:?}");

    let py = LanguageId::python();
    let h = emit_harness(&suite, &py).map_err(|e| Failure::Check(e.to_string()))?;
    let copies = vec![programs[0].1.to_string(); 8];
    for res in sb.verify_group(&copies, &py, &h, &lim, 4) {
        let (v, r) = res.map_err(|e| Failure::Check(e.to_string()))?;
        ensure!((v.outcome, r) == (Outcome::Pass, 1), "replicated pass gave {:?}", v.outcome);
    }
    Ok(format!("{} outcomes over python and cpp, 7/8 passing gives reward 0", seen.len()))
}

// 7 -------------------------------------------------------------------------

fn pool_mechanics() -> Verdict {
    ensure!(exploration_capacity(3, 256) == 512, "capacity(3, 256) = {}", exploration_capacity(3, 256));
    ensure!(TrainConfig::default().explore_capacity() == 512, "default capacity");

    let problems = corpus();
    let data = records(&problems);
    let verifier = reference_verifier(&problems);
    let policy = ScriptedPolicy::new(scripted_table(&problems, &LanguageId::python()), 3).with_corruption(0.5);
    let b = 6;
    let cfg = TrainConfig { num_steps: 200, batch_size: b, group_size: 4, rng_seed: 17, ..TrainConfig::default() };
    let cap = 2 * b;
    ensure!(cfg.explore_capacity() == cap, "capacity {} != 2B", cfg.explore_capacity());
    let seeds: BTreeSet<&str> = data.iter().map(|r| r.suite_id.as_str()).collect();
    let pivot = LanguageId::python();

    let mut trainer = Trainer::new(cfg.clone(), &data).map_err(|e| Failure::Check(e.to_string()))?;
    let (mut enqueued, mut full_steps, mut max_size) = (0usize, 0usize, 0usize);
    for _ in 0..200 {
        let before = trainer.state().explore.len();
        let batch = trainer.step(&policy, &verifier).map_err(|e| Failure::Check(e.to_string()))?;
        let m = &batch.metrics;
        let after = &trainer.state().explore;
        max_size = max_size.max(after.len());
        ensure!(after.len() <= cap && m.explore_size <= cap, "step {}: pool size {} > {cap}", m.step, after.len());
        if before >= b {
            full_steps += 1;
            ensure!(m.explore_sourced == b, "step {}: {} of {b} explore-sourced with {before} queued", m.step, m.explore_sourced);
            ensure!(batch.items.iter().all(|i| i.source_lang != pivot), "step {}: pivot source in an all-explore batch", m.step);
            ensure!(m.enqueued == 0, "step {}: explored items enqueued {}", m.step, m.enqueued);
        }
        let fresh: Vec<_> = after.iter().filter(|e| e.inserted_step == m.step).collect();
        ensure!(fresh.len() == m.enqueued.min(cap), "step {}: {} new entries, {} enqueued", m.step, fresh.len(), m.enqueued);
        for e in fresh {
            ensure!(e.origin == Origin::Explored && e.check(&pivot).is_ok(), "step {}: bad entry {:?}", m.step, e.suite_ref);
            let ancestor = e.seed_ancestor.as_deref().unwrap_or("");
            ensure!(seeds.contains(ancestor), "step {}: ancestor `{ancestor}` is not a seed item", m.step);
            let suite = trainer.suite(&e.suite_ref).expect("known suite");
            let h = emit_harness(suite, &e.code.language).map_err(|e| Failure::Check(e.to_string()))?;
            let (_, r) = verifier.verify(&e.code.source_text, &e.code.language, &h, &cfg.limits).map_err(|e| Failure::Check(e.to_string()))?;
            ensure!(r == 1, "step {}: enqueued entry has reward {r}", m.step);
        }
        enqueued += m.enqueued;
    }
    ensure!(full_steps > 0 && enqueued > 0, "run never exercised the exploration pool");
    Ok(format!("200 steps, B={b}, max pool {max_size}/{cap}, {enqueued} enqueued, {full_steps} all-explore batches"))
}

// 8 -------------------------------------------------------------------------

fn bootstrapping_coverage() -> Verdict {
    let mut problems = corpus();
    problems.truncate(10);
    let data = records(&problems);
    let policy = ScriptedPolicy::new(scripted_table(&problems, &LanguageId::python()), 1);
    let verifier = reference_verifier(&problems);
    let cfg = TrainConfig { num_steps: 1000, batch_size: 4, group_size: 4, rng_seed: 23, ..TrainConfig::default() };
    let mut trainer = Trainer::new(cfg, &data).map_err(|e| Failure::Check(e.to_string()))?;

    let mut batches: Vec<TrainingBatch> = Vec::new();
    let mut seed_draws = 0;
    let mut enqueued_before = false;
    while seed_draws < 30 {
        let batch = trainer.step(&policy, &verifier).map_err(|e| Failure::Check(e.to_string()))?;
        let m = &batch.metrics;
        seed_draws += m.batch_size - m.explore_sourced;
        if !enqueued_before {
            let non_pivot = batch.items.iter().find(|i| i.source_lang != LanguageId::python());
            ensure!(non_pivot.is_none(), "step {}: non-pivot source before the first enqueue", m.step);
            ensure!(m.directions.keys().all(|k| k.starts_with("python->")), "step {}: {:?}", m.step, m.directions.keys());
        }
        enqueued_before |= m.enqueued > 0;
        batches.push(batch);
        if observed_directions(&batches).len() == 6 {
            break;
        }
    }
    let seen = observed_directions(&batches);
    ensure!(seen.len() == 6, "after {seed_draws} seed draws only {} directions: {seen:?}", seen.len());
    Ok(format!("6 directions after {} steps and {seed_draws} seed draws", batches.len()))
}

// 9 -------------------------------------------------------------------------

struct Silent;

impl Policy for Silent {
    fn generate(&self, req: &GenerationRequest) -> Result<Vec<Generation>, PolicyError> {
        Ok(vec![Generation::new(String::new(), vec![], vec![]); req.num_candidates])
    }

    fn describe(&self) -> String {
        "empty".into()
    }
}

/// Correct translations for the first `k` problems in every direction; the
/// rest get a semantic mutant (python to cpp) or nothing.
fn subset_policy(problems: &[Problem], k: usize) -> ScriptedPolicy {
    let full = scripted_table(problems, &LanguageId::python());
    let mut table = TranslationTable::default();
    for p in &problems[..k] {
        for (from, src) in &p.record.references {
            for to in p.record.references.keys().filter(|t| *t != from) {
                let to = LanguageId::new(to.as_str());
                table.insert(src, &to, full.get(src, &to).expect("reference translation").clone());
            }
        }
    }
    for p in &problems[k..] {
        let wrong = p.mutants["cpp"][0].clone();
        table.insert(&p.record.references["python"], &LanguageId::cpp(), TableEntry { translation: wrong, mutants: vec![] });
    }
    ScriptedPolicy::new(table, 0)
}

fn run_eval(
    policy: &dyn Policy,
    verifier: &dyn Verifier,
    data: &[DatasetRecord],
    dirs: &[(LanguageId, LanguageId)],
) -> Result<Vec<DirectionResult>, Failure> {
    let opts = EvalOptions { parallelism: std::thread::available_parallelism().map_or(4, |n| n.get()), ..EvalOptions::default() };
    ensure!(opts.decode.mode == DecodeMode::Greedy, "evaluation decoding is not greedy");
    evaluate_ca1(policy, verifier, data, dirs, &opts).map(|(r, _)| r).map_err(|e| Failure::Check(e.to_string()))
}

fn evaluator_checks(verifier: &dyn Verifier, problems: &[Problem], dirs: &[(LanguageId, LanguageId)]) -> Result<(), Failure> {
    let data = records(problems);
    let oracle = ScriptedPolicy::new(scripted_table(problems, &LanguageId::python()), 0);
    for r in run_eval(&oracle, verifier, &data, dirs)? {
        ensure!(r.ca1 == 1.0, "oracle {}->{}: {} ({} of {})", r.source_lang, r.target_lang, r.ca1, r.passed, r.attempted);
    }
    for r in run_eval(&Silent, verifier, &data, dirs)? {
        ensure!(r.ca1 == 0.0, "empty {}->{}: {}", r.source_lang, r.target_lang, r.ca1);
    }
    let k = 3;
    let expected = k as f64 / problems.len() as f64;
    for r in run_eval(&subset_policy(problems, k), verifier, &data, dirs)? {
        ensure!(r.ca1 == expected, "subset {}->{}: {} expected {expected}", r.source_lang, r.target_lang, r.ca1);
    }
    Ok(())
}

fn evaluator() -> Verdict {
    let mut problems = corpus();
    problems.truncate(10);
    let all = langs().directions();

    // every direction through the lookup verifier, then the table shape
    evaluator_checks(&reference_verifier(&problems), &problems, &all)?;
    let res = run_eval(
        &ScriptedPolicy::new(scripted_table(&problems, &LanguageId::python()), 0),
        &reference_verifier(&problems),
        &records(&problems),
        &all,
    )?;
    let table = render_table(&[("oracle".into(), res.clone())]);
    let lines: Vec<&str> = table.lines().collect();
    ensure!(lines.len() == 3, "table has {} lines", lines.len());
    let header: Vec<&str> = lines[0].trim_matches('|').split('|').map(str::trim).collect();
    ensure!(header == ["model", "P->J", "P->C", "J->P", "J->C", "C->P", "C->J", "Avg"], "header {header:?}");
    ensure!(lines[2].matches("100.00").count() == 7, "row {}", lines[2]);
    ensure!(average_ca1(&res) == 1.0, "average");

    // and the same checks with real execution
    let sb = Sandbox::default();
    let missing = missing_toolchains(&sb);
    let runnable: Vec<_> = all.iter().filter(|(_, t)| missing.iter().all(|(m, _)| m != t)).cloned().collect();
    evaluator_checks(&sb, &problems, &runnable)?;
    let executed = runnable.iter().map(|(s, t)| format!("{s}->{t}")).collect::<Vec<_>>().join(", ");
    if missing.is_empty() {
        Ok("oracle 1.0, empty 0.0, subset 0.3 in all 6 directions with execution; table shape ok".into())
    } else {
        let blocked: Vec<_> = all.iter().filter(|d| !runnable.contains(d)).map(|(s, t)| format!("{s}->{t}")).collect();
        let why = missing.iter().map(|(l, e)| format!("{l}: {e}")).collect::<Vec<_>>().join("; ");
        Err(Failure::Toolchain(format!(
            "{} not executable ({why}). Lookup verifier: all 6 directions pass; executed: {executed}",
            blocked.join(", ")
        )))
    }
}

// 10, 11 --------------------------------------------------------------------

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_polytrans"))
}

fn run_cli(args: &[&str], config: &Path) -> Result<String, Failure> {
    let out = bin().arg("--config").arg(config).args(args).output().map_err(|e| Failure::Check(e.to_string()))?;
    ensure!(out.status.success(), "`{}` failed: {}", args.join(" "), String::from_utf8_lossy(&out.stderr));
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn write_config(dir: &Path, name: &str, paths: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    let text = format!("[paths]\ncorpus = {:?}\noutput_dir = \"out\"\n{paths}\n{body}", fixture_root().to_str().unwrap());
    fs::write(&p, text).unwrap();
    p
}

fn strip_wall_time(v: &mut serde_json::Value) {
    match v {
        serde_json::Value::Object(m) => {
            m.remove("wall_time");
            m.values_mut().for_each(strip_wall_time);
        }
        serde_json::Value::Array(a) => a.iter_mut().for_each(strip_wall_time),
        _ => {}
    }
}

fn normalized(path: &Path) -> Vec<u8> {
    let bytes = fs::read(path).unwrap();
    let name = path.to_string_lossy();
    let json_lines: Vec<&[u8]> = if name.ends_with(".jsonl") {
        bytes.split(|&b| b == b'\n').filter(|l| !l.is_empty()).collect()
    } else if name.ends_with(".json") {
        vec![&bytes[..]]
    } else {
        return bytes;
    };
    let mut out = Vec::new();
    for l in json_lines {
        let mut v: serde_json::Value = serde_json::from_slice(l).unwrap();
        strip_wall_time(&mut v);
        out.extend(serde_json::to_vec(&v).unwrap());
        out.push(b'\n');
    }
    out
}

fn artifacts(out: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    for dir in [out.to_path_buf(), out.join("report")] {
        for e in fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            if p.is_file() && (name.starts_with("batch_") || name == "metrics.jsonl" || dir.ends_with("report")) {
                files.insert(p.strip_prefix(out).unwrap().to_string_lossy().into_owned(), normalized(&p));
            }
        }
    }
    files
}

fn determinism() -> Verdict {
    let mut runs = Vec::new();
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let cfg = write_config(
            d.path(),
            "run.toml",
            "",
            "[train]\nnum_steps = 12\nbatch_size = 5\ngroup_size = 4\nsandbox_parallelism = 3\n\n[policy.scripted]\ncorruption_rate = 0.5\n",
        );
        run_cli(&["--seed", "9", "train", "--verifier", "reference"], &cfg)?;
        run_cli(&["report"], &cfg)?;
        runs.push(artifacts(&d.path().join("out")));
    }
    ensure!(runs[0].len() == 12 + 1 + 6, "artifacts: {:?}", runs[0].keys().collect::<Vec<_>>());
    ensure!(runs[0].keys().eq(runs[1].keys()), "artifact sets differ");
    for (name, a) in &runs[0] {
        ensure!(a == &runs[1][name], "{name} differs between runs");
    }
    Ok(format!("{} export and report files byte-identical modulo wall_time", runs[0].len()))
}

fn subsampling() -> Verdict {
    let start = Instant::now();
    let problems = corpus();
    let data = records(&problems);
    for f in [1.0, 0.5, 0.25] {
        for r in &data {
            let s = r.suite();
            let n = s.len();
            let want = ((f * n as f64).round() as usize).max(1);
            ensure!(subsample_size(n, f) == want, "size({n}, {f})");
            let sub = subsample_suite(&s, f, 42);
            ensure!(sub.len() == want, "{} at {f}: {} cases, expected {want}", s.suite_id, sub.len());
            ensure!(sub.cases.iter().all(|c| s.cases.contains(c)), "{} at {f}: case not in the original", s.suite_id);
            ensure!(sub == subsample_suite(&s, f, 42), "{} at {f}: not deterministic", s.suite_id);
            if f == 1.0 {
                ensure!(sub.cases == s.cases, "{}: identity subsample changed cases", s.suite_id);
            }
        }
        let cfg = TrainConfig { test_fraction: f, batch_size: 2, ..TrainConfig::default() };
        let trainer = Trainer::new(cfg, &data).map_err(|e| Failure::Check(e.to_string()))?;
        for r in &data {
            let want = ((f * r.suite().len() as f64).round() as usize).max(1);
            ensure!(trainer.suite(&r.suite_id).map(TestSuite::len) == Some(want), "trainer suite {} at {f}", r.suite_id);
        }
    }

    // the full pipeline with real execution over python and C++
    let sb = Sandbox::default();
    for l in [LanguageId::python(), LanguageId::cpp()] {
        sb.check_toolchain(&l).map_err(|e| Failure::Toolchain(e.to_string()))?;
    }
    let mut rates = Vec::new();
    for f in ["1.0", "0.5", "0.25"] {
        let dir = tempfile::tempdir().unwrap();
        let body = "[train]\nnum_steps = 2\nbatch_size = 3\ngroup_size = 2\n\n[train.languages]\nlanguages = [\"python\", \"cpp\"]\npivot = \"python\"\n\n[policy.scripted]\ncorruption_rate = 0.5\n";
        let cfg = write_config(dir.path(), "build.toml", "", body);
        let seed = dir.path().join("seed.jsonl");
        let out = bin().arg("--config").arg(&cfg).args(["build-seed", "--scaffolds"]).arg(fixture_root()).arg("--out").arg(&seed).output().unwrap();
        ensure!(out.status.success(), "build-seed: {}", String::from_utf8_lossy(&out.stderr));
        run_cli(&["transpile", "--dataset", seed.to_str().unwrap(), "--out", dir.path().join("h").to_str().unwrap()], &cfg)?;
        let cfg = write_config(dir.path(), "run.toml", "seed_dataset = \"seed.jsonl\"\n", body);
        run_cli(&["--fraction", f, "train", "--verifier", "sandbox"], &cfg)?;
        run_cli(&["report"], &cfg)?;
        let out = dir.path().join("out");
        let metrics = fs::read_to_string(out.join("metrics.jsonl")).unwrap();
        let mut passes = 0;
        let mut candidates = 0;
        for line in metrics.lines() {
            let m: serde_json::Value = serde_json::from_str(line).unwrap();
            ensure!(m["sandbox_errors"] == 0, "fraction {f}: sandbox errors");
            for d in m["directions"].as_object().unwrap().values() {
                passes += d["passes"].as_u64().unwrap();
                candidates += d["candidates"].as_u64().unwrap();
            }
        }
        // half of every group is a mutant
        ensure!(candidates > 0 && 2 * passes == candidates, "fraction {f}: {passes} of {candidates} passed");
        ensure!(out.join("report/summary.json").is_file(), "fraction {f}: no report");
        rates.push(format!("{f}: {passes}/{candidates}"));
    }
    Ok(format!(
        "cardinalities exact for {} suites; pipeline passes {}, {:.1}s",
        data.len(),
        rates.join(", "),
        start.elapsed().as_secs_f64()
    ))
}

// 12 ------------------------------------------------------------------------

fn config_defaults() -> Verdict {
    let d = RunConfig::default();
    let t = &d.train;
    ensure!(t.group_size == 8, "G = {}", t.group_size);
    ensure!(t.batch_size == 256, "B = {}", t.batch_size);
    ensure!(t.clip_epsilon == 0.2, "epsilon = {}", t.clip_epsilon);
    ensure!(t.kl_coefficient == 0.01, "beta = {}", t.kl_coefficient);
    ensure!(t.learning_rate == 1e-6, "learning rate = {}", t.learning_rate);
    ensure!(d.eval.decode.mode == DecodeMode::Greedy, "eval decoding {:?}", d.eval.decode.mode);
    ensure!(EvalOptions::default().decode.mode == DecodeMode::Greedy, "evaluator default decoding");

    let schema = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../config/schema.toml");
    let text = fs::read_to_string(&schema).map_err(|e| Failure::Check(format!("{}: {e}", schema.display())))?;
    let parsed = RunConfig::from_toml(&text).map_err(Failure::Check)?;
    ensure!(parsed == d, "schema file does not match the built-in defaults");
    let empty = RunConfig::from_toml("").map_err(Failure::Check)?;
    ensure!(empty == d, "empty config differs from defaults");
    Ok("G=8 B=256 eps=0.2 beta=0.01 lr=1e-6 greedy eval; schema file agrees".into())
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Verdict); 12] = [
        ("weight algebra", weight_algebra),
        ("advantage normalization", advantage_suite),
        ("objective oracle", objective_oracle_suite),
        ("gradient check", gradient_check),
        ("transpiler differential oracle", differential_oracle),
        ("sandbox verdicts", sandbox_verdicts),
        ("pool mechanics", pool_mechanics),
        ("bootstrapping coverage", bootstrapping_coverage),
        ("evaluator", evaluator),
        ("determinism", determinism),
        ("test subsampling", subsampling),
        ("config defaults", config_defaults),
    ];
    let only: Option<usize> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    let strict = std::env::var_os("ACCEPTANCE_REQUIRE_TOOLCHAINS").is_some();
    panic::set_hook(Box::new(|_| {}));

    let (mut passed, mut failed, mut blocked) = (0, Vec::new(), Vec::new());
    for (i, (name, f)) in criteria.iter().enumerate() {
        let n = i + 1;
        if only.is_some_and(|o| o != n) {
            continue;
        }
        let result = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(Failure::Check(format!("panicked: {}", msg.unwrap_or_default())))
        });
        match result {
            Ok(detail) => {
                passed += 1;
                println!("PASS criterion {n:>2} ({name}): {detail}");
            }
            Err(Failure::Check(why)) => {
                failed.push(n);
                println!("FAIL criterion {n:>2} ({name}): {why}");
            }
            Err(Failure::Toolchain(why)) => {
                blocked.push(n);
                println!("FAIL criterion {n:>2} ({name}): missing toolchain. {why}");
            }
        }
    }
    println!("acceptance: {passed} passed, {} failed", failed.len() + blocked.len());
    if !blocked.is_empty() && !strict {
        println!("criteria {blocked:?} failed only for missing toolchains; set ACCEPTANCE_REQUIRE_TOOLCHAINS=1 to fail the run on them");
    }
    if failed.is_empty() && (blocked.is_empty() || !strict) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
