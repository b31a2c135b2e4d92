//! Seed pool and FIFO exploration pool.
//!
//! Batches are drawn from the exploration pool first (consuming entries) and
//! topped up from the seed pool, which is cycled in shuffled epochs. Only
//! verified rollouts of seed items are ever enqueued, so every explored entry
//! is exactly one hop from a seed.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lang::LanguageId;
use crate::testspec::{DatasetRecord, EntrypointSignature};

#[derive(Debug, Error)]
pub enum PoolError {
    #[error("seed pool is empty")]
    EmptySeed,
    #[error("duplicate seed suite `{0}`")]
    DuplicateSeed(String),
    #[error("invalid pool entry for `{suite}`: {reason}")]
    InvalidEntry { suite: String, reason: String },
    #[error("snapshot line {line}: {message}")]
    Snapshot { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeUnit {
    pub source_text: String,
    pub language: LanguageId,
    pub entrypoint: EntrypointSignature,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Origin {
    Seed,
    Explored,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolEntry {
    pub code: CodeUnit,
    pub suite_ref: String,
    pub origin: Origin,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed_ancestor: Option<String>,
    pub inserted_step: u64,
}

impl PoolEntry {
    pub fn seed(suite_ref: impl Into<String>, code: CodeUnit) -> Self {
        Self { code, suite_ref: suite_ref.into(), origin: Origin::Seed, seed_ancestor: None, inserted_step: 0 }
    }

    pub fn is_seed(&self) -> bool {
        self.origin == Origin::Seed
    }

    /// Checks the provenance invariants against the pivot language.
    pub fn check(&self, pivot: &LanguageId) -> Result<(), PoolError> {
        let fail = |reason: &str| {
            Err(PoolError::InvalidEntry { suite: self.suite_ref.clone(), reason: reason.to_string() })
        };
        if self.code.source_text.is_empty() {
            return fail("empty source");
        }
        match self.origin {
            Origin::Seed if &self.code.language != pivot => fail("seed entry not in pivot language"),
            Origin::Seed if self.seed_ancestor.is_some() => fail("seed entry with an ancestor"),
            Origin::Explored if &self.code.language == pivot => fail("explored entry in pivot language"),
            Origin::Explored if self.seed_ancestor.as_deref() != Some(&self.suite_ref) => {
                fail("explored entry must name its seed suite as ancestor")
            }
            _ => Ok(()),
        }
    }
}

/// Capacity of the exploration pool: one slot per non-pivot language per
/// rollout batch item.
pub fn exploration_capacity(language_count: usize, batch_size: usize) -> usize {
    language_count.saturating_sub(1) * batch_size
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplorationPool {
    queue: VecDeque<PoolEntry>,
    capacity: usize,
    evicted: u64,
}

impl ExplorationPool {
    pub fn new(capacity: usize) -> Self {
        Self { queue: VecDeque::with_capacity(capacity), capacity, evicted: 0 }
    }

    pub fn len(&self) -> usize {
        self.queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Entries dropped by the capacity rule so far.
    pub fn evicted(&self) -> u64 {
        self.evicted
    }

    /// Oldest first.
    pub fn iter(&self) -> impl Iterator<Item = &PoolEntry> {
        self.queue.iter()
    }

    /// Appends, evicting the oldest entry first when full.
    pub fn push(&mut self, entry: PoolEntry) {
        if self.capacity == 0 {
            self.evicted += 1;
            return;
        }
        while self.queue.len() >= self.capacity {
            self.queue.pop_front();
            self.evicted += 1;
        }
        self.queue.push_back(entry);
    }

    fn pop_front(&mut self) -> Option<PoolEntry> {
        self.queue.pop_front()
    }

    pub fn export(&self, path: impl AsRef<Path>) -> Result<(), PoolError> {
        write_entries(path, self.queue.iter())
    }

    pub fn import(path: impl AsRef<Path>, capacity: usize) -> Result<Self, PoolError> {
        let mut pool = Self::new(capacity);
        for e in read_entries(path)? {
            pool.push(e);
        }
        pool.evicted = 0;
        Ok(pool)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedPool {
    items: Vec<PoolEntry>,
    /// Permutation for the current epoch; empty before the first draw.
    order: Vec<usize>,
    cursor: usize,
    epoch: u64,
}

impl SeedPool {
    pub fn new(items: Vec<PoolEntry>, pivot: &LanguageId) -> Result<Self, PoolError> {
        if items.is_empty() {
            return Err(PoolError::EmptySeed);
        }
        let mut seen = BTreeSet::new();
        for e in &items {
            if !e.is_seed() {
                return Err(PoolError::InvalidEntry { suite: e.suite_ref.clone(), reason: "not a seed entry".into() });
            }
            e.check(pivot)?;
            if !seen.insert(e.suite_ref.as_str()) {
                return Err(PoolError::DuplicateSeed(e.suite_ref.clone()));
            }
        }
        Ok(Self { items, order: Vec::new(), cursor: 0, epoch: 0 })
    }

    pub fn from_records(records: &[DatasetRecord], pivot: &LanguageId) -> Result<Self, PoolError> {
        let items = records
            .iter()
            .map(|r| {
                PoolEntry::seed(
                    r.suite_id.clone(),
                    CodeUnit {
                        source_text: r.pivot_source.clone(),
                        language: pivot.clone(),
                        entrypoint: r.entrypoint.clone(),
                    },
                )
            })
            .collect();
        Self::new(items, pivot)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[PoolEntry] {
        &self.items
    }

    /// Position within the current epoch.
    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    /// Total seed draws so far.
    pub fn drawn(&self) -> u64 {
        self.epoch * self.items.len() as u64 + self.cursor as u64
    }

    pub fn contains(&self, suite_id: &str) -> bool {
        self.items.iter().any(|e| e.suite_ref == suite_id)
    }

    fn shuffle_for(&mut self, rng_seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        rng.set_stream(self.epoch);
        self.order = (0..self.items.len()).collect();
        self.order.shuffle(&mut rng);
    }

    fn next(&mut self, rng_seed: u64) -> PoolEntry {
        if self.order.is_empty() {
            self.shuffle_for(rng_seed);
        } else if self.cursor == self.items.len() {
            self.epoch += 1;
            self.cursor = 0;
            self.shuffle_for(rng_seed);
        }
        let e = self.items[self.order[self.cursor]].clone();
        self.cursor += 1;
        e
    }
}

/// Draws `batch_size` entries: the oldest exploration entries first (each
/// consumed), then seed entries in cursor order.
pub fn sample_batch(
    seed: &mut SeedPool,
    explore: &mut ExplorationPool,
    batch_size: usize,
    rng_seed: u64,
) -> Vec<PoolEntry> {
    assert!(batch_size >= 1, "batch_size must be at least 1");
    assert!(!seed.is_empty(), "seed pool must be non-empty");
    let e = explore.len().min(batch_size);
    let mut batch = Vec::with_capacity(batch_size);
    for _ in 0..e {
        batch.push(explore.pop_front().expect("length checked"));
    }
    while batch.len() < batch_size {
        batch.push(seed.next(rng_seed));
    }
    batch
}

/// Retains one passing candidate of a seed item as an explored entry.
/// Items that are themselves explored never enqueue.
pub fn enqueue_verified(
    explore: &mut ExplorationPool,
    batch_item: &PoolEntry,
    passing_candidates: &[CodeUnit],
    target: &LanguageId,
    step: u64,
    rng_seed: u64,
) -> Option<PoolEntry> {
    debug_assert_ne!(target, &batch_item.code.language);
    if !batch_item.is_seed() || passing_candidates.is_empty() {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let pick = &passing_candidates[rng.gen_range(0..passing_candidates.len())];
    debug_assert_eq!(&pick.language, target);
    let entry = PoolEntry {
        code: pick.clone(),
        suite_ref: batch_item.suite_ref.clone(),
        origin: Origin::Explored,
        seed_ancestor: Some(batch_item.suite_ref.clone()),
        inserted_step: step,
    };
    explore.push(entry.clone());
    Some(entry)
}

pub fn write_entries<'a>(
    path: impl AsRef<Path>,
    entries: impl IntoIterator<Item = &'a PoolEntry>,
) -> Result<(), PoolError> {
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    for e in entries {
        serde_json::to_writer(&mut f, e).map_err(std::io::Error::from)?;
        f.write_all(b"\n")?;
    }
    f.flush()?;
    Ok(())
}

pub fn read_entries(path: impl AsRef<Path>) -> Result<Vec<PoolEntry>, PoolError> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(fs::File::open(path)?).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| PoolError::Snapshot { line: i + 1, message: e.to_string() })?,
        );
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgeSummary {
    pub min: u64,
    pub median: u64,
    pub max: u64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoolStats {
    pub size: usize,
    pub by_language: BTreeMap<String, usize>,
    /// Steps since insertion, relative to `now`.
    pub age: Option<AgeSummary>,
}

pub fn inspect<'a>(entries: impl IntoIterator<Item = &'a PoolEntry>, now: u64) -> PoolStats {
    let mut by_language = BTreeMap::new();
    let mut ages = Vec::new();
    for e in entries {
        *by_language.entry(e.code.language.to_string()).or_insert(0) += 1;
        ages.push(now.saturating_sub(e.inserted_step));
    }
    ages.sort_unstable();
    let age = (!ages.is_empty()).then(|| AgeSummary {
        min: ages[0],
        median: ages[ages.len() / 2],
        max: ages[ages.len() - 1],
        mean: ages.iter().sum::<u64>() as f64 / ages.len() as f64,
    });
    PoolStats { size: ages.len(), by_language, age }
}
