//! Per-step training batches and their line-delimited export format.
//!
//! A batch file starts with a header record `{"step", "metrics"}` followed by
//! one record per item:
//! `{"step", "suite_id", "source_lang", "target_lang", "weight", "prompt",
//!   "candidates": [{"tokens", "rollout_logprobs", "reward", "advantage"}]}`.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::lang::LanguageId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchCandidate {
    pub tokens: Vec<u32>,
    pub rollout_logprobs: Vec<f64>,
    pub reward: u8,
    pub advantage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchItem {
    pub suite_id: String,
    pub source_lang: LanguageId,
    pub target_lang: LanguageId,
    pub weight: f64,
    pub prompt: String,
    pub candidates: Vec<BatchCandidate>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DirectionStats {
    pub requests: u64,
    pub candidates: u64,
    pub passes: u64,
}

impl DirectionStats {
    pub fn reward_rate(&self) -> f64 {
        if self.candidates == 0 {
            0.0
        } else {
            self.passes as f64 / self.candidates as f64
        }
    }

    pub fn merge(&mut self, other: &DirectionStats) {
        self.requests += other.requests;
        self.candidates += other.candidates;
        self.passes += other.passes;
    }
}

/// Key used for direction maps, e.g. `python->cpp`.
pub fn direction_key(source: &LanguageId, target: &LanguageId) -> String {
    format!("{source}->{target}")
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StepMetrics {
    pub step: u64,
    pub batch_size: usize,
    /// Source items with at least one defined weight.
    pub items_defined: usize,
    /// Source items skipped because no candidate in any direction passed.
    pub items_skipped: usize,
    /// Batch entries drawn from the exploration pool.
    pub explore_sourced: usize,
    pub directions: BTreeMap<String, DirectionStats>,
    pub explore_size: usize,
    pub explore_capacity: usize,
    pub seed_epoch: u64,
    pub seed_cursor: usize,
    pub enqueued: usize,
    pub evicted: u64,
    pub policy_failures: usize,
    pub sandbox_errors: usize,
    pub extraction_empty: usize,
    pub objective: f64,
    /// Seconds. Not reproducible across runs.
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingBatch {
    pub step: u64,
    pub items: Vec<BatchItem>,
    pub metrics: StepMetrics,
}

#[derive(Serialize, Deserialize)]
struct Header {
    step: u64,
    metrics: StepMetrics,
}

#[derive(Serialize, Deserialize)]
struct ItemRecord {
    step: u64,
    #[serde(flatten)]
    item: BatchItem,
}

impl TrainingBatch {
    pub fn file_name(step: u64) -> String {
        format!("batch_{step:06}.jsonl")
    }
}

pub fn export_batch(batch: &TrainingBatch, path: impl AsRef<Path>) -> std::io::Result<()> {
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    serde_json::to_writer(&mut f, &Header { step: batch.step, metrics: batch.metrics.clone() })?;
    f.write_all(b"\n")?;
    for item in &batch.items {
        serde_json::to_writer(&mut f, &ItemRecord { step: batch.step, item: item.clone() })?;
        f.write_all(b"\n")?;
    }
    f.flush()
}

pub fn import_batch(path: impl AsRef<Path>) -> std::io::Result<TrainingBatch> {
    let bad = |line: usize, msg: String| std::io::Error::new(std::io::ErrorKind::InvalidData, format!("line {line}: {msg}"));
    let mut lines = BufReader::new(fs::File::open(path)?).lines().enumerate();
    let header: Header = match lines.next() {
        Some((_, l)) => serde_json::from_str(&l?).map_err(|e| bad(1, e.to_string()))?,
        None => return Err(bad(1, "missing header record".into())),
    };
    let mut items = Vec::new();
    for (i, l) in lines {
        let l = l?;
        if l.trim().is_empty() {
            continue;
        }
        let rec: ItemRecord = serde_json::from_str(&l).map_err(|e| bad(i + 1, e.to_string()))?;
        if rec.step != header.step {
            return Err(bad(i + 1, format!("step {} in a batch for step {}", rec.step, header.step)));
        }
        items.push(rec.item);
    }
    Ok(TrainingBatch { step: header.step, items, metrics: header.metrics })
}
