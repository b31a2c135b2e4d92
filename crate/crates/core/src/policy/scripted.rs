//! Table-driven deterministic policy for tests and simulated runs.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, LazyLock};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regex::Regex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{token_id, DecodeMode, Generation, GenerationRequest, Policy, PolicyError};
use crate::lang::LanguageId;
use crate::testspec::DatasetRecord;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableEntry {
    pub translation: String,
    /// Known-wrong variants used when a candidate is corrupted.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub mutants: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct TableRecord {
    source: String,
    target_lang: LanguageId,
    translation: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    mutants: Vec<String>,
}

fn normalize(source: &str) -> String {
    let mut out = String::with_capacity(source.len());
    for line in source.trim().lines() {
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

/// Maps (source text, target language) to a known translation. Source text is
/// compared after trimming trailing whitespace on every line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TranslationTable {
    map: HashMap<(String, String), TableEntry>,
}

impl TranslationTable {
    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn insert(&mut self, source: &str, target: &LanguageId, entry: TableEntry) {
        self.map.insert((normalize(source), target.to_string()), entry);
    }

    pub fn get(&self, source: &str, target: &LanguageId) -> Option<&TableEntry> {
        self.map.get(&(normalize(source), target.to_string()))
    }

    /// Every ordered pair of available sources in each record (the pivot
    /// source plus `references`) becomes an entry.
    pub fn from_records(records: &[DatasetRecord], pivot: &LanguageId) -> Self {
        let mut t = Self::default();
        for r in records {
            let mut sources: BTreeMap<String, &str> =
                r.references.iter().map(|(k, v)| (k.clone(), v.as_str())).collect();
            sources.entry(pivot.to_string()).or_insert(&r.pivot_source);
            for (from, src) in &sources {
                for (to, dst) in &sources {
                    if from != to {
                        t.insert(src, &LanguageId::new(to.as_str()), TableEntry {
                            translation: dst.to_string(),
                            mutants: Vec::new(),
                        });
                    }
                }
            }
        }
        t
    }

    /// Attaches a mutant to every entry whose translation is `reference`.
    pub fn add_mutant(&mut self, target: &LanguageId, reference: &str, mutant: &str) {
        let want = normalize(reference);
        for ((_, lang), e) in self.map.iter_mut() {
            if lang == target.as_str() && normalize(&e.translation) == want {
                e.mutants.push(mutant.to_string());
            }
        }
    }

    pub fn read_jsonl(path: impl AsRef<Path>) -> std::io::Result<Self> {
        let mut t = Self::default();
        for (i, line) in BufReader::new(fs::File::open(path)?).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let r: TableRecord = serde_json::from_str(&line).map_err(|e| {
                std::io::Error::new(std::io::ErrorKind::InvalidData, format!("line {}: {e}", i + 1))
            })?;
            t.insert(&r.source, &r.target_lang, TableEntry { translation: r.translation, mutants: r.mutants });
        }
        Ok(t)
    }

    /// Written in sorted key order so files are reproducible.
    pub fn write_jsonl(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        let mut keys: Vec<_> = self.map.keys().collect();
        keys.sort();
        let mut f = std::io::BufWriter::new(fs::File::create(path)?);
        for k in keys {
            let e = &self.map[k];
            let rec = TableRecord {
                source: k.0.clone(),
                target_lang: LanguageId::new(k.1.as_str()),
                translation: e.translation.clone(),
                mutants: e.mutants.clone(),
            };
            serde_json::to_writer(&mut f, &rec)?;
            f.write_all(b"\n")?;
        }
        f.flush()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScriptedConfig {
    /// JSONL translation table.
    pub table: Option<PathBuf>,
    /// Fraction of each group's candidates that are corrupted.
    pub corruption_rate: f64,
    /// Per-target overrides of `corruption_rate`.
    pub target_corruption: BTreeMap<String, f64>,
    pub seed: u64,
}

impl Default for ScriptedConfig {
    fn default() -> Self {
        Self { table: None, corruption_rate: 0.0, target_corruption: BTreeMap::new(), seed: 0 }
    }
}

/// Returns table translations wrapped in a code fence. Exactly
/// round(rate·G) candidates per request are corrupted, chosen under a seed
/// derived from the request and the policy seed. Unknown sources yield empty
/// completions.
#[derive(Debug, Clone)]
pub struct ScriptedPolicy {
    table: Arc<TranslationTable>,
    corruption_rate: f64,
    target_corruption: BTreeMap<String, f64>,
    seed: u64,
}

static PIECE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\w+|\s+|[^\w\s]").unwrap());

/// Appended to break compilation in every reference language.
const SYNTAX_BREAK: &str = "}}} @@@ )))\n";

impl ScriptedPolicy {
    pub fn new(table: TranslationTable, seed: u64) -> Self {
        Self { table: Arc::new(table), corruption_rate: 0.0, target_corruption: BTreeMap::new(), seed }
    }

    pub fn from_config(config: &ScriptedConfig, fallback: TranslationTable) -> std::io::Result<Self> {
        let table = match &config.table {
            Some(p) => TranslationTable::read_jsonl(p)?,
            None => fallback,
        };
        Ok(Self::new(table, config.seed)
            .with_corruption(config.corruption_rate)
            .with_target_corruption(config.target_corruption.clone()))
    }

    pub fn with_corruption(mut self, rate: f64) -> Self {
        assert!((0.0..=1.0).contains(&rate), "corruption rate must be in [0, 1]");
        self.corruption_rate = rate;
        self
    }

    pub fn with_target_corruption(mut self, rates: BTreeMap<String, f64>) -> Self {
        self.target_corruption = rates;
        self
    }

    pub fn table(&self) -> &TranslationTable {
        &self.table
    }

    fn request_seed(&self, req: &GenerationRequest) -> u64 {
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        h.update(req.prompt().as_bytes());
        h.update((req.num_candidates as u64).to_le_bytes());
        h.update([u8::from(req.decode.mode == DecodeMode::Greedy)]);
        let d = h.finalize();
        u64::from_le_bytes(d[..8].try_into().unwrap())
    }

    /// Indices of the candidates that will be corrupted for `req`.
    pub fn corrupted_indices(&self, req: &GenerationRequest) -> Vec<usize> {
        let rate = self.target_corruption.get(req.target.as_str()).copied().unwrap_or(self.corruption_rate);
        let g = req.num_candidates;
        let k = ((rate * g as f64).round() as usize).min(g);
        let mut rng = ChaCha8Rng::seed_from_u64(self.request_seed(req));
        let mut idx = sample(&mut rng, g, k).into_vec();
        idx.sort_unstable();
        idx
    }

    fn tokenize(completion: &str, rng: &mut ChaCha8Rng) -> (Vec<u32>, Vec<f64>) {
        let mut tokens: Vec<u32> = PIECE.find_iter(completion).map(|m| token_id(m.as_str())).collect();
        if tokens.is_empty() {
            tokens.push(0);
        }
        let logprobs = tokens.iter().map(|_| -(1e-3 + 2.0 * rng.gen::<f64>())).collect();
        (tokens, logprobs)
    }
}

impl Policy for ScriptedPolicy {
    fn generate(&self, req: &GenerationRequest) -> Result<Vec<Generation>, PolicyError> {
        req.validate()?;
        let entry = self.table.get(&req.source.source_text, &req.target);
        let corrupted = self.corrupted_indices(req);
        let mut rng = ChaCha8Rng::seed_from_u64(self.request_seed(req));
        rng.set_stream(1);
        let mut out = Vec::with_capacity(req.num_candidates);
        for j in 0..req.num_candidates {
            let completion = match entry {
                None => String::new(),
                Some(e) => {
                    let mut text = if corrupted.binary_search(&j).is_ok() {
                        if e.mutants.is_empty() {
                            let mut t = e.translation.clone();
                            if !t.ends_with('\n') {
                                t.push('\n');
                            }
                            t + SYNTAX_BREAK
                        } else {
                            e.mutants[rng.gen_range(0..e.mutants.len())].clone()
                        }
                    } else {
                        e.translation.clone()
                    };
                    if !text.ends_with('\n') {
                        text.push('\n');
                    }
                    format!("```{}\n{text}```\n", req.target.fence_tag())
                }
            };
            let (tokens, logprobs) = Self::tokenize(&completion, &mut rng);
            out.push(Generation::for_target(completion, &req.target, tokens, logprobs));
        }
        Ok(out)
    }

    fn describe(&self) -> String {
        format!("scripted(entries={}, corruption={}, seed={})", self.table.len(), self.corruption_rate, self.seed)
    }
}
