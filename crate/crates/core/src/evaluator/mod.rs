//! Benchmark evaluation: CA@1 per translation direction, failure
//! classification, and entrypoint-overlap filtering of training data.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lang::LanguageId;
use crate::orchestrator::direction_key;
use crate::policy::{DecodeParams, Generation, GenerationRequest, Policy};
use crate::pools::CodeUnit;
use crate::sandbox::{bounded_map, ExecutionLimits, Outcome, SandboxError, Verdict, Verifier};
use crate::testspec::{DatasetRecord, TestSuite};
use crate::transpiler::{emit_harness, render_declaration, TranspileError};

const DEFAULT_PATTERNS: &str = include_str!("error_patterns.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ErrorClass {
    LogicalInconsistency,
    SyntacticInvalidity,
    ApiMisuse,
    TypeMismatch,
    SignatureMismatch,
}

impl ErrorClass {
    pub const ALL: [ErrorClass; 5] = [
        ErrorClass::LogicalInconsistency,
        ErrorClass::SyntacticInvalidity,
        ErrorClass::ApiMisuse,
        ErrorClass::TypeMismatch,
        ErrorClass::SignatureMismatch,
    ];
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("pattern table: {0}")]
    Patterns(String),
    #[error("harness for `{suite}`: {source}")]
    Harness { suite: String, source: TranspileError },
    #[error("aborting: {0}")]
    SandboxUnavailable(SandboxError),
    #[error("invalid evaluation request: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct StagePatterns {
    #[serde(default)]
    compile: Vec<String>,
    #[serde(default)]
    runtime: Vec<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct LanguagePatterns {
    #[serde(default)]
    signature: StagePatterns,
    #[serde(default)]
    api_misuse: StagePatterns,
    #[serde(default)]
    type_mismatch: StagePatterns,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTable {
    version: String,
    #[serde(default)]
    languages: BTreeMap<String, LanguagePatterns>,
}

/// Diagnostic regexes per language and failure class, loaded from TOML.
#[derive(Debug, Clone)]
pub struct PatternTable {
    version: String,
    languages: BTreeMap<String, LanguagePatterns>,
}

impl Default for PatternTable {
    fn default() -> Self {
        Self::from_toml(DEFAULT_PATTERNS).expect("built-in pattern table is valid")
    }
}

impl PatternTable {
    pub fn from_toml(text: &str) -> Result<Self, EvalError> {
        let raw: RawTable = toml::from_str(text).map_err(|e| EvalError::Patterns(e.to_string()))?;
        // reject bad regexes at load time, not mid-run
        for lp in raw.languages.values() {
            for stage in [&lp.signature, &lp.api_misuse, &lp.type_mismatch] {
                for p in stage.compile.iter().chain(&stage.runtime) {
                    Regex::new(&p.replace("{entrypoint}", "f")).map_err(|e| EvalError::Patterns(e.to_string()))?;
                }
            }
        }
        Ok(Self { version: raw.version, languages: raw.languages })
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    fn matches(&self, stage: &StagePatterns, outcome: Outcome, diagnostics: &str, entrypoint: &str) -> bool {
        let list = match outcome {
            Outcome::CompileError => &stage.compile,
            Outcome::RuntimeError => &stage.runtime,
            _ => return false,
        };
        let name = regex::escape(entrypoint);
        list.iter().any(|p| {
            Regex::new(&p.replace("{entrypoint}", &name)).map(|re| re.is_match(diagnostics)).unwrap_or(false)
        })
    }
}

/// Assigns a failed translation to exactly one class.
///
/// A candidate that never mentions the entrypoint cannot be invoked and is a
/// signature mismatch regardless of its diagnostics.
pub fn classify_error(verdict: &Verdict, candidate: &CodeUnit, suite: &TestSuite, table: &PatternTable) -> ErrorClass {
    let name = &suite.entrypoint.function_name;
    let mentions = Regex::new(&format!(r"\b{}\b", regex::escape(name)))
        .map(|re| re.is_match(&candidate.source_text))
        .unwrap_or(true);
    if !mentions {
        return ErrorClass::SignatureMismatch;
    }
    let empty = LanguagePatterns::default();
    let lp = table.languages.get(candidate.language.as_str()).unwrap_or(&empty);
    // gcc quotes with U+2018/U+2019 under UTF-8 locales
    let normalized = verdict.diagnostics.replace(['\u{2018}', '\u{2019}'], "'");
    let d = normalized.as_str();
    let o = verdict.outcome;
    if table.matches(&lp.signature, o, d, name) {
        ErrorClass::SignatureMismatch
    } else if table.matches(&lp.api_misuse, o, d, name) {
        ErrorClass::ApiMisuse
    } else if table.matches(&lp.type_mismatch, o, d, name) {
        ErrorClass::TypeMismatch
    } else if o == Outcome::CompileError {
        ErrorClass::SyntacticInvalidity
    } else {
        ErrorClass::LogicalInconsistency
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionResult {
    pub source_lang: LanguageId,
    pub target_lang: LanguageId,
    pub attempted: usize,
    pub passed: usize,
    pub ca1: f64,
    pub error_histogram: BTreeMap<ErrorClass, usize>,
    /// Failures caused by policy or sandbox errors rather than the candidate.
    pub flagged: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleResult {
    pub suite_id: String,
    pub source_lang: LanguageId,
    pub target_lang: LanguageId,
    pub candidate: String,
    pub outcome: Outcome,
    pub error_class: Option<ErrorClass>,
    pub flagged: bool,
}

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub decode: DecodeParams,
    pub limits: ExecutionLimits,
    pub parallelism: usize,
    pub pivot: LanguageId,
    pub patterns: PatternTable,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            decode: DecodeParams::greedy(),
            limits: ExecutionLimits::default(),
            parallelism: 4,
            pivot: LanguageId::python(),
            patterns: PatternTable::default(),
        }
    }
}

/// Generates one candidate per (problem, direction) and scores it. Problems
/// lacking a source in some direction's source language are not attempted
/// in that direction.
pub fn evaluate_ca1(
    policy: &dyn Policy,
    verifier: &dyn Verifier,
    benchmark: &[DatasetRecord],
    directions: &[(LanguageId, LanguageId)],
    opts: &EvalOptions,
) -> Result<(Vec<DirectionResult>, Vec<SampleResult>), EvalError> {
    if opts.parallelism == 0 {
        return Err(EvalError::Invalid("parallelism must be at least 1".into()));
    }
    let targets: BTreeSet<&LanguageId> = directions.iter().map(|(_, t)| t).collect();
    for t in &targets {
        verifier.probe(t).map_err(EvalError::SandboxUnavailable)?;
    }

    let mut tasks = Vec::new();
    for (d, (s, t)) in directions.iter().enumerate() {
        if s == t {
            return Err(EvalError::Invalid(format!("direction {s}->{t} has identical languages")));
        }
        for (p, rec) in benchmark.iter().enumerate() {
            if rec.source_for(s.as_str(), opts.pivot.as_str()).is_some() {
                tasks.push((d, p));
            }
        }
    }
    let suites: Vec<TestSuite> = benchmark.iter().map(DatasetRecord::suite).collect();

    let results = bounded_map(&tasks, opts.parallelism, |&(d, p)| -> Result<SampleResult, EvalError> {
        let (s, t) = &directions[d];
        let rec = &benchmark[p];
        let suite = &suites[p];
        let harness = emit_harness(suite, t).map_err(|source| EvalError::Harness { suite: rec.suite_id.clone(), source })?;
        let source = CodeUnit {
            source_text: rec.source_for(s.as_str(), opts.pivot.as_str()).unwrap_or_default().to_string(),
            language: s.clone(),
            entrypoint: rec.entrypoint.clone(),
        };
        let req = GenerationRequest {
            source,
            target: t.clone(),
            target_signature: render_declaration(&rec.entrypoint, t).unwrap_or_default(),
            num_candidates: 1,
            decode: opts.decode,
        };
        let mut flagged = false;
        let generation = match policy.generate(&req) {
            Ok(mut g) if !g.is_empty() => g.swap_remove(0),
            Ok(_) => {
                flagged = true;
                Generation::new(String::new(), Vec::new(), Vec::new())
            }
            Err(e) => {
                tracing::warn!(suite = %rec.suite_id, target = %t, error = %e, "generation failed");
                flagged = true;
                Generation::new(String::new(), Vec::new(), Vec::new())
            }
        };
        let verdict = if generation.extraction_empty() {
            Verdict::extraction_empty()
        } else {
            match verifier.verify(&generation.source_text, t, &harness, &opts.limits) {
                Ok((v, _)) => v,
                Err(e @ SandboxError::Unavailable { .. }) => return Err(EvalError::SandboxUnavailable(e)),
                Err(e) => {
                    flagged = true;
                    Verdict::sandbox_internal(&e)
                }
            }
        };
        let candidate = CodeUnit { source_text: generation.source_text, language: t.clone(), entrypoint: rec.entrypoint.clone() };
        let error_class = (!verdict.passed()).then(|| classify_error(&verdict, &candidate, suite, &opts.patterns));
        Ok(SampleResult {
            suite_id: rec.suite_id.clone(),
            source_lang: s.clone(),
            target_lang: t.clone(),
            candidate: candidate.source_text,
            outcome: verdict.outcome,
            error_class,
            flagged,
        })
    });

    let mut per_direction: Vec<DirectionResult> = directions
        .iter()
        .map(|(s, t)| DirectionResult {
            source_lang: s.clone(),
            target_lang: t.clone(),
            attempted: 0,
            passed: 0,
            ca1: 0.0,
            error_histogram: ErrorClass::ALL.iter().map(|c| (*c, 0)).collect(),
            flagged: 0,
        })
        .collect();
    let mut samples = Vec::with_capacity(tasks.len());
    for (&(d, _), r) in tasks.iter().zip(results) {
        let r = r?;
        let dr = &mut per_direction[d];
        dr.attempted += 1;
        match r.error_class {
            None => dr.passed += 1,
            Some(c) => *dr.error_histogram.get_mut(&c).expect("all classes present") += 1,
        }
        dr.flagged += usize::from(r.flagged);
        samples.push(r);
    }
    for dr in &mut per_direction {
        dr.ca1 = if dr.attempted == 0 { 0.0 } else { dr.passed as f64 / dr.attempted as f64 };
    }
    Ok((per_direction, samples))
}

fn column_label(s: &LanguageId, t: &LanguageId) -> String {
    format!("{}->{}", s.short(), t.short())
}

/// Mean CA@1 over directions.
pub fn average_ca1(results: &[DirectionResult]) -> f64 {
    if results.is_empty() {
        return 0.0;
    }
    results.iter().map(|r| r.ca1).sum::<f64>() / results.len() as f64
}

/// Plain-text table: one column per direction plus the average, values in
/// percent.
pub fn render_table(rows: &[(String, Vec<DirectionResult>)]) -> String {
    let Some((_, first)) = rows.first() else {
        return String::new();
    };
    let mut header: Vec<String> = vec!["model".into()];
    header.extend(first.iter().map(|r| column_label(&r.source_lang, &r.target_lang)));
    header.push("Avg".into());
    let mut lines = vec![header];
    for (label, results) in rows {
        let mut line = vec![label.clone()];
        line.extend(results.iter().map(|r| format!("{:.2}", r.ca1 * 100.0)));
        line.push(format!("{:.2}", average_ca1(results) * 100.0));
        lines.push(line);
    }
    let widths: Vec<usize> =
        (0..lines[0].len()).map(|c| lines.iter().map(|l| l.get(c).map_or(0, String::len)).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for (i, l) in lines.iter().enumerate() {
        let cells: Vec<String> = l.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
        let _ = writeln!(out, "| {} |", cells.join(" | "));
        if i == 0 {
            let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
            let _ = writeln!(out, "| {} |", rule.join(" | "));
        }
    }
    out
}

/// Per-direction failure counts as a table with one row per error class.
pub fn render_error_table(results: &[DirectionResult]) -> String {
    let mut out = String::from("class");
    for r in results {
        let _ = write!(out, "\t{}", direction_key(&r.source_lang, &r.target_lang));
    }
    out.push('\n');
    for c in ErrorClass::ALL {
        let _ = write!(out, "{c:?}");
        for r in results {
            let _ = write!(out, "\t{}", r.error_histogram.get(&c).copied().unwrap_or(0));
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NameMatch {
    #[default]
    Exact,
    CaseInsensitive,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LeakageReport {
    /// (suite_id, function_name) of each removed record.
    pub removed: Vec<(String, String)>,
    pub kept: usize,
}

/// Drops training records whose entrypoint name appears in `benchmark_names`.
pub fn leakage_filter(
    dataset: Vec<DatasetRecord>,
    benchmark_names: &BTreeSet<String>,
    matching: NameMatch,
) -> (Vec<DatasetRecord>, LeakageReport) {
    let lowered: BTreeSet<String> = benchmark_names.iter().map(|n| n.to_lowercase()).collect();
    let hit = |name: &str| match matching {
        NameMatch::Exact => benchmark_names.contains(name),
        NameMatch::CaseInsensitive => lowered.contains(&name.to_lowercase()),
    };
    let mut report = LeakageReport::default();
    let mut kept = Vec::with_capacity(dataset.len());
    for r in dataset {
        if hit(&r.entrypoint.function_name) {
            report.removed.push((r.suite_id.clone(), r.entrypoint.function_name.clone()));
        } else {
            kept.push(r);
        }
    }
    report.kept = kept.len();
    (kept, report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testspec::{EntrypointSignature, SemanticType};

    fn suite() -> TestSuite {
        TestSuite::new("s", EntrypointSignature::new("area", vec![SemanticType::Int], SemanticType::Int), vec![])
    }

    fn unit(lang: LanguageId, text: &str) -> CodeUnit {
        CodeUnit { source_text: text.into(), language: lang, entrypoint: suite().entrypoint }
    }

    #[test]
    fn cascade() {
        let t = PatternTable::default();
        assert_eq!(t.version(), "1");
        let cpp = LanguageId::cpp();
        let py = LanguageId::python();
        let cases = [
            (unit(cpp.clone(), "long long area(long long x) { return x; }}"), Outcome::CompileError, "error: expected declaration before '}' token", ErrorClass::SyntacticInvalidity),
            (unit(cpp.clone(), "long long area(long long x) { return std::fancy(x); }"), Outcome::CompileError, "error: 'fancy' is not a member of 'std'", ErrorClass::ApiMisuse),
            (unit(cpp.clone(), "long long area(long long x) { std::string s = x; return 0; }"), Outcome::CompileError, "error: conversion from 'long long int' to non-scalar type 'std::string' requested", ErrorClass::TypeMismatch),
            (unit(cpp.clone(), "long long surface(long long x) { return x; }"), Outcome::CompileError, "error: 'area' was not declared in this scope", ErrorClass::SignatureMismatch),
            (unit(cpp.clone(), "long long area(long long x, long long y) { return x; }"), Outcome::CompileError, "error: too few arguments to function 'long long int area(long long int, long long int)'", ErrorClass::SignatureMismatch),
            (unit(cpp, "long long area(long long x) { return x; }"), Outcome::WrongAnswer, "FAIL case=2", ErrorClass::LogicalInconsistency),
            (unit(py.clone(), "def area(x):\n    return math.pi * x\n"), Outcome::RuntimeError, "NameError: name 'math' is not defined", ErrorClass::ApiMisuse),
            (unit(py.clone(), "def area(x, y):\n    return x\n"), Outcome::RuntimeError, "TypeError: area() missing 1 required positional argument: 'y'", ErrorClass::SignatureMismatch),
            (unit(py.clone(), "def area(x):\n    return x + 'a'\n"), Outcome::RuntimeError, "TypeError: unsupported operand type(s) for +: 'int' and 'str'", ErrorClass::TypeMismatch),
            (unit(py.clone(), "def area(x):\n    return 1 // 0\n"), Outcome::RuntimeError, "ZeroDivisionError: integer division or modulo by zero", ErrorClass::LogicalInconsistency),
            (unit(py, "def area(x):\n    while True: pass\n"), Outcome::Timeout, "", ErrorClass::LogicalInconsistency),
        ];
        for (c, outcome, diag, want) in cases {
            let v = Verdict::new(outcome, diag);
            assert_eq!(classify_error(&v, &c, &suite(), &t), want, "{diag}");
        }
    }

    #[test]
    fn bad_tables_rejected() {
        assert!(PatternTable::from_toml("version = \"2\"\n[languages.cpp.signature]\ncompile = [\"(\"]\n").is_err());
        assert!(PatternTable::from_toml("version = \"2\"\n[languages.cpp.mystery]\n").is_err());
        let t = PatternTable::from_toml("version = \"2\"\n").unwrap();
        let v = Verdict::new(Outcome::CompileError, "'x' was not declared in this scope");
        assert_eq!(classify_error(&v, &unit(LanguageId::cpp(), "area"), &suite(), &t), ErrorClass::SyntacticInvalidity);
    }
}
