//! Language-neutral test oracles.
//!
//! A [`TestSuite`] is parsed once from a pivot-language assert scaffold and
//! then transpiled into every target language, so every literal it carries
//! must have a faithful rendering everywhere. The types here enforce that.

mod dataset;
mod parse;
mod types;

use std::collections::HashSet;
use std::fmt;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use dataset::{read_dataset, write_dataset, DatasetRecord};
pub use parse::{format_float, python_literal, ParsedScaffold, RejectReason, Rejection};
pub use types::{
    is_portable_identifier, EntrypointSignature, LiteralValue, SemanticType, TestCase, TestSuite,
    DEFAULT_FLOAT_TOLERANCE, MAX_NESTING,
};

#[derive(Debug, Error)]
pub enum TestSpecError {
    #[error("malformed scaffold at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("scaffold has no convertible assertions ({} rejected)", rejections.len())]
    EmptySuite { rejections: Vec<Rejection> },
    #[error("invalid entrypoint signature: {0}")]
    InvalidSignature(String),
    #[error("invalid type `{0}`")]
    InvalidType(String),
    #[error("dataset line {line}: {message}")]
    Dataset { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Parses an assert scaffold into a suite. Cases keep textual order; lines
/// that cannot be converted are returned alongside as rejections.
pub fn parse_pivot_tests(
    suite_id: impl Into<String>,
    scaffold_text: &str,
    signature: &EntrypointSignature,
) -> Result<(TestSuite, Vec<Rejection>), TestSpecError> {
    if scaffold_text.trim().is_empty() {
        return Err(TestSpecError::Parse {
            line: 1,
            message: "empty scaffold".into(),
        });
    }
    check_signature(signature)?;
    let parsed = parse::parse_scaffold(scaffold_text, signature)?;
    if parsed.cases.is_empty() {
        return Err(TestSpecError::EmptySuite {
            rejections: parsed.rejections,
        });
    }
    let mut suite = TestSuite::new(suite_id, signature.clone(), parsed.cases);
    if let Some(tol) = parsed.annotated_tolerance {
        suite.float_tolerance = tol;
    }
    Ok((suite, parsed.rejections))
}

fn check_signature(signature: &EntrypointSignature) -> Result<(), TestSpecError> {
    if !signature.has_valid_name() {
        return Err(TestSpecError::InvalidSignature(format!(
            "`{}` is not a portable identifier",
            signature.function_name
        )));
    }
    for ty in signature.param_types.iter().chain([&signature.return_type]) {
        if ty.depth() > MAX_NESTING {
            return Err(TestSpecError::InvalidSignature(format!(
                "type {ty} nests deeper than {MAX_NESTING}"
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ViolationKind {
    NoCases,
    InvalidEntrypointName,
    TypeTooDeep,
    ArityMismatch,
    HeterogeneousList,
    NestingTooDeep,
    NonFiniteFloat,
    KindMismatch,
    BadTolerance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub case_index: Option<usize>,
    pub kind: ViolationKind,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.case_index {
            Some(i) => write!(f, "case {i}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

/// Every invariant violation in a suite. Empty iff the suite is well-formed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, case_index: Option<usize>, kind: ViolationKind, message: impl Into<String>) {
        self.violations.push(Violation {
            case_index,
            kind,
            message: message.into(),
        });
    }
}

pub fn validate_suite(suite: &TestSuite) -> ValidationReport {
    let mut report = ValidationReport::default();
    let sig = &suite.entrypoint;
    if suite.cases.is_empty() {
        report.push(None, ViolationKind::NoCases, "suite has no cases");
    }
    if !sig.has_valid_name() {
        report.push(
            None,
            ViolationKind::InvalidEntrypointName,
            format!("`{}` is not a portable identifier", sig.function_name),
        );
    }
    for ty in sig.param_types.iter().chain([&sig.return_type]) {
        if ty.depth() > MAX_NESTING {
            report.push(None, ViolationKind::TypeTooDeep, format!("type {ty} nests too deep"));
        }
    }
    if !(suite.float_tolerance.is_finite() && suite.float_tolerance >= 0.0) {
        report.push(None, ViolationKind::BadTolerance, "float tolerance must be finite and non-negative");
    }
    for (i, case) in suite.cases.iter().enumerate() {
        if case.args.len() != sig.arity() {
            report.push(
                Some(i),
                ViolationKind::ArityMismatch,
                format!("{} arguments for arity {}", case.args.len(), sig.arity()),
            );
        } else {
            for (j, (arg, ty)) in case.args.iter().zip(&sig.param_types).enumerate() {
                check_value(&mut report, i, &format!("argument {j}"), arg, ty);
            }
        }
        check_value(&mut report, i, "expected value", &case.expected, &sig.return_type);
    }
    report
}

/// At most one violation per value: structural problems first, then kind.
fn check_value(
    report: &mut ValidationReport,
    case: usize,
    what: &str,
    value: &LiteralValue,
    ty: &SemanticType,
) {
    if !value.is_homogeneous() {
        report.push(Some(case), ViolationKind::HeterogeneousList, format!("{what}: heterogeneous list"));
    } else if value.depth() > MAX_NESTING {
        report.push(Some(case), ViolationKind::NestingTooDeep, format!("{what}: nesting deeper than {MAX_NESTING}"));
    } else if !value.is_finite() {
        report.push(Some(case), ViolationKind::NonFiniteFloat, format!("{what}: non-finite float"));
    } else if !value.conforms_to(ty) {
        report.push(
            Some(case),
            ViolationKind::KindMismatch,
            format!("{what}: {} literal for declared type {ty}", value.kind_name()),
        );
    }
}

/// Duplicate suite ids across a dataset.
pub fn duplicate_suite_ids<'a>(suites: impl IntoIterator<Item = &'a TestSuite>) -> Vec<String> {
    let mut seen = HashSet::new();
    let mut dups = Vec::new();
    for s in suites {
        if !seen.insert(s.suite_id.as_str()) && !dups.contains(&s.suite_id) {
            dups.push(s.suite_id.clone());
        }
    }
    dups
}

/// Number of cases kept when subsampling `n` cases at `fraction`.
pub fn subsample_size(n: usize, fraction: f64) -> usize {
    ((fraction * n as f64).round() as usize).clamp(1, n.max(1))
}

/// Deterministic uniform subsample without replacement. Kept cases retain
/// their original relative order.
///
/// # Panics
/// If `fraction` is outside `(0, 1]`.
pub fn subsample_suite(suite: &TestSuite, fraction: f64, rng_seed: u64) -> TestSuite {
    assert!(
        fraction > 0.0 && fraction <= 1.0,
        "subsample fraction must be in (0, 1], got {fraction}"
    );
    let n = suite.cases.len();
    let k = subsample_size(n, fraction);
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut picked = if n == 0 { Vec::new() } else { sample(&mut rng, n, k).into_vec() };
    picked.sort_unstable();
    TestSuite {
        suite_id: format!("{}@{}", suite.suite_id, fraction),
        entrypoint: suite.entrypoint.clone(),
        cases: picked.into_iter().map(|i| suite.cases[i].clone()).collect(),
        float_tolerance: suite.float_tolerance,
    }
}
