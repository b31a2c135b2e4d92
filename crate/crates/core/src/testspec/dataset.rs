//! Line-delimited JSON dataset files.
//!
//! One record per line:
//! `{"suite_id", "entrypoint": {"function_name", "param_types", "return_type"}, "cases": [{"args", "expected"}], "pivot_source"}`.
//! Benchmark files add `references`, a map from language name to a verified
//! reference solution.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::types::{EntrypointSignature, TestCase, TestSuite, DEFAULT_FLOAT_TOLERANCE};
use super::TestSpecError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub suite_id: String,
    pub entrypoint: EntrypointSignature,
    pub cases: Vec<TestCase>,
    pub pivot_source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub float_tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub references: BTreeMap<String, String>,
}

impl DatasetRecord {
    pub fn from_suite(suite: &TestSuite, pivot_source: impl Into<String>) -> Self {
        Self {
            suite_id: suite.suite_id.clone(),
            entrypoint: suite.entrypoint.clone(),
            cases: suite.cases.clone(),
            pivot_source: pivot_source.into(),
            float_tolerance: (suite.float_tolerance != DEFAULT_FLOAT_TOLERANCE)
                .then_some(suite.float_tolerance),
            references: BTreeMap::new(),
        }
    }

    pub fn suite(&self) -> TestSuite {
        TestSuite {
            suite_id: self.suite_id.clone(),
            entrypoint: self.entrypoint.clone(),
            cases: self.cases.clone(),
            float_tolerance: self.float_tolerance.unwrap_or(DEFAULT_FLOAT_TOLERANCE),
        }
    }

    /// Source code for `language`: the explicit reference if present, else
    /// the pivot source when `language` is the pivot.
    pub fn source_for(&self, language: &str, pivot: &str) -> Option<&str> {
        self.references
            .get(language)
            .map(String::as_str)
            .or_else(|| (language == pivot).then_some(self.pivot_source.as_str()))
    }

    /// Widens JSON integers where floats are declared so that `2` and `2.0`
    /// load identically.
    fn canonicalize(&mut self) -> Result<(), String> {
        let sig = &self.entrypoint;
        for (i, case) in self.cases.iter_mut().enumerate() {
            if case.args.len() == sig.arity() {
                for (j, (arg, ty)) in case.args.iter_mut().zip(&sig.param_types).enumerate() {
                    let v = std::mem::replace(arg, super::LiteralValue::Null);
                    *arg = v.conform(ty).map_err(|v| {
                        format!("case {i} argument {j}: {} literal for {ty}", v.kind_name())
                    })?;
                }
            }
            let v = std::mem::replace(&mut case.expected, super::LiteralValue::Null);
            case.expected = v.conform(&sig.return_type).map_err(|v| {
                format!("case {i} expected: {} literal for {}", v.kind_name(), sig.return_type)
            })?;
        }
        Ok(())
    }
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<Vec<DatasetRecord>, TestSpecError> {
    let file = fs::File::open(path.as_ref())?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut rec: DatasetRecord =
            serde_json::from_str(&line).map_err(|e| TestSpecError::Dataset {
                line: i + 1,
                message: e.to_string(),
            })?;
        rec.canonicalize()
            .map_err(|message| TestSpecError::Dataset { line: i + 1, message })?;
        out.push(rec);
    }
    Ok(out)
}

pub fn write_dataset(path: impl AsRef<Path>, records: &[DatasetRecord]) -> Result<(), TestSpecError> {
    let mut f = std::io::BufWriter::new(fs::File::create(path.as_ref())?);
    for r in records {
        serde_json::to_writer(&mut f, r).map_err(std::io::Error::from)?;
        f.write_all(b"\n")?;
    }
    f.flush()?;
    Ok(())
}
