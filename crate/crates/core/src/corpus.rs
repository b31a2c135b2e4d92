//! Problem corpus on disk.
//!
//! Each problem is a directory holding `problem.toml`, a pivot test scaffold
//! `tests.py`, and one reference solution per language. `problem.toml`:
//!
//! ```toml
//! suite_id = "gcd"
//!
//! [entrypoint]
//! function_name = "gcd"
//! param_types = ["int", "int"]
//! return_type = "int"
//!
//! [[mutants.python]]
//! find = "return a\n"
//! replace = "return b\n"
//! ```
//!
//! A mutant is a find/replace edit on the reference; `find` must occur
//! exactly once.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::lang::LanguageId;
use crate::policy::TranslationTable;
use crate::sandbox::ReferenceVerifier;
use crate::testspec::{parse_pivot_tests, DatasetRecord, EntrypointSignature, TestSpecError};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Manifest { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Tests { path: PathBuf, source: TestSpecError },
    #[error("{problem}: mutant for {language} matches {count} times")]
    Mutant { problem: String, language: String, count: usize },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    suite_id: String,
    entrypoint: EntrypointSignature,
    #[serde(default)]
    mutants: BTreeMap<String, Vec<Edit>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct Edit {
    find: String,
    replace: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub record: DatasetRecord,
    /// Known-wrong variants of each reference, keyed by language.
    pub mutants: BTreeMap<String, Vec<String>>,
}

/// File holding the reference solution for `language`.
pub fn solution_file(language: &LanguageId) -> String {
    match language.as_str() {
        "python" => "solution.py".into(),
        "cpp" => "solution.cpp".into(),
        "java" => "Solution.java".into(),
        other => format!("solution.{other}"),
    }
}

/// The corpus shipped with this crate.
pub fn fixture_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join("problems")
}

fn read(path: &Path) -> Result<String, CorpusError> {
    fs::read_to_string(path).map_err(|source| CorpusError::Io { path: path.to_path_buf(), source })
}

pub fn load_problem(dir: &Path, languages: &[LanguageId], pivot: &LanguageId) -> Result<Problem, CorpusError> {
    let manifest_path = dir.join("problem.toml");
    let manifest: Manifest = toml::from_str(&read(&manifest_path)?).map_err(|e| CorpusError::Manifest {
        path: manifest_path.clone(),
        message: e.to_string(),
    })?;

    let tests_path = dir.join("tests.py");
    let (suite, _) = parse_pivot_tests(&manifest.suite_id, &read(&tests_path)?, &manifest.entrypoint)
        .map_err(|source| CorpusError::Tests { path: tests_path, source })?;

    let mut references = BTreeMap::new();
    let mut mutants = BTreeMap::new();
    for lang in languages {
        let path = dir.join(solution_file(lang));
        if !path.exists() {
            continue;
        }
        let src = read(&path)?;
        let mut variants = Vec::new();
        for edit in manifest.mutants.get(lang.as_str()).into_iter().flatten() {
            let count = src.matches(edit.find.as_str()).count();
            if count != 1 {
                return Err(CorpusError::Mutant {
                    problem: manifest.suite_id.clone(),
                    language: lang.to_string(),
                    count,
                });
            }
            variants.push(src.replacen(edit.find.as_str(), &edit.replace, 1));
        }
        if !variants.is_empty() {
            mutants.insert(lang.to_string(), variants);
        }
        references.insert(lang.to_string(), src);
    }
    let pivot_source = references.get(pivot.as_str()).cloned().ok_or_else(|| CorpusError::Manifest {
        path: manifest_path,
        message: format!("no {} reference", pivot),
    })?;
    let mut record = DatasetRecord::from_suite(&suite, pivot_source);
    record.references = references;
    Ok(Problem { record, mutants })
}

/// Loads every problem directory under `root`, sorted by directory name.
pub fn load_corpus(root: &Path, languages: &[LanguageId], pivot: &LanguageId) -> Result<Vec<Problem>, CorpusError> {
    let entries = fs::read_dir(root).map_err(|source| CorpusError::Io { path: root.to_path_buf(), source })?;
    let mut dirs: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join("problem.toml").is_file())
        .collect();
    dirs.sort();
    dirs.iter().map(|d| load_problem(d, languages, pivot)).collect()
}

/// Translation table over all reference pairs, with mutants attached so a
/// corrupting policy emits realistic wrong answers.
pub fn scripted_table(problems: &[Problem], pivot: &LanguageId) -> TranslationTable {
    let records: Vec<DatasetRecord> = problems.iter().map(|p| p.record.clone()).collect();
    let mut table = TranslationTable::from_records(&records, pivot);
    for p in problems {
        for (lang, variants) in &p.mutants {
            let lang = LanguageId::new(lang.as_str());
            if let Some(reference) = p.record.references.get(lang.as_str()) {
                for m in variants {
                    table.add_mutant(&lang, reference, m);
                }
            }
        }
    }
    table
}

/// Lookup verifier that accepts references and rejects mutants.
pub fn reference_verifier(problems: &[Problem]) -> ReferenceVerifier {
    let mut v = ReferenceVerifier::default();
    for p in problems {
        for (lang, src) in &p.record.references {
            v.accept(&p.record.suite_id, &LanguageId::new(lang.as_str()), src);
        }
        for (lang, variants) in &p.mutants {
            for m in variants {
                v.reject(&p.record.suite_id, &LanguageId::new(lang.as_str()), m);
            }
        }
    }
    v
}
