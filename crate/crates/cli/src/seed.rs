use std::collections::{BTreeSet, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use polytrans_core::config::RunConfig;
use polytrans_core::corpus::load_problem;
use polytrans_core::evaluator::leakage_filter;
use polytrans_core::testspec::{write_dataset, DatasetRecord};
use polytrans_core::transpiler::emit_harness;

fn read_names(path: &Path) -> Result<BTreeSet<String>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(String::from)
        .collect())
}

pub fn build_seed(cfg: &RunConfig, scaffolds: &Path, names: Option<&Path>, out: &Path) -> Result<()> {
    let langs = &cfg.train.languages;
    let mut dirs: Vec<PathBuf> = fs::read_dir(scaffolds)
        .with_context(|| format!("reading {}", scaffolds.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();

    let mut records: Vec<DatasetRecord> = Vec::new();
    let mut seen = HashSet::new();
    let mut rejected = 0;
    for dir in &dirs {
        let problem = match load_problem(dir, langs.languages(), langs.pivot()) {
            Ok(p) => p,
            Err(e) => {
                eprintln!("rejected {}: {e}", dir.display());
                rejected += 1;
                continue;
            }
        };
        let suite = problem.record.suite();
        if let Some(e) = langs.languages().iter().find_map(|l| emit_harness(&suite, l).err()) {
            eprintln!("rejected {}: {e}", dir.display());
            rejected += 1;
            continue;
        }
        if !seen.insert(suite.suite_id.clone()) {
            eprintln!("rejected {}: duplicate suite id `{}`", dir.display(), suite.suite_id);
            rejected += 1;
            continue;
        }
        records.push(problem.record);
    }
    let parsed = records.len();

    let (kept, report) = match names {
        Some(p) => leakage_filter(records, &read_names(p)?, cfg.eval.leakage_match),
        None => {
            let n = records.len();
            (records, polytrans_core::evaluator::LeakageReport { removed: vec![], kept: n })
        }
    };
    for (suite, name) in &report.removed {
        eprintln!("leak-filtered {suite}: entrypoint `{name}` is in the benchmark");
    }
    println!(
        "parsed {parsed}, rejected {rejected}, leak-filtered {}, written {}",
        report.removed.len(),
        kept.len()
    );
    if kept.is_empty() {
        bail!("no records left to write");
    }
    write_dataset(out, &kept).with_context(|| format!("writing {}", out.display()))?;
    Ok(())
}
