mod report;
mod seed;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use polytrans_core::config::{PolicyKind, RunConfig};
use polytrans_core::corpus::{self, Problem};
use polytrans_core::evaluator::{evaluate_ca1, render_error_table, render_table, EvalOptions, PatternTable};
use polytrans_core::orchestrator::{ExportSink, TrainState, Trainer};
use polytrans_core::policy::{HttpPolicy, Policy, ScriptedPolicy, TranslationTable};
use polytrans_core::pools::{inspect, read_entries};
use polytrans_core::sandbox::{ReferenceVerifier, Sandbox, Verifier};
use polytrans_core::testspec::{read_dataset, DatasetRecord};
use polytrans_core::transpiler::emit_harness;
use polytrans_core::{LanguageId, LanguageSet};

#[derive(Parser)]
#[command(name = "polytrans", version, about = "Execution-verified reinforcement learning for multilingual code translation")]
struct Cli {
    /// Run configuration file (TOML). Keys are documented in config/schema.toml.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Root random seed (overrides train.rng_seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for batches, metrics, evaluation results and reports
    /// (overrides paths.output_dir).
    #[arg(long, global = true, value_name = "DIR")]
    export_dir: Option<PathBuf>,
    /// Policy backend (overrides policy.kind).
    #[arg(long, global = true, value_enum)]
    policy: Option<PolicyArg>,
    /// Translation directions to evaluate: `all` or a comma-separated list
    /// such as `python->cpp,cpp->java`.
    #[arg(long, global = true, default_value = "all")]
    directions: String,
    /// Fraction of each test suite kept for verification, in (0, 1]
    /// (overrides train.test_fraction).
    #[arg(long, global = true)]
    fraction: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PolicyArg {
    Scripted,
    Http,
}

#[derive(Debug, Clone, Copy, Default, ValueEnum)]
enum VerifierArg {
    /// Compile and run candidates.
    #[default]
    Sandbox,
    /// Judge candidates by lookup against known references and mutants.
    Reference,
}

#[derive(Subcommand)]
enum Command {
    /// Parse, validate, transpile-check and leakage-filter raw problems into a dataset.
    BuildSeed {
        /// Directory with one subdirectory per problem.
        #[arg(long)]
        scaffolds: PathBuf,
        /// File with one benchmark entrypoint name per line.
        #[arg(long)]
        benchmark_names: Option<PathBuf>,
        /// Output dataset (JSONL).
        #[arg(long)]
        out: PathBuf,
    },
    /// Emit test harnesses as `<suite_id>.<language>.harness` files.
    Transpile {
        /// Dataset file (JSONL) or problem directory.
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the training loop, exporting one batch file per step.
    Train {
        #[arg(long, value_enum, default_value_t)]
        verifier: VerifierArg,
        /// Override train.num_steps.
        #[arg(long)]
        steps: Option<u64>,
        /// Override train.batch_size.
        #[arg(long)]
        batch_size: Option<usize>,
        /// Resume from a checkpoint written by an earlier run.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Compute CA@1 per direction on a benchmark.
    Eval {
        /// Benchmark dataset (JSONL) or problem directory (overrides paths.benchmark).
        #[arg(long)]
        benchmark: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t)]
        verifier: VerifierArg,
    },
    /// Render tables, plots and a summary from a training run's metrics.
    Report {
        /// Run directory containing metrics.jsonl (defaults to the export directory).
        #[arg(long)]
        run_dir: Option<PathBuf>,
    },
    /// Exploration pool utilities.
    Pools {
        #[command(subcommand)]
        command: PoolsCommand,
    },
}

#[derive(Subcommand)]
enum PoolsCommand {
    /// Print size, language mix and age statistics of a pool export.
    Inspect {
        /// Pool export (JSONL).
        file: PathBuf,
        /// Step used to compute entry ages (defaults to the newest entry's step).
        #[arg(long)]
        now: Option<u64>,
    },
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.train.rng_seed = s;
    }
    if let Some(d) = &cli.export_dir {
        cfg.paths.output_dir = d.clone();
    }
    if let Some(p) = cli.policy {
        cfg.policy.kind = match p {
            PolicyArg::Scripted => PolicyKind::Scripted,
            PolicyArg::Http => PolicyKind::Http,
        };
    }
    if let Some(f) = cli.fraction {
        cfg.train.test_fraction = f;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(&cli)?;
    match &cli.command {
        Command::BuildSeed { scaffolds, benchmark_names, out } => {
            seed::build_seed(&cfg, scaffolds, benchmark_names.as_deref(), out)
        }
        Command::Transpile { dataset, out } => transpile(&cfg, dataset, out),
        Command::Train { verifier, steps, batch_size, resume } => {
            let mut cfg = cfg.clone();
            if let Some(n) = steps {
                cfg.train.num_steps = *n;
            }
            if let Some(b) = batch_size {
                cfg.train.batch_size = *b;
            }
            cfg.validate()?;
            train(&cfg, *verifier, resume.as_deref())
        }
        Command::Eval { benchmark, verifier } => eval(&cfg, &cli.directions, benchmark.as_deref(), *verifier),
        Command::Report { run_dir } => {
            let dir = run_dir.clone().unwrap_or_else(|| cfg.paths.output_dir.clone());
            report::report(&dir)
        }
        Command::Pools { command: PoolsCommand::Inspect { file, now } } => {
            let entries = read_entries(file).with_context(|| format!("reading {}", file.display()))?;
            let now = now.unwrap_or_else(|| entries.iter().map(|e| e.inserted_step).max().unwrap_or(0));
            println!("{}", serde_json::to_string_pretty(&inspect(&entries, now))?);
            Ok(())
        }
    }
}

/// Records plus, for problem directories, the known mutants.
fn load_records(path: &Path, languages: &LanguageSet) -> Result<(Vec<DatasetRecord>, Option<Vec<Problem>>)> {
    if path.is_dir() {
        let problems = corpus::load_corpus(path, languages.languages(), languages.pivot())?;
        Ok((problems.iter().map(|p| p.record.clone()).collect(), Some(problems)))
    } else {
        let records = read_dataset(path).with_context(|| format!("reading {}", path.display()))?;
        Ok((records, None))
    }
}

fn training_data(cfg: &RunConfig) -> Result<(Vec<DatasetRecord>, Option<Vec<Problem>>)> {
    let path = cfg
        .paths
        .seed_dataset
        .as_ref()
        .or(cfg.paths.corpus.as_ref())
        .ok_or_else(|| anyhow!("no training data: set paths.seed_dataset or paths.corpus"))?;
    load_records(path, &cfg.train.languages)
}

fn make_policy(cfg: &RunConfig, records: &[DatasetRecord], problems: Option<&[Problem]>) -> Result<Box<dyn Policy>> {
    let pivot = cfg.train.languages.pivot();
    Ok(match cfg.policy.kind {
        PolicyKind::Scripted => {
            let fallback = match problems {
                Some(p) => corpus::scripted_table(p, pivot),
                None => TranslationTable::from_records(records, pivot),
            };
            Box::new(ScriptedPolicy::from_config(&cfg.policy.scripted, fallback)?)
        }
        PolicyKind::Http => Box::new(HttpPolicy::new(cfg.policy.http.clone())?),
    })
}

fn make_verifier(cfg: &RunConfig, kind: VerifierArg, records: &[DatasetRecord], problems: Option<&[Problem]>) -> Box<dyn Verifier> {
    match kind {
        VerifierArg::Sandbox => Box::new(Sandbox::new(cfg.sandbox.clone())),
        VerifierArg::Reference => match problems {
            Some(p) => Box::new(corpus::reference_verifier(p)),
            None => {
                let mut v = ReferenceVerifier::default();
                for r in records {
                    for (lang, src) in &r.references {
                        v.accept(&r.suite_id, &LanguageId::new(lang.as_str()), src);
                    }
                    v.accept(&r.suite_id, cfg.train.languages.pivot(), &r.pivot_source);
                }
                Box::new(v)
            }
        },
    }
}

fn transpile(cfg: &RunConfig, dataset: &Path, out: &Path) -> Result<()> {
    let (records, _) = load_records(dataset, &cfg.train.languages)?;
    fs::create_dir_all(out)?;
    let mut n = 0;
    for r in &records {
        let suite = r.suite();
        for lang in cfg.train.languages.languages() {
            let h = emit_harness(&suite, lang).with_context(|| format!("suite {}", r.suite_id))?;
            fs::write(out.join(format!("{}.{}.harness", r.suite_id, lang)), &h.source_text)?;
            n += 1;
        }
    }
    println!("wrote {n} harnesses for {} suites to {}", records.len(), out.display());
    Ok(())
}

fn train(cfg: &RunConfig, verifier: VerifierArg, resume: Option<&Path>) -> Result<()> {
    let (records, problems) = training_data(cfg)?;
    let policy = make_policy(cfg, &records, problems.as_deref())?;
    let verifier = make_verifier(cfg, verifier, &records, problems.as_deref());
    let out = &cfg.paths.output_dir;
    let mut sink = ExportSink::new(out)?;
    let mut trainer = match resume {
        Some(p) => Trainer::resume(cfg.train.clone(), &records, TrainState::load(p)?)?,
        None => {
            // a fresh run must not interleave with an earlier run's metrics
            let _ = fs::remove_file(out.join(ExportSink::METRICS_FILE));
            Trainer::new(cfg.train.clone(), &records)?
        }
    }
    .with_checkpoint_dir(out.join("checkpoints"));
    let summary = trainer.run(policy.as_ref(), verifier.as_ref(), &mut sink)?;
    fs::write(out.join("run_summary.json"), serde_json::to_string_pretty(&summary)?)?;
    fs::write(out.join("run_config.toml"), toml::to_string(cfg)?)?;
    println!(
        "{} steps: {} items trained, {} skipped, {} enqueued, exploration pool {}",
        summary.steps, summary.items_defined, summary.items_skipped, summary.enqueued, summary.final_explore_size
    );
    for (dir, s) in &summary.directions {
        println!("  {dir}: reward rate {:.4} over {} candidates", s.reward_rate(), s.candidates);
    }
    Ok(())
}

fn parse_directions(spec: &str, languages: &LanguageSet) -> Result<Vec<(LanguageId, LanguageId)>> {
    if spec.trim() == "all" {
        return Ok(languages.directions());
    }
    let mut out = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (s, t) = part.split_once("->").ok_or_else(|| anyhow!("direction `{part}` is not of the form a->b"))?;
        let (s, t) = (LanguageId::new(s.trim()), LanguageId::new(t.trim()));
        if !languages.contains(&s) || !languages.contains(&t) || s == t {
            bail!("direction `{part}` is not between two distinct configured languages");
        }
        out.push((s, t));
    }
    if out.is_empty() {
        bail!("no directions given");
    }
    Ok(out)
}

fn eval(cfg: &RunConfig, directions: &str, benchmark: Option<&Path>, verifier: VerifierArg) -> Result<()> {
    let path = benchmark
        .or(cfg.paths.benchmark.as_deref())
        .ok_or_else(|| anyhow!("no benchmark: pass --benchmark or set paths.benchmark"))?;
    let (records, problems) = load_records(path, &cfg.train.languages)?;
    let directions = parse_directions(directions, &cfg.train.languages)?;
    let policy = make_policy(cfg, &records, problems.as_deref())?;
    let verifier = make_verifier(cfg, verifier, &records, problems.as_deref());
    let patterns = match &cfg.eval.error_patterns {
        Some(p) => PatternTable::from_toml(&fs::read_to_string(p)?)?,
        None => PatternTable::default(),
    };
    let opts = EvalOptions {
        decode: cfg.eval.decode,
        limits: cfg.train.limits,
        parallelism: cfg.eval.parallelism,
        pivot: cfg.train.languages.pivot().clone(),
        patterns,
    };
    let (results, samples) = evaluate_ca1(policy.as_ref(), verifier.as_ref(), &records, &directions, &opts)?;

    let out = &cfg.paths.output_dir;
    fs::create_dir_all(out)?;
    let mut f = fs::File::create(out.join("eval_results.jsonl"))?;
    for r in &results {
        writeln!(f, "{}", serde_json::to_string(r)?)?;
    }
    let mut f = fs::File::create(out.join("eval_samples.jsonl"))?;
    for s in &samples {
        writeln!(f, "{}", serde_json::to_string(s)?)?;
    }
    let table = render_table(&[(policy.describe(), results.clone())]);
    fs::write(out.join("eval_table.txt"), &table)?;
    fs::write(out.join("eval_errors.tsv"), render_error_table(&results))?;
    print!("{table}");
    Ok(())
}
