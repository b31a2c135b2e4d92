//! Compiles and runs candidate translations against their harness and maps
//! the result to a verdict and a binary reward.

mod process;
mod reference;

pub use reference::ReferenceVerifier;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};
use std::{fmt, fs, io};

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lang::LanguageId;
use crate::transpiler::{assemble, HarnessSource};

use process::{Captured, ProcessSpec};

/// Overrides the scratch directory for all sandbox working directories.
pub const SANDBOX_ROOT_ENV: &str = "BOOTTRANS_SANDBOX_ROOT";

/// Printed by every harness after its last case passes.
pub const COMPLETION_SENTINEL: &str = "BT_DONE";
pub const TRUNCATION_SENTINEL: &str = "…truncated";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExecutionLimits {
    /// Seconds.
    pub compile_timeout: f64,
    /// Seconds.
    pub run_timeout: f64,
    /// Bytes of address space for the run step.
    pub memory_cap: u64,
    /// Bytes of diagnostics kept per verdict.
    pub output_cap: u64,
}

impl Default for ExecutionLimits {
    fn default() -> Self {
        Self {
            compile_timeout: 30.0,
            run_timeout: 10.0,
            memory_cap: 512 * 1024 * 1024,
            output_cap: 64 * 1024,
        }
    }
}

impl ExecutionLimits {
    pub fn validate(&self) -> Result<(), SandboxError> {
        let ok = self.compile_timeout.is_finite()
            && self.compile_timeout > 0.0
            && self.run_timeout.is_finite()
            && self.run_timeout > 0.0
            && self.memory_cap > 0
            && self.output_cap > 0;
        if ok {
            Ok(())
        } else {
            Err(SandboxError::InvalidLimits(*self))
        }
    }

    pub fn with_run_timeout(mut self, secs: f64) -> Self {
        self.run_timeout = secs;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Outcome {
    Pass,
    CompileError,
    RuntimeError,
    Timeout,
    WrongAnswer,
}

impl Outcome {
    pub const ALL: [Outcome; 5] = [
        Outcome::Pass,
        Outcome::CompileError,
        Outcome::RuntimeError,
        Outcome::Timeout,
        Outcome::WrongAnswer,
    ];
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Marks verdicts that were synthesized without running anything.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VerdictFlag {
    /// The completion contained no code to run.
    ExtractionEmpty,
    /// The sandbox failed internally; the candidate was not judged.
    SandboxInternal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub outcome: Outcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_failing_case: Option<usize>,
    pub diagnostics: String,
    /// Seconds, compile and run combined.
    pub wall_time: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flag: Option<VerdictFlag>,
}

impl Verdict {
    pub fn new(outcome: Outcome, diagnostics: impl Into<String>) -> Self {
        Self {
            outcome,
            first_failing_case: None,
            diagnostics: diagnostics.into(),
            wall_time: 0.0,
            flag: None,
        }
    }

    pub fn wrong_answer(case: usize, diagnostics: impl Into<String>) -> Self {
        Self { first_failing_case: Some(case), ..Self::new(Outcome::WrongAnswer, diagnostics) }
    }

    pub fn extraction_empty() -> Self {
        Self {
            flag: Some(VerdictFlag::ExtractionEmpty),
            ..Self::new(Outcome::CompileError, "no code found in completion")
        }
    }

    pub fn sandbox_internal(err: &SandboxError) -> Self {
        Self {
            flag: Some(VerdictFlag::SandboxInternal),
            ..Self::new(Outcome::RuntimeError, format!("not judged: {err}"))
        }
    }

    pub fn passed(&self) -> bool {
        self.outcome == Outcome::Pass
    }

    /// R = 1 iff the candidate compiled and passed every case.
    pub fn reward(&self) -> u8 {
        u8::from(self.passed())
    }

    /// Checks the structural invariants tying outcome and failing case.
    pub fn is_consistent(&self, output_cap: u64) -> bool {
        let case_ok = match self.outcome {
            Outcome::Pass => self.first_failing_case.is_none(),
            Outcome::WrongAnswer => self.first_failing_case.is_some(),
            _ => true,
        };
        case_ok && self.diagnostics.len() as u64 <= output_cap
    }
}

#[derive(Debug, Error)]
pub enum SandboxError {
    #[error("toolchain for `{language}` unavailable: {reason}")]
    Unavailable { language: LanguageId, reason: String },
    #[error("sandbox internal error: {0}")]
    Internal(String),
    #[error("harness is for `{harness}` but candidate language is `{candidate}`")]
    LanguageMismatch { harness: LanguageId, candidate: LanguageId },
    #[error("execution limits must be strictly positive: {0:?}")]
    InvalidLimits(ExecutionLimits),
}

/// Per-language commands. Argv templates may use `{source}`, `{workdir}`,
/// `{binary}` and `{memory_mb}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Toolchain {
    /// Empty for languages without a separate compile step.
    #[serde(default)]
    pub compile_cmd: Vec<String>,
    pub run_cmd: Vec<String>,
    pub source_filename: String,
    /// Enforce `memory_cap` through RLIMIT_AS. Runtimes that reserve large
    /// virtual ranges up front (the JVM) take the cap as a flag instead.
    #[serde(default = "yes")]
    pub limit_address_space: bool,
}

fn yes() -> bool {
    true
}

fn argv(parts: &[&str]) -> Vec<String> {
    parts.iter().map(|s| s.to_string()).collect()
}

impl Toolchain {
    pub fn python() -> Self {
        Self {
            compile_cmd: argv(&["python3", "-I", "-m", "py_compile", "{source}"]),
            run_cmd: argv(&["python3", "-I", "{source}"]),
            source_filename: "main.py".into(),
            limit_address_space: true,
        }
    }

    pub fn cpp() -> Self {
        Self {
            compile_cmd: argv(&["g++", "-std=c++17", "-O1", "-pipe", "-o", "{binary}", "{source}"]),
            run_cmd: argv(&["{binary}"]),
            source_filename: "main.cpp".into(),
            limit_address_space: true,
        }
    }

    pub fn java() -> Self {
        Self {
            compile_cmd: argv(&["javac", "-encoding", "UTF-8", "-nowarn", "-d", "{workdir}", "{source}"]),
            run_cmd: argv(&["java", "-Xss64m", "-Xmx{memory_mb}m", "-XX:+UseSerialGC", "-cp", "{workdir}", "Main"]),
            source_filename: "Main.java".into(),
            limit_address_space: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetworkIsolation {
    /// Fail the verification if a private network namespace cannot be made.
    Required,
    /// Use a private network namespace when the host allows it.
    #[default]
    BestEffort,
    Off,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SandboxConfig {
    pub toolchains: BTreeMap<String, Toolchain>,
    /// Scratch directory; `BOOTTRANS_SANDBOX_ROOT` takes precedence.
    pub scratch_root: Option<PathBuf>,
    pub network: NetworkIsolation,
}

impl Default for SandboxConfig {
    fn default() -> Self {
        let mut toolchains = BTreeMap::new();
        toolchains.insert("python".to_string(), Toolchain::python());
        toolchains.insert("cpp".to_string(), Toolchain::cpp());
        toolchains.insert("java".to_string(), Toolchain::java());
        Self { toolchains, scratch_root: None, network: NetworkIsolation::BestEffort }
    }
}

/// Anything that can turn (candidate, harness) into a verdict.
pub trait Verifier: Send + Sync {
    /// Fails with `Unavailable` when `language` cannot be verified at all.
    fn probe(&self, _language: &LanguageId) -> Result<(), SandboxError> {
        Ok(())
    }

    fn verify(
        &self,
        candidate: &str,
        language: &LanguageId,
        harness: &HarnessSource,
        limits: &ExecutionLimits,
    ) -> Result<(Verdict, u8), SandboxError>;

    /// Verifies each candidate with at most `parallelism` in flight. Results
    /// keep input order and errors stay in place.
    fn verify_group(
        &self,
        candidates: &[String],
        language: &LanguageId,
        harness: &HarnessSource,
        limits: &ExecutionLimits,
        parallelism: usize,
    ) -> Vec<Result<(Verdict, u8), SandboxError>> {
        bounded_map(candidates, parallelism, |c| self.verify(c, language, harness, limits))
    }
}

/// Applies `f` to every item on at most `parallelism` scoped threads,
/// returning results in input order.
pub fn bounded_map<T: Sync, R: Send>(items: &[T], parallelism: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    assert!(parallelism >= 1, "parallelism must be at least 1");
    if parallelism == 1 || items.len() <= 1 {
        return items.iter().map(&f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<R>>> = items.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|s| {
        for _ in 0..parallelism.min(items.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                *slots[i].lock().unwrap() = Some(r);
            });
        }
    });
    slots.into_iter().map(|m| m.into_inner().unwrap().expect("every slot filled")).collect()
}

/// Process-based verifier. Each call gets a fresh directory under the scratch
/// root, removed afterwards.
#[derive(Debug, Clone)]
pub struct Sandbox {
    config: SandboxConfig,
    root: PathBuf,
}

static FAIL_MARKER: std::sync::LazyLock<Regex> =
    std::sync::LazyLock::new(|| Regex::new(r"FAIL case=(\d+)").unwrap());

impl Default for Sandbox {
    fn default() -> Self {
        Self::new(SandboxConfig::default())
    }
}

impl Sandbox {
    pub fn new(config: SandboxConfig) -> Self {
        let root = std::env::var_os(SANDBOX_ROOT_ENV)
            .filter(|v| !v.is_empty())
            .map(PathBuf::from)
            .or_else(|| config.scratch_root.clone())
            .unwrap_or_else(|| std::env::temp_dir().join("polytrans-sandbox"));
        Self { config, root }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn config(&self) -> &SandboxConfig {
        &self.config
    }

    pub fn toolchain(&self, language: &LanguageId) -> Result<&Toolchain, SandboxError> {
        self.config.toolchains.get(language.as_str()).ok_or_else(|| SandboxError::Unavailable {
            language: language.clone(),
            reason: "no toolchain configured".into(),
        })
    }

    /// Checks that every program the toolchain invokes can be found.
    pub fn check_toolchain(&self, language: &LanguageId) -> Result<(), SandboxError> {
        let tc = self.toolchain(language)?;
        for cmd in [&tc.compile_cmd, &tc.run_cmd] {
            let Some(prog) = cmd.first() else { continue };
            if prog.contains('{') {
                continue;
            }
            if find_program(prog).is_none() {
                return Err(SandboxError::Unavailable {
                    language: language.clone(),
                    reason: format!("`{prog}` not found on PATH"),
                });
            }
        }
        if tc.run_cmd.is_empty() {
            return Err(SandboxError::Unavailable {
                language: language.clone(),
                reason: "empty run_cmd".into(),
            });
        }
        Ok(())
    }

    fn run_verify(
        &self,
        candidate: &str,
        harness: &HarnessSource,
        limits: &ExecutionLimits,
        tc: &Toolchain,
    ) -> Result<Verdict, SandboxError> {
        fs::create_dir_all(&self.root)
            .map_err(|e| SandboxError::Internal(format!("scratch root {}: {e}", self.root.display())))?;
        let dir = tempfile::Builder::new()
            .prefix("v-")
            .tempdir_in(&self.root)
            .map_err(|e| SandboxError::Internal(format!("working directory: {e}")))?;
        let workdir = dir.path();
        let source = workdir.join(&tc.source_filename);
        fs::write(&source, assemble(harness, candidate))
            .map_err(|e| SandboxError::Internal(format!("writing source: {e}")))?;

        let memory_mb = (limits.memory_cap / (1024 * 1024)).max(1).to_string();
        let binary = workdir.join("prog");
        let expand = |tmpl: &[String]| -> Vec<String> {
            tmpl.iter()
                .map(|a| {
                    a.replace("{source}", &source.to_string_lossy())
                        .replace("{workdir}", &workdir.to_string_lossy())
                        .replace("{binary}", &binary.to_string_lossy())
                        .replace("{memory_mb}", &memory_mb)
                })
                .collect()
        };
        let cap = limits.output_cap as usize;
        let start = Instant::now();
        let spawn_err = |e: io::Error, step: &str| -> SandboxError {
            if e.kind() == io::ErrorKind::NotFound {
                SandboxError::Unavailable { language: harness.language.clone(), reason: format!("{step}: {e}") }
            } else {
                SandboxError::Internal(format!("{step}: {e}"))
            }
        };

        if !tc.compile_cmd.is_empty() {
            let compile = process::run(&ProcessSpec {
                argv: &expand(&tc.compile_cmd),
                workdir,
                timeout: Duration::from_secs_f64(limits.compile_timeout),
                memory_cap: None,
                output_cap: cap,
                network: self.config.network,
            })
            .map_err(|e| spawn_err(e, "compile"))?;
            if !compile.success() {
                let mut msg = if compile.timed_out {
                    format!("compilation exceeded {}s\n", limits.compile_timeout)
                } else {
                    String::new()
                };
                msg.push_str(&join_streams(&compile.stderr, &compile.stdout));
                let mut v = Verdict::new(Outcome::CompileError, truncate_diagnostics(&msg, cap));
                v.wall_time = start.elapsed().as_secs_f64();
                return Ok(v);
            }
        }

        let run = process::run(&ProcessSpec {
            argv: &expand(&tc.run_cmd),
            workdir,
            timeout: Duration::from_secs_f64(limits.run_timeout),
            memory_cap: tc.limit_address_space.then_some(limits.memory_cap),
            output_cap: cap,
            network: self.config.network,
        })
        .map_err(|e| spawn_err(e, "run"))?;
        let wall_time = start.elapsed().as_secs_f64();

        let stderr_text = String::from_utf8_lossy(&run.stderr.head).into_owned();
        let mut verdict = if run.timed_out {
            Verdict::new(Outcome::Timeout, format!("killed after {}s\n{stderr_text}", limits.run_timeout))
        } else if run.success() {
            let tail = String::from_utf8_lossy(&run.stdout.tail);
            if tail.trim_end().ends_with(COMPLETION_SENTINEL) {
                Verdict::new(Outcome::Pass, stderr_text)
            } else {
                Verdict::new(
                    Outcome::RuntimeError,
                    format!("exited before all cases ran\n{stderr_text}"),
                )
            }
        } else if let Some(case) = failing_case(&run.stderr) {
            Verdict::wrong_answer(case, stderr_text)
        } else {
            let how = match (run.signal(), run.status.and_then(|s| s.code())) {
                (Some(sig), _) => format!("terminated by signal {sig}"),
                (None, Some(code)) => format!("exit status {code}"),
                _ => "abnormal termination".to_string(),
            };
            Verdict::new(Outcome::RuntimeError, format!("{how}\n{}", join_streams(&run.stderr, &run.stdout)))
        };
        verdict.diagnostics = truncate_diagnostics(&verdict.diagnostics, cap);
        verdict.wall_time = wall_time;
        Ok(verdict)
    }
}

impl Verifier for Sandbox {
    fn probe(&self, language: &LanguageId) -> Result<(), SandboxError> {
        self.check_toolchain(language)
    }

    fn verify(
        &self,
        candidate: &str,
        language: &LanguageId,
        harness: &HarnessSource,
        limits: &ExecutionLimits,
    ) -> Result<(Verdict, u8), SandboxError> {
        if &harness.language != language {
            return Err(SandboxError::LanguageMismatch {
                harness: harness.language.clone(),
                candidate: language.clone(),
            });
        }
        limits.validate()?;
        self.check_toolchain(language)?;
        let tc = self.toolchain(language)?;
        let verdict = self.run_verify(candidate, harness, limits, tc)?;
        tracing::debug!(suite = %harness.suite_id, %language, outcome = %verdict.outcome, "verified");
        let reward = verdict.reward();
        Ok((verdict, reward))
    }
}

/// The harness prints its marker right before exiting, so the last one wins.
fn failing_case(stderr: &Captured) -> Option<usize> {
    let last = |bytes: &[u8]| {
        let text = String::from_utf8_lossy(bytes);
        FAIL_MARKER.captures_iter(&text).last().and_then(|c| c[1].parse().ok())
    };
    last(&stderr.tail).or_else(|| last(&stderr.head))
}

fn join_streams(primary: &Captured, secondary: &Captured) -> String {
    let mut s = String::from_utf8_lossy(&primary.head).into_owned();
    if primary.truncated {
        s.push_str(TRUNCATION_SENTINEL);
    }
    if !secondary.head.is_empty() {
        if !s.is_empty() && !s.ends_with('\n') {
            s.push('\n');
        }
        s.push_str(&String::from_utf8_lossy(&secondary.head));
    }
    s
}

/// Cuts `text` to at most `cap` bytes, ending in the truncation sentinel when
/// anything was dropped.
pub fn truncate_diagnostics(text: &str, cap: usize) -> String {
    if text.len() <= cap {
        return text.to_string();
    }
    let budget = cap.saturating_sub(TRUNCATION_SENTINEL.len());
    let mut end = budget;
    while !text.is_char_boundary(end) {
        end -= 1;
    }
    let mut out = text[..end].to_string();
    if cap >= TRUNCATION_SENTINEL.len() {
        out.push_str(TRUNCATION_SENTINEL);
    }
    out
}

fn find_program(prog: &str) -> Option<PathBuf> {
    if prog.contains('/') {
        let p = PathBuf::from(prog);
        return p.is_file().then_some(p);
    }
    let path = std::env::var_os("PATH")?;
    std::env::split_paths(&path).map(|d| d.join(prog)).find(|p| {
        use std::os::unix::fs::PermissionsExt;
        fs::metadata(p).map(|m| m.is_file() && m.permissions().mode() & 0o111 != 0).unwrap_or(false)
    })
}
