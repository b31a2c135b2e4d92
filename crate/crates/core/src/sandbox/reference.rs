//! A verifier that judges by lookup instead of execution, for simulated
//! training runs where exact execution semantics do not matter.

use std::collections::HashMap;

use super::{ExecutionLimits, Outcome, SandboxError, Verdict, Verifier};
use crate::lang::LanguageId;
use crate::transpiler::HarnessSource;

fn normalize(source: &str) -> String {
    let mut out = String::new();
    for line in source.trim().lines() {
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

/// Passes a candidate iff its text matches an accepted solution registered
/// for the harness's (suite, language). Registered wrong solutions yield
/// `WrongAnswer`; anything else is a `CompileError`. Subsampled suite ids
/// (`name@fraction`) resolve to their base suite.
#[derive(Debug, Clone, Default)]
pub struct ReferenceVerifier {
    accepted: HashMap<(String, String), Vec<String>>,
    rejected: HashMap<(String, String), Vec<String>>,
}

impl ReferenceVerifier {
    pub fn accept(&mut self, suite_id: &str, language: &LanguageId, source: &str) {
        self.accepted.entry((suite_id.to_string(), language.to_string())).or_default().push(normalize(source));
    }

    pub fn reject(&mut self, suite_id: &str, language: &LanguageId, source: &str) {
        self.rejected.entry((suite_id.to_string(), language.to_string())).or_default().push(normalize(source));
    }

    fn lookup<'a>(map: &'a HashMap<(String, String), Vec<String>>, suite: &str, lang: &str) -> &'a [String] {
        let base = suite.split('@').next().unwrap_or(suite);
        map.get(&(suite.to_string(), lang.to_string()))
            .or_else(|| map.get(&(base.to_string(), lang.to_string())))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }
}

impl Verifier for ReferenceVerifier {
    fn verify(
        &self,
        candidate: &str,
        language: &LanguageId,
        harness: &HarnessSource,
        _limits: &ExecutionLimits,
    ) -> Result<(Verdict, u8), SandboxError> {
        if &harness.language != language {
            return Err(SandboxError::LanguageMismatch {
                harness: harness.language.clone(),
                candidate: language.clone(),
            });
        }
        let c = normalize(candidate);
        let verdict = if Self::lookup(&self.accepted, &harness.suite_id, language.as_str()).contains(&c) {
            Verdict::new(Outcome::Pass, "")
        } else if Self::lookup(&self.rejected, &harness.suite_id, language.as_str()).contains(&c) {
            Verdict::wrong_answer(0, "FAIL case=0")
        } else {
            Verdict::new(Outcome::CompileError, "unrecognized candidate")
        };
        let r = verdict.reward();
        Ok((verdict, r))
    }
}
