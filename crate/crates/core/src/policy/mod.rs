//! The translation policy: prompt rendering, completion post-processing and
//! the [`Policy`] trait with scripted and HTTP implementations.

mod http;
mod scripted;

pub use http::{HttpPolicy, HttpPolicyConfig};
pub use scripted::{ScriptedConfig, ScriptedPolicy, TableEntry, TranslationTable};

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lang::LanguageId;
use crate::pools::CodeUnit;

const PROMPT_TEMPLATE: &str = "Please translate source {{source_lang}} \ncode to target {{target_lang}} code:\n```{{source_lang}}\n{{source_code}}```\nThe translated {{target_lang}} code should \nbe:\n```{{target_lang}}\n{{target_signature}}```";

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("policy endpoint unavailable: {0}")]
    Unavailable(String),
    #[error("malformed policy response: {0}")]
    Protocol(String),
    #[error("invalid generation request: {0}")]
    InvalidRequest(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecodeMode {
    Greedy,
    Sample,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecodeParams {
    pub mode: DecodeMode,
    pub temperature: f64,
    pub top_p: f64,
    pub max_tokens: u32,
}

impl Default for DecodeParams {
    /// Rollout decoding.
    fn default() -> Self {
        Self { mode: DecodeMode::Sample, temperature: 1.0, top_p: 1.0, max_tokens: 1024 }
    }
}

impl DecodeParams {
    /// Evaluation decoding.
    pub fn greedy() -> Self {
        Self { mode: DecodeMode::Greedy, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.max_tokens == 0 {
            return Err("max_tokens must be positive".into());
        }
        if self.mode == DecodeMode::Sample {
            if !(self.temperature > 0.0) {
                return Err(format!("sampling temperature must be > 0, got {}", self.temperature));
            }
            if !(self.top_p > 0.0 && self.top_p <= 1.0) {
                return Err(format!("top_p must be in (0, 1], got {}", self.top_p));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRequest {
    pub source: CodeUnit,
    pub target: LanguageId,
    pub target_signature: String,
    pub num_candidates: usize,
    pub decode: DecodeParams,
}

impl GenerationRequest {
    pub fn validate(&self) -> Result<(), PolicyError> {
        if self.target == self.source.language {
            return Err(PolicyError::InvalidRequest(format!("target equals source language `{}`", self.target)));
        }
        if self.num_candidates == 0 {
            return Err(PolicyError::InvalidRequest("num_candidates must be at least 1".into()));
        }
        self.decode.validate().map_err(PolicyError::InvalidRequest)
    }

    pub fn prompt(&self) -> String {
        render_prompt(&self.source, &self.target, &self.target_signature)
    }
}

/// One completion with its tokenization and rollout-time log-probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generation {
    pub completion: String,
    /// Code extracted from `completion`.
    pub source_text: String,
    pub tokens: Vec<u32>,
    pub logprobs: Vec<f64>,
}

impl Generation {
    pub fn new(completion: String, tokens: Vec<u32>, logprobs: Vec<f64>) -> Self {
        let source_text = extract_code(&completion, None);
        Self { completion, source_text, tokens, logprobs }
    }

    pub fn for_target(completion: String, target: &LanguageId, tokens: Vec<u32>, logprobs: Vec<f64>) -> Self {
        let source_text = extract_code(&completion, Some(target));
        Self { completion, source_text, tokens, logprobs }
    }

    /// Nothing runnable was produced; the sandbox is skipped and the
    /// candidate is recorded as a compile error.
    pub fn extraction_empty(&self) -> bool {
        self.source_text.trim().is_empty()
    }
}

pub trait Policy: Send + Sync {
    /// Exactly `request.num_candidates` generations, in order.
    fn generate(&self, request: &GenerationRequest) -> Result<Vec<Generation>, PolicyError>;

    fn describe(&self) -> String;
}

/// Fills the translation prompt template.
pub fn render_prompt(source: &CodeUnit, target: &LanguageId, target_signature: &str) -> String {
    PROMPT_TEMPLATE
        .replace("{{source_code}}", &source.source_text)
        .replace("{{target_signature}}", target_signature)
        .replace("{{source_lang}}", &source.language.display_name())
        .replace("{{target_lang}}", &target.display_name())
}

fn aliases(lang: &LanguageId) -> Vec<String> {
    let mut v = vec![lang.as_str().to_ascii_lowercase(), lang.display_name().to_ascii_lowercase()];
    match lang.as_str() {
        "python" => v.extend(["py", "python3"].map(String::from)),
        "cpp" => v.extend(["c++", "cc", "cxx", "c++17"].map(String::from)),
        _ => {}
    }
    v
}

static FENCE_LINE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\s*```\s*([^`\s]*)\s*$").unwrap());

struct Fence {
    tag: String,
    body: String,
}

fn complete_fences(text: &str) -> Vec<Fence> {
    let mut out = Vec::new();
    let mut open: Option<(String, String)> = None;
    for line in text.split_inclusive('\n') {
        let bare = line.trim_end_matches(['\n', '\r']);
        match (&mut open, FENCE_LINE.captures(bare)) {
            (None, Some(c)) => open = Some((c[1].to_ascii_lowercase(), String::new())),
            (Some(_), Some(c)) if c[1].is_empty() => {
                let (tag, body) = open.take().unwrap();
                out.push(Fence { tag, body });
            }
            (Some((_, body)), _) => body.push_str(line),
            (None, None) => {}
        }
    }
    out
}

fn extract_once(text: &str, target: Option<&LanguageId>) -> String {
    let fences = complete_fences(text);
    if let Some(t) = target {
        let names = aliases(t);
        if let Some(f) = fences.iter().find(|f| names.contains(&f.tag)) {
            return f.body.clone();
        }
    }
    // untagged, or any tag when the target is unknown
    if let Some(f) = fences.iter().find(|f| f.tag.is_empty() || target.is_none()) {
        return f.body.clone();
    }
    text.to_string()
}

/// Content of the first complete code fence for `target` (falling back to
/// the first untagged fence), or the whole completion when there is none.
/// Applied to a fixed point so that extraction is idempotent.
pub fn extract_code(completion: &str, target: Option<&LanguageId>) -> String {
    let mut cur = completion.to_string();
    loop {
        let next = extract_once(&cur, target);
        if next == cur {
            return cur;
        }
        cur = next;
    }
}

/// 32-bit FNV-1a, used for opaque token ids when a backend supplies none.
pub fn token_id(piece: &str) -> u32 {
    let mut h: u32 = 0x811c_9dc5;
    for b in piece.bytes() {
        h ^= u32::from(b);
        h = h.wrapping_mul(0x0100_0193);
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testspec::{EntrypointSignature, SemanticType};

    fn unit(text: &str) -> CodeUnit {
        CodeUnit {
            source_text: text.into(),
            language: LanguageId::python(),
            entrypoint: EntrypointSignature::new("f", vec![SemanticType::Int], SemanticType::Int),
        }
    }

    #[test]
    fn prompt_template() {
        let p = render_prompt(&unit("def f(x):\n    return x\n"), &LanguageId::cpp(), "long long f(long long arg0) {\n");
        assert_eq!(
            p,
            "Please translate source Python \ncode to target C++ code:\n```Python\ndef f(x):\n    return x\n```\nThe translated C++ code should \nbe:\n```C++\nlong long f(long long arg0) {\n```"
        );
        let empty = render_prompt(&unit("x = 1\n"), &LanguageId::java(), "");
        assert!(empty.ends_with("```Java\n```"));
    }

    #[test]
    fn extraction() {
        let cpp = LanguageId::cpp();
        let c = "Sure.\n```python\nnope\n```\n```cpp\nint f() { return 1; }\n```\ntrailing";
        assert_eq!(extract_code(c, Some(&cpp)), "int f() { return 1; }\n");
        assert_eq!(extract_code("```\nA\n```", Some(&cpp)), "A\n");
        assert_eq!(extract_code("int f();\n", Some(&cpp)), "int f();\n");
        // unterminated fence: the whole completion
        assert_eq!(extract_code("```cpp\nint f();", Some(&cpp)), "```cpp\nint f();");
        let once = extract_code("```c++\n```cpp\nB\n```\n```", Some(&cpp));
        assert_eq!(extract_code(&once, Some(&cpp)), once);
        assert!(Generation::for_target("```cpp\n\n```".into(), &cpp, vec![1], vec![-0.1]).extraction_empty());
    }

    #[test]
    fn decode_defaults() {
        let d = DecodeParams::default();
        assert_eq!((d.mode, d.temperature, d.top_p, d.max_tokens), (DecodeMode::Sample, 1.0, 1.0, 1024));
        assert_eq!(DecodeParams::greedy().mode, DecodeMode::Greedy);
        assert!(DecodeParams { temperature: 0.0, ..d }.validate().is_err());
        assert!(DecodeParams { temperature: 0.0, ..DecodeParams::greedy() }.validate().is_ok());
    }
}
