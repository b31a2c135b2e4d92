//! Completion-endpoint client.
//!
//! Request body: `{prompt, n, temperature, top_p, max_tokens, logprobs: true}`
//! plus `model` when configured. The response must carry `choices`, each with
//! `text` and `logprobs: {tokens, token_logprobs}`; `token_ids` is optional
//! and token strings are hashed when it is absent.

use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{token_id, DecodeMode, Generation, GenerationRequest, Policy, PolicyError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HttpPolicyConfig {
    pub endpoint_url: String,
    /// Environment variable holding a bearer token.
    pub auth_token_env_var: Option<String>,
    pub model: Option<String>,
    pub timeout_secs: f64,
    pub max_in_flight: usize,
}

impl Default for HttpPolicyConfig {
    fn default() -> Self {
        Self {
            endpoint_url: "http://127.0.0.1:8000/v1/completions".into(),
            auth_token_env_var: None,
            model: None,
            timeout_secs: 300.0,
            max_in_flight: 8,
        }
    }
}

#[derive(Serialize)]
struct WireRequest<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    model: Option<&'a str>,
    prompt: &'a str,
    n: usize,
    temperature: f64,
    top_p: f64,
    max_tokens: u32,
    logprobs: bool,
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
}

#[derive(Deserialize)]
struct WireChoice {
    #[serde(default)]
    index: Option<usize>,
    text: String,
    logprobs: Option<WireLogprobs>,
}

#[derive(Deserialize)]
struct WireLogprobs {
    tokens: Vec<String>,
    token_logprobs: Vec<Option<f64>>,
    #[serde(default)]
    token_ids: Option<Vec<u32>>,
}

/// Counting semaphore bounding concurrent requests.
#[derive(Debug)]
struct Gate {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Gate {
    fn enter(&self) -> GateGuard<'_> {
        let mut n = self.free.lock().unwrap();
        while *n == 0 {
            n = self.cv.wait(n).unwrap();
        }
        *n -= 1;
        GateGuard(self)
    }
}

struct GateGuard<'a>(&'a Gate);

impl Drop for GateGuard<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap() += 1;
        self.0.cv.notify_one();
    }
}

#[derive(Debug)]
pub struct HttpPolicy {
    config: HttpPolicyConfig,
    client: reqwest::blocking::Client,
    token: Option<String>,
    gate: Gate,
}

impl HttpPolicy {
    pub fn new(config: HttpPolicyConfig) -> Result<Self, PolicyError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(config.timeout_secs))
            .build()
            .map_err(|e| PolicyError::Unavailable(e.to_string()))?;
        let token = match &config.auth_token_env_var {
            Some(var) => Some(
                std::env::var(var).map_err(|_| PolicyError::Unavailable(format!("environment variable {var} is not set")))?,
            ),
            None => None,
        };
        let gate = Gate { free: Mutex::new(config.max_in_flight.max(1)), cv: Condvar::new() };
        Ok(Self { config, client, token, gate })
    }

    fn parse(&self, body: WireResponse, req: &GenerationRequest) -> Result<Vec<Generation>, PolicyError> {
        let n = req.num_candidates;
        if body.choices.len() != n {
            return Err(PolicyError::Protocol(format!("expected {n} choices, got {}", body.choices.len())));
        }
        let mut slots: Vec<Option<Generation>> = vec![None; n];
        for (pos, c) in body.choices.into_iter().enumerate() {
            let idx = c.index.unwrap_or(pos);
            if idx >= n || slots[idx].is_some() {
                return Err(PolicyError::Protocol(format!("bad or repeated choice index {idx}")));
            }
            let lp = c.logprobs.ok_or_else(|| PolicyError::Protocol(format!("choice {idx} lacks logprobs")))?;
            if lp.tokens.is_empty() || lp.tokens.len() != lp.token_logprobs.len() {
                return Err(PolicyError::Protocol(format!(
                    "choice {idx}: {} tokens but {} logprobs",
                    lp.tokens.len(),
                    lp.token_logprobs.len()
                )));
            }
            let logprobs = lp
                .token_logprobs
                .iter()
                .map(|x| match x {
                    Some(v) if v.is_finite() && *v <= 0.0 => Ok(*v),
                    other => Err(PolicyError::Protocol(format!("choice {idx}: invalid logprob {other:?}"))),
                })
                .collect::<Result<Vec<_>, _>>()?;
            let tokens = match lp.token_ids {
                Some(ids) if ids.len() == lp.tokens.len() => ids,
                Some(_) => return Err(PolicyError::Protocol(format!("choice {idx}: token_ids length mismatch"))),
                None => lp.tokens.iter().map(|t| token_id(t)).collect(),
            };
            slots[idx] = Some(Generation::for_target(c.text, &req.target, tokens, logprobs));
        }
        Ok(slots.into_iter().map(|s| s.expect("all indices filled")).collect())
    }
}

impl Policy for HttpPolicy {
    fn generate(&self, req: &GenerationRequest) -> Result<Vec<Generation>, PolicyError> {
        req.validate()?;
        let prompt = req.prompt();
        let (temperature, top_p) = match req.decode.mode {
            DecodeMode::Greedy => (0.0, 1.0),
            DecodeMode::Sample => (req.decode.temperature, req.decode.top_p),
        };
        let wire = WireRequest {
            model: self.config.model.as_deref(),
            prompt: &prompt,
            n: req.num_candidates,
            temperature,
            top_p,
            max_tokens: req.decode.max_tokens,
            logprobs: true,
        };
        let _slot = self.gate.enter();
        let mut rb = self.client.post(&self.config.endpoint_url).json(&wire);
        if let Some(t) = &self.token {
            rb = rb.bearer_auth(t);
        }
        let resp = rb.send().map_err(|e| PolicyError::Unavailable(e.to_string()))?;
        let status = resp.status();
        if !status.is_success() {
            let text = resp.text().unwrap_or_default();
            return Err(PolicyError::Unavailable(format!("HTTP {status}: {}", text.chars().take(500).collect::<String>())));
        }
        let body: WireResponse = resp.json().map_err(|e| PolicyError::Protocol(e.to_string()))?;
        self.parse(body, req)
    }

    fn describe(&self) -> String {
        format!("http({})", self.config.endpoint_url)
    }
}
