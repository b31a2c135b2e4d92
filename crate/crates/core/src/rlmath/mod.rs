//! Rewards, language-aware weights, group-relative advantages and the
//! weighted clipped surrogate objective.
//!
//! Everything accumulates in f64 in a fixed order (groups in batch order,
//! candidates in index order, tokens in position order) so results are
//! bit-reproducible.

pub mod toy;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lang::LanguageId;
use crate::sandbox::Verdict;

#[derive(Debug, Error, PartialEq)]
pub enum ObjectiveError {
    #[error("group {group} candidate {candidate}: expected {expected} logprobs, got {found}")]
    Alignment { group: usize, candidate: usize, expected: usize, found: usize },
    #[error("logprob arrays cover {found} groups, expected {expected}")]
    GroupCount { expected: usize, found: usize },
    #[error("group {0} has no defined weight and should have been skipped")]
    UndefinedWeight(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveConfig {
    pub clip_epsilon: f64,
    pub kl_coefficient: f64,
    pub group_size: usize,
    /// Divide the weighted sum over (item, target) groups by their count.
    #[serde(default)]
    pub batch_mean: bool,
}

impl Default for ObjectiveConfig {
    fn default() -> Self {
        Self { clip_epsilon: 0.2, kl_coefficient: 0.01, group_size: 8, batch_mean: false }
    }
}

impl ObjectiveConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.clip_epsilon > 0.0) {
            return Err(format!("clip_epsilon must be > 0, got {}", self.clip_epsilon));
        }
        if !(self.kl_coefficient >= 0.0) {
            return Err(format!("kl_coefficient must be >= 0, got {}", self.kl_coefficient));
        }
        if self.group_size < 2 {
            return Err(format!("group_size must be >= 2, got {}", self.group_size));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRollout {
    pub tokens: Vec<u32>,
    pub rollout_logprobs: Vec<f64>,
    pub reward: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<Verdict>,
}

impl CandidateRollout {
    pub fn is_valid(&self) -> bool {
        !self.tokens.is_empty()
            && self.tokens.len() == self.rollout_logprobs.len()
            && self.rollout_logprobs.iter().all(|&l| l <= 0.0 && !l.is_nan())
            && self.reward <= 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslationGroup {
    pub source_ref: String,
    pub source_lang: LanguageId,
    pub target: LanguageId,
    pub candidates: Vec<CandidateRollout>,
    pub cumulative_reward: u32,
    pub sibling_reward: u32,
    pub weight: Option<f64>,
    pub advantages: Vec<f64>,
}

impl TranslationGroup {
    pub fn rewards(&self) -> Vec<u8> {
        self.candidates.iter().map(|c| c.reward).collect()
    }
}

/// Builds one group per target for a single source item. Each group's
/// sibling reward is the total over the other targets.
pub fn build_groups(
    source_ref: &str,
    source_lang: &LanguageId,
    per_target: Vec<(LanguageId, Vec<CandidateRollout>)>,
) -> Vec<TranslationGroup> {
    let own: Vec<u32> = per_target
        .iter()
        .map(|(_, c)| c.iter().map(|r| u32::from(r.reward)).sum())
        .collect();
    let total: u32 = own.iter().sum();
    per_target
        .into_iter()
        .zip(own)
        .map(|((target, candidates), own)| {
            let rewards: Vec<u8> = candidates.iter().map(|c| c.reward).collect();
            TranslationGroup {
                source_ref: source_ref.to_string(),
                source_lang: source_lang.clone(),
                target,
                advantages: group_advantages(&rewards),
                candidates,
                cumulative_reward: own,
                sibling_reward: total - own,
                weight: language_weight(own, total - own),
            }
        })
        .collect()
}

/// sibling / (own + sibling); `None` when no candidate in any direction
/// passed, in which case the item is skipped.
pub fn language_weight(own: u32, sibling: u32) -> Option<f64> {
    let total = own + sibling;
    (total > 0).then(|| f64::from(sibling) / f64::from(total))
}

/// Standardizes rewards within the group using the population standard
/// deviation. A group with identical rewards gets all-zero advantages.
pub fn group_advantages(rewards: &[u8]) -> Vec<f64> {
    let n = rewards.len() as f64;
    if rewards.is_empty() {
        return Vec::new();
    }
    let mean = rewards.iter().map(|&r| f64::from(r)).sum::<f64>() / n;
    let var = rewards.iter().map(|&r| (f64::from(r) - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    if std == 0.0 {
        return vec![0.0; rewards.len()];
    }
    rewards.iter().map(|&r| (f64::from(r) - mean) / std).collect()
}

pub fn clip(r: f64, epsilon: f64) -> f64 {
    r.clamp(1.0 - epsilon, 1.0 + epsilon)
}

/// min(r·A, clip(r, 1−ε, 1+ε)·A)
pub fn token_surrogate(ratio: f64, advantage: f64, epsilon: f64) -> f64 {
    (ratio * advantage).min(clip(ratio, epsilon) * advantage)
}

fn token_surrogate_grad_ratio(ratio: f64, advantage: f64, epsilon: f64) -> f64 {
    // the clipped branch is constant in r unless clip(r) = r
    if ratio * advantage <= clip(ratio, epsilon) * advantage {
        advantage
    } else {
        0.0
    }
}

/// exp(Δ) − Δ − 1 with Δ = logp_reference − logp_current.
pub fn kl_penalty_token(logp_current: f64, logp_reference: f64) -> f64 {
    let d = logp_reference - logp_current;
    d.exp() - d - 1.0
}

/// Per-candidate, per-token log-probabilities aligned with `groups`.
pub type TokenLogprobs = [Vec<Vec<f64>>];

fn check_alignment(groups: &[TranslationGroup], lp: &TokenLogprobs) -> Result<(), ObjectiveError> {
    if lp.len() != groups.len() {
        return Err(ObjectiveError::GroupCount { expected: groups.len(), found: lp.len() });
    }
    for (gi, (g, cands)) in groups.iter().zip(lp).enumerate() {
        if cands.len() != g.candidates.len() {
            return Err(ObjectiveError::Alignment {
                group: gi,
                candidate: cands.len().min(g.candidates.len()),
                expected: g.candidates.len(),
                found: cands.len(),
            });
        }
        for (ci, (c, l)) in g.candidates.iter().zip(cands).enumerate() {
            if c.tokens.len() != l.len() || c.rollout_logprobs.len() != c.tokens.len() {
                return Err(ObjectiveError::Alignment {
                    group: gi,
                    candidate: ci,
                    expected: c.tokens.len(),
                    found: l.len(),
                });
            }
        }
        if g.advantages.len() != g.candidates.len() {
            return Err(ObjectiveError::Alignment {
                group: gi,
                candidate: g.advantages.len(),
                expected: g.candidates.len(),
                found: g.advantages.len(),
            });
        }
    }
    Ok(())
}

/// Objective value and its gradient with respect to every current-policy
/// token log-probability.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveEval {
    pub value: f64,
    pub grad_logprobs: Vec<Vec<Vec<f64>>>,
}

/// Σ_{i,k} w · (1/G) Σ_j (1/|o_j|) Σ_t [min(rÂ, clip(r)Â) − β·KL], with
/// r = exp(logp_current − logp_rollout). G is the group's candidate count.
pub fn grpo_objective(
    groups: &[TranslationGroup],
    current: &TokenLogprobs,
    reference: &TokenLogprobs,
    config: &ObjectiveConfig,
) -> Result<f64, ObjectiveError> {
    grpo_objective_with_grad(groups, current, reference, config).map(|e| e.value)
}

pub fn grpo_objective_with_grad(
    groups: &[TranslationGroup],
    current: &TokenLogprobs,
    reference: &TokenLogprobs,
    config: &ObjectiveConfig,
) -> Result<ObjectiveEval, ObjectiveError> {
    check_alignment(groups, current)?;
    check_alignment(groups, reference)?;
    let scale = if config.batch_mean && !groups.is_empty() { 1.0 / groups.len() as f64 } else { 1.0 };
    let eps = config.clip_epsilon;
    let beta = config.kl_coefficient;

    let mut value = 0.0;
    let mut grad = Vec::with_capacity(groups.len());
    for (gi, g) in groups.iter().enumerate() {
        let w = g.weight.ok_or(ObjectiveError::UndefinedWeight(gi))?;
        let inv_g = 1.0 / g.candidates.len() as f64;
        let mut group_sum = 0.0;
        let mut group_grad = Vec::with_capacity(g.candidates.len());
        for (j, cand) in g.candidates.iter().enumerate() {
            let a = g.advantages[j];
            let inv_len = 1.0 / cand.tokens.len() as f64;
            let coef = scale * w * inv_g * inv_len;
            let mut cand_sum = 0.0;
            let mut cand_grad = Vec::with_capacity(cand.tokens.len());
            for t in 0..cand.tokens.len() {
                let lc = current[gi][j][t];
                let lo = cand.rollout_logprobs[t];
                let lr = reference[gi][j][t];
                let r = (lc - lo).exp();
                cand_sum += token_surrogate(r, a, eps) - beta * kl_penalty_token(lc, lr);
                let d_sur = token_surrogate_grad_ratio(r, a, eps) * r;
                let d_kl = 1.0 - (lr - lc).exp();
                cand_grad.push(coef * (d_sur - beta * d_kl));
            }
            group_sum += inv_len * cand_sum;
            group_grad.push(cand_grad);
        }
        value += scale * w * inv_g * group_sum;
        grad.push(group_grad);
    }
    Ok(ObjectiveEval { value, grad_logprobs: grad })
}

/// Rollout log-probabilities laid out for `grpo_objective`, i.e. the
/// on-policy case where the current policy equals the rollout policy.
pub fn rollout_logprobs(groups: &[TranslationGroup]) -> Vec<Vec<Vec<f64>>> {
    groups
        .iter()
        .map(|g| g.candidates.iter().map(|c| c.rollout_logprobs.clone()).collect())
        .collect()
}
