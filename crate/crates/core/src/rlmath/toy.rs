//! A context-free policy with one explicit logit row per position, small
//! enough to check analytic gradients against finite differences.

use super::{grpo_objective_with_grad, ObjectiveConfig, ObjectiveError, TranslationGroup};

#[derive(Debug, Clone, PartialEq)]
pub struct ToyPolicy {
    /// `logits[position][token]`
    pub logits: Vec<Vec<f64>>,
}

fn log_softmax(row: &[f64]) -> Vec<f64> {
    let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + row.iter().map(|x| (x - m).exp()).sum::<f64>().ln();
    row.iter().map(|x| x - lse).collect()
}

impl ToyPolicy {
    pub fn vocab(&self) -> usize {
        self.logits.first().map_or(0, Vec::len)
    }

    pub fn logprob(&self, position: usize, token: u32) -> f64 {
        log_softmax(&self.logits[position])[token as usize]
    }

    /// Token log-probabilities of every candidate in `groups`.
    pub fn score(&self, groups: &[TranslationGroup]) -> Vec<Vec<Vec<f64>>> {
        let rows: Vec<Vec<f64>> = self.logits.iter().map(|r| log_softmax(r)).collect();
        groups
            .iter()
            .map(|g| {
                g.candidates
                    .iter()
                    .map(|c| c.tokens.iter().enumerate().map(|(t, &tok)| rows[t][tok as usize]).collect())
                    .collect()
            })
            .collect()
    }

    pub fn objective(
        &self,
        groups: &[TranslationGroup],
        reference: &[Vec<Vec<f64>>],
        config: &ObjectiveConfig,
    ) -> Result<f64, ObjectiveError> {
        super::grpo_objective(groups, &self.score(groups), reference, config)
    }

    /// Analytic gradient of the objective with respect to every logit,
    /// chaining d/dlogp through the softmax Jacobian.
    pub fn objective_grad(
        &self,
        groups: &[TranslationGroup],
        reference: &[Vec<Vec<f64>>],
        config: &ObjectiveConfig,
    ) -> Result<(f64, Vec<Vec<f64>>), ObjectiveError> {
        let eval = grpo_objective_with_grad(groups, &self.score(groups), reference, config)?;
        let probs: Vec<Vec<f64>> =
            self.logits.iter().map(|r| log_softmax(r).into_iter().map(f64::exp).collect()).collect();
        let mut grad = vec![vec![0.0; self.vocab()]; self.logits.len()];
        for (g, gg) in groups.iter().zip(&eval.grad_logprobs) {
            for (c, cg) in g.candidates.iter().zip(gg) {
                for (t, (&tok, &d)) in c.tokens.iter().zip(cg).enumerate() {
                    for (v, p) in probs[t].iter().enumerate() {
                        let onehot = if v == tok as usize { 1.0 } else { 0.0 };
                        grad[t][v] += d * (onehot - p);
                    }
                }
            }
        }
        Ok((eval.value, grad))
    }
}
