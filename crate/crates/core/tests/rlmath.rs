use approx::assert_relative_eq;
use polytrans_core::rlmath::toy::ToyPolicy;
use polytrans_core::rlmath::*;
use polytrans_core::LanguageId;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Straight-line scalar reimplementation used as the oracle.
fn oracle(
    groups: &[(f64, Vec<f64>, Vec<Vec<f64>>)], // (weight, advantages, rollout lp)
    cur: &[Vec<Vec<f64>>],
    reff: &[Vec<Vec<f64>>],
    eps: f64,
    beta: f64,
) -> f64 {
    let mut total = 0.0;
    for (gi, (w, adv, old)) in groups.iter().enumerate() {
        let g = adv.len() as f64;
        let mut inner = 0.0;
        for j in 0..adv.len() {
            let n = old[j].len() as f64;
            let mut s = 0.0;
            for t in 0..old[j].len() {
                let ratio = (cur[gi][j][t] - old[j][t]).exp();
                let lo = 1.0 - eps;
                let hi = 1.0 + eps;
                let clipped = if ratio < lo { lo } else if ratio > hi { hi } else { ratio };
                let a = ratio * adv[j];
                let b = clipped * adv[j];
                let sur = if a < b { a } else { b };
                let q = (reff[gi][j][t] - cur[gi][j][t]).exp();
                let kl = q - q.ln() - 1.0;
                s += sur - beta * kl;
            }
            inner += s / n;
        }
        total += w * inner / g;
    }
    total
}

fn oracle_std_advantages(r: &[u8]) -> Vec<f64> {
    let xs: Vec<f64> = r.iter().map(|&x| x as f64).collect();
    let n = xs.len() as f64;
    let mu = xs.iter().sum::<f64>() / n;
    let sd = (xs.iter().map(|x| x * x).sum::<f64>() / n - mu * mu).max(0.0).sqrt();
    if sd < 1e-12 {
        return vec![0.0; xs.len()];
    }
    xs.iter().map(|x| (x - mu) / sd).collect()
}

fn random_groups(rng: &mut ChaCha8Rng, n_groups: usize, g: usize, len: usize, vocab: u32) -> Vec<TranslationGroup> {
    (0..n_groups)
        .map(|i| {
            let candidates: Vec<CandidateRollout> = (0..g)
                .map(|_| CandidateRollout {
                    tokens: (0..len).map(|_| rng.gen_range(0..vocab)).collect(),
                    rollout_logprobs: (0..len).map(|_| -rng.gen_range(0.05..3.0)).collect(),
                    reward: rng.gen_range(0..2),
                    verdict: None,
                })
                .collect();
            let rewards: Vec<u8> = candidates.iter().map(|c| c.reward).collect();
            TranslationGroup {
                source_ref: format!("s{i}"),
                source_lang: LanguageId::python(),
                target: LanguageId::cpp(),
                cumulative_reward: rewards.iter().map(|&r| r as u32).sum(),
                sibling_reward: 3,
                weight: Some(rng.gen_range(0.0..1.0)),
                advantages: group_advantages(&rewards),
                candidates,
            }
        })
        .collect()
}

fn perturb(rng: &mut ChaCha8Rng, lp: &[Vec<Vec<f64>>], scale: f64) -> Vec<Vec<Vec<f64>>> {
    lp.iter()
        .map(|g| g.iter().map(|c| c.iter().map(|x| (x + rng.gen_range(-scale..scale)).min(0.0)).collect()).collect())
        .collect()
}

#[test]
fn worked_examples() {
    let a = group_advantages(&[1, 0, 0, 0]);
    let s3 = 3f64.sqrt();
    for (x, y) in a.iter().zip([s3, -1.0 / s3, -1.0 / s3, -1.0 / s3]) {
        assert_relative_eq!(*x, y, epsilon = 1e-12);
    }
    let k = kl_penalty_token(0.5f64.ln(), 0.25f64.ln());
    assert_relative_eq!(k, 0.5 + 2f64.ln() - 1.0, epsilon = 1e-12);
    assert_relative_eq!(k, 0.19315, epsilon = 1e-5);

    // r = 2, A = 1, one token, G = 1, β = 0
    let g = TranslationGroup {
        source_ref: "s".into(),
        source_lang: LanguageId::python(),
        target: LanguageId::cpp(),
        candidates: vec![CandidateRollout { tokens: vec![0], rollout_logprobs: vec![-(2f64.ln()) - 0.5], reward: 1, verdict: None }],
        cumulative_reward: 1,
        sibling_reward: 0,
        weight: Some(1.0),
        advantages: vec![1.0],
    };
    let old = g.candidates[0].rollout_logprobs[0];
    let cur = vec![vec![vec![old + 2f64.ln()]]];
    let cfg = ObjectiveConfig { kl_coefficient: 0.0, ..Default::default() };
    let v = grpo_objective(std::slice::from_ref(&g), &cur, &cur, &cfg).unwrap();
    assert_relative_eq!(v, 1.2, epsilon = 1e-12);
}

#[test]
fn fresh_policy_gives_weighted_mean_advantage() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut groups = random_groups(&mut rng, 1, 6, 4, 10);
    groups[0].advantages = vec![0.3, -1.0, 2.0, 0.0, 0.5, 0.1];
    let w = groups[0].weight.unwrap();
    let lp = rollout_logprobs(&groups);
    let v = grpo_objective(&groups, &lp, &lp, &ObjectiveConfig::default()).unwrap();
    assert_relative_eq!(v, w * (0.3 - 1.0 + 2.0 + 0.5 + 0.1) / 6.0, epsilon = 1e-12);
}

#[test]
fn randomized_instance_matches_oracle() {
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let groups = random_groups(&mut rng, 3, 4, 3, 12);
        let old = rollout_logprobs(&groups);
        let cur = perturb(&mut rng, &old, 0.4);
        let reff = perturb(&mut rng, &old, 0.4);
        let cfg = ObjectiveConfig::default();
        let got = grpo_objective(&groups, &cur, &reff, &cfg).unwrap();
        let spec: Vec<_> = groups
            .iter()
            .map(|g| {
                (g.weight.unwrap(), g.advantages.clone(), g.candidates.iter().map(|c| c.rollout_logprobs.clone()).collect())
            })
            .collect();
        let want = oracle(&spec, &cur, &reff, 0.2, 0.01);
        assert!((got - want).abs() <= 1e-12, "seed {seed}: {got} vs {want}");

        let mean = grpo_objective(&groups, &cur, &reff, &ObjectiveConfig { batch_mean: true, ..cfg }).unwrap();
        assert_relative_eq!(mean * 3.0, got, epsilon = 1e-12);
    }
}

#[test]
fn misaligned_inputs_are_rejected() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let groups = random_groups(&mut rng, 2, 3, 3, 5);
    let mut lp = rollout_logprobs(&groups);
    lp[1][2].pop();
    assert!(matches!(
        grpo_objective(&groups, &lp, &lp, &ObjectiveConfig::default()),
        Err(ObjectiveError::Alignment { group: 1, candidate: 2, .. })
    ));
    let mut skipped = groups.clone();
    skipped[0].weight = None;
    let lp = rollout_logprobs(&skipped);
    assert_eq!(
        grpo_objective(&skipped, &lp, &lp, &ObjectiveConfig::default()),
        Err(ObjectiveError::UndefinedWeight(0))
    );
}

fn central_difference(policy: &ToyPolicy, groups: &[TranslationGroup], reff: &[Vec<Vec<f64>>], cfg: &ObjectiveConfig) -> Vec<Vec<f64>> {
    let h = 1e-6;
    let mut out = vec![vec![0.0; policy.vocab()]; policy.logits.len()];
    for t in 0..policy.logits.len() {
        for v in 0..policy.vocab() {
            let mut p = policy.clone();
            p.logits[t][v] += h;
            let up = p.objective(groups, reff, cfg).unwrap();
            p.logits[t][v] -= 2.0 * h;
            let down = p.objective(groups, reff, cfg).unwrap();
            out[t][v] = (up - down) / (2.0 * h);
        }
    }
    out
}

#[test]
fn toy_gradient_matches_finite_differences() {
    let vocab = 16;
    let positions = 4;
    let mut worst: f64 = 0.0;
    for seed in 0..10 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let policy = ToyPolicy {
            logits: (0..positions).map(|_| (0..vocab).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect(),
        };
        let mut groups = random_groups(&mut rng, 2, 4, positions, vocab as u32);
        // rollout policy near the current one so both clip branches occur
        let cur = policy.score(&groups);
        for (g, cg) in groups.iter_mut().zip(&cur) {
            for (c, lc) in g.candidates.iter_mut().zip(cg) {
                c.rollout_logprobs = lc.iter().map(|x| (x + rng.gen_range(-0.5..0.5)).min(0.0)).collect();
            }
        }
        let reff = perturb(&mut rng, &cur, 0.3);
        let cfg = ObjectiveConfig { kl_coefficient: 0.05, ..Default::default() };
        let (_, analytic) = policy.objective_grad(&groups, &reff, &cfg).unwrap();
        let numeric = central_difference(&policy, &groups, &reff, &cfg);
        let norm = numeric.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
        let err = analytic
            .iter()
            .flatten()
            .zip(numeric.iter().flatten())
            .map(|(a, n)| (a - n).powi(2))
            .sum::<f64>()
            .sqrt();
        worst = worst.max(err / norm.max(1e-12));
    }
    assert!(worst < 1e-4, "relative gradient error {worst}");
}

proptest! {
    #[test]
    fn weight_algebra(rs in proptest::collection::vec(0u32..=8, 2..5)) {
        let total: u32 = rs.iter().sum();
        let ws: Vec<_> = rs.iter().map(|&r| language_weight(r, total - r)).collect();
        if total == 0 {
            prop_assert!(ws.iter().all(Option::is_none));
        } else {
            let sum: f64 = ws.iter().map(|w| w.unwrap()).sum();
            prop_assert!((sum - (rs.len() as f64 - 1.0)).abs() < 1e-12);
            for (w, &r) in ws.iter().zip(&rs) {
                let w = w.unwrap();
                prop_assert!((0.0..=1.0).contains(&w));
                prop_assert!((w - (1.0 - r as f64 / total as f64)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn weight_monotone(own in 0u32..50, sibling in 1u32..50) {
        prop_assert!(language_weight(own + 1, sibling).unwrap() < language_weight(own, sibling).unwrap());
    }

    #[test]
    fn advantage_normalization(rewards in proptest::collection::vec(0u8..=1, 2..33)) {
        let a = group_advantages(&rewards);
        let o = oracle_std_advantages(&rewards);
        for (x, y) in a.iter().zip(&o) {
            prop_assert!((x - y).abs() < 1e-9);
        }
        let n = a.len() as f64;
        let mean = a.iter().sum::<f64>() / n;
        let degenerate = rewards.iter().all(|&r| r == rewards[0]);
        if degenerate {
            prop_assert!(a.iter().all(|&x| x == 0.0));
        } else {
            let sd = (a.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
            prop_assert!(mean.abs() < 1e-9);
            prop_assert!((sd - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn kl_non_negative(a in -30.0f64..0.0, b in -30.0f64..0.0) {
        let k = kl_penalty_token(a, b);
        prop_assert!(k >= 0.0);
        if a == b {
            prop_assert_eq!(k, 0.0);
        }
    }

    #[test]
    fn surrogate_is_pessimistic(r in 0.01f64..5.0, a in -3.0f64..3.0, eps in 0.01f64..0.9) {
        let s = token_surrogate(r, a, eps);
        prop_assert!(s <= r * a + 1e-15);
        prop_assert!(s <= r.clamp(1.0 - eps, 1.0 + eps) * a + 1e-15);
    }

    #[test]
    fn group_building(own in proptest::collection::vec(0u8..=4, 2..4)) {
        let per_target: Vec<_> = own
            .iter()
            .enumerate()
            .map(|(k, &passes)| {
                let c = (0..4)
                    .map(|j| CandidateRollout { tokens: vec![1], rollout_logprobs: vec![-1.0], reward: u8::from(j < passes), verdict: None })
                    .collect();
                (LanguageId::new(format!("l{k}")), c)
            })
            .collect();
        let groups = build_groups("s", &LanguageId::python(), per_target);
        let total: u32 = own.iter().map(|&x| x as u32).sum();
        for (g, &o) in groups.iter().zip(&own) {
            prop_assert_eq!(g.cumulative_reward, o as u32);
            prop_assert_eq!(g.cumulative_reward + g.sibling_reward, total);
            prop_assert!(g.cumulative_reward as usize <= g.candidates.len());
            prop_assert_eq!(g.weight.is_none(), total == 0);
        }
    }
}
