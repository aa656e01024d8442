//! Group-relative advantages and a deterministic rollout-group simulator.
//!
//! A group of G candidate responses to the same prompt is scored with the
//! composite reward, and each response's advantage is taken relative to the
//! group: `a_i = (r_i − mean) / (std + ε)` with the population standard
//! deviation. No gradients, no policy updates — the simulator exists to
//! exercise the reward engine end to end and to emit reproducible group
//! reports.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gate::AnswerDistribution;
use crate::grammar::{HarResponse, ReasoningMode};
use crate::reward::{total_reward, RewardBreakdown, RewardConfig};
use crate::verdict::Verdict;

pub const DEFAULT_GROUP_SIZE: usize = 4;
pub const DEFAULT_EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GrpoError {
    #[error("empty rollout group")]
    EmptyGroup,
    #[error("non-finite reward {0}")]
    NonFinite(f64),
    #[error("policy error: {0}")]
    Policy(String),
}

/// Baseline style for the advantage computation. The std-normalized form is
/// the default; mean-only subtraction is available behind this flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AdvantageNormalization {
    #[default]
    StdNormalized,
    MeanOnly,
}

/// Advantages for one group; they mean-center to zero by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdvantageSet {
    pub advantages: Vec<f64>,
    pub epsilon: f64,
}

/// One simulated response with its impression distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rollout {
    pub text: String,
    pub impression: AnswerDistribution,
}

/// A scored group of G rollouts from the same prompt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutGroup {
    pub group_size: usize,
    pub rollouts: Vec<Rollout>,
    pub rewards: Vec<f64>,
    pub breakdowns: Vec<RewardBreakdown>,
}

/// Std-normalized group-relative advantages.
pub fn group_advantages(rewards: &[f64], epsilon: f64) -> Result<AdvantageSet, GrpoError> {
    group_advantages_with(rewards, epsilon, AdvantageNormalization::StdNormalized)
}

/// Group-relative advantages under the selected normalization.
pub fn group_advantages_with(
    rewards: &[f64],
    epsilon: f64,
    normalization: AdvantageNormalization,
) -> Result<AdvantageSet, GrpoError> {
    if rewards.is_empty() {
        return Err(GrpoError::EmptyGroup);
    }
    if let Some(&bad) = rewards.iter().find(|r| !r.is_finite()) {
        return Err(GrpoError::NonFinite(bad));
    }
    let n = rewards.len() as f64;
    let mean = rewards.iter().sum::<f64>() / n;
    let advantages = match normalization {
        AdvantageNormalization::MeanOnly => rewards.iter().map(|r| r - mean).collect(),
        AdvantageNormalization::StdNormalized => {
            let var = rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
            let std = var.sqrt();
            rewards.iter().map(|r| (r - mean) / (std + epsilon)).collect()
        }
    };
    Ok(AdvantageSet {
        advantages,
        epsilon,
    })
}

/// Prompt-side context handed to a policy for each rollout.
#[derive(Debug, Clone)]
pub struct PromptContext<'a> {
    pub sample_id: &'a str,
    pub prompt: &'a str,
    pub image_ref: Option<&'a str>,
}

/// A generator of candidate responses. Implementations must be seeded and
/// reproducible: the same construction yields the same rollouts.
pub trait RolloutPolicy {
    fn rollout(&mut self, ctx: &PromptContext<'_>, index: usize) -> Result<Rollout, GrpoError>;
}

/// Simulation parameters: how to score and how to normalize.
#[derive(Debug, Clone)]
pub struct GroupSimConfig {
    pub reward: RewardConfig,
    pub grammar: ReasoningMode,
    pub epsilon: f64,
    pub normalization: AdvantageNormalization,
}

impl Default for GroupSimConfig {
    fn default() -> Self {
        GroupSimConfig {
            reward: RewardConfig::default(),
            grammar: ReasoningMode::HeuristicToAnalytic,
            epsilon: DEFAULT_EPSILON,
            normalization: AdvantageNormalization::default(),
        }
    }
}

/// Draw `group_size` rollouts from the policy, score each with the
/// composite reward, and compute group-relative advantages.
pub fn simulate_group(
    policy: &mut dyn RolloutPolicy,
    ctx: &PromptContext<'_>,
    truth: Verdict,
    group_size: usize,
    cfg: &GroupSimConfig,
) -> Result<(RolloutGroup, AdvantageSet), GrpoError> {
    if group_size == 0 {
        return Err(GrpoError::EmptyGroup);
    }
    let mut rollouts = Vec::with_capacity(group_size);
    let mut rewards = Vec::with_capacity(group_size);
    let mut breakdowns = Vec::with_capacity(group_size);
    for index in 0..group_size {
        let rollout = policy.rollout(ctx, index)?;
        let breakdown = total_reward(
            &rollout.text,
            cfg.grammar,
            truth,
            &rollout.impression,
            &cfg.reward,
        );
        rewards.push(breakdown.total);
        breakdowns.push(breakdown);
        rollouts.push(rollout);
    }
    let advantages = group_advantages_with(&rewards, cfg.epsilon, cfg.normalization)?;
    Ok((
        RolloutGroup {
            group_size,
            rollouts,
            rewards,
            breakdowns,
        },
        advantages,
    ))
}

/// JSON-lines record for one simulated group.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupReport {
    pub group_id: u64,
    pub rewards: Vec<f64>,
    pub advantages: Vec<f64>,
    pub seed: u64,
}

/// Seeded stochastic mock policy over staged transcripts.
///
/// Each rollout draws whether the final answer is correct, an impression
/// probability leaning toward the drawn impression verdict, a filler
/// reason of varying length, and occasionally drops the reflection tag to
/// exercise the malformed-response path.
#[derive(Debug, Clone)]
pub struct MockPolicy {
    rng: ChaCha8Rng,
    truth: Verdict,
    pub correct_rate: f64,
    pub malformed_rate: f64,
}

impl MockPolicy {
    pub fn new(seed: u64, group_id: u64, truth: Verdict) -> Self {
        // one stream per group so groups are independently reproducible
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(group_id);
        MockPolicy {
            rng,
            truth,
            correct_rate: 0.5,
            malformed_rate: 0.1,
        }
    }
}

impl RolloutPolicy for MockPolicy {
    fn rollout(&mut self, _ctx: &PromptContext<'_>, _index: usize) -> Result<Rollout, GrpoError> {
        let rng = &mut self.rng;
        let correct = rng.gen_bool(self.correct_rate);
        let answer = if correct { self.truth } else { self.truth.flipped() };
        let impression = answer;
        let lean: f64 = rng.gen_range(0.55..0.95);
        let p_fake = match impression {
            Verdict::Fake => lean,
            Verdict::Real => 1.0 - lean,
        };
        let reason_len = rng.gen_range(8..64);
        let reason: Vec<String> = (0..reason_len)
            .map(|_| format!("t{}", rng.gen_range(0..40u32)))
            .collect();
        let transcript = HarResponse::new(
            impression,
            &reason.join(" "),
            "re-checked the key areas and kept the call",
            answer,
        )
        .map_err(|e| GrpoError::Policy(e.to_string()))?;
        let mut text = transcript.render();
        if rng.gen_bool(self.malformed_rate) {
            text = text.replace("</reflection>", "");
        }
        Ok(Rollout {
            text,
            impression: AnswerDistribution::from_p_fake(p_fake)
                .map_err(|e| GrpoError::Policy(e.to_string()))?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_rewards_give_zero_advantages() {
        let a = group_advantages(&[2.0, 2.0, 2.0, 2.0], DEFAULT_EPSILON).unwrap();
        assert!(a.advantages.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn worked_example_matches_hand_computation() {
        // mean 2.5, population std sqrt(1.25)
        let a = group_advantages(&[1.0, 2.0, 3.0, 4.0], DEFAULT_EPSILON).unwrap();
        let expected = [
            -1.341_640_786_499_873_8,
            -0.447_213_595_499_957_94,
            0.447_213_595_499_957_94,
            1.341_640_786_499_873_8,
        ];
        for (got, want) in a.advantages.iter().zip(expected) {
            assert!((got - want).abs() < 1e-5, "{got} vs {want}");
        }
    }

    #[test]
    fn shift_invariance() {
        let base = [1.0, 2.5, 0.25, 4.0];
        let shifted: Vec<f64> = base.iter().map(|r| r + 10.0).collect();
        let a = group_advantages(&base, DEFAULT_EPSILON).unwrap();
        let b = group_advantages(&shifted, DEFAULT_EPSILON).unwrap();
        for (x, y) in a.advantages.iter().zip(&b.advantages) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_sum_within_tolerance() {
        let a = group_advantages(&[0.3, -1.2, 4.4, 2.0, 0.0], DEFAULT_EPSILON).unwrap();
        assert!(a.advantages.iter().sum::<f64>().abs() < 1e-9);
    }

    #[test]
    fn empty_and_nonfinite_rejected() {
        assert_eq!(
            group_advantages(&[], DEFAULT_EPSILON),
            Err(GrpoError::EmptyGroup)
        );
        assert!(matches!(
            group_advantages(&[1.0, f64::NAN], DEFAULT_EPSILON),
            Err(GrpoError::NonFinite(_))
        ));
    }

    #[test]
    fn mean_only_normalization() {
        let a = group_advantages_with(
            &[1.0, 2.0, 3.0],
            DEFAULT_EPSILON,
            AdvantageNormalization::MeanOnly,
        )
        .unwrap();
        assert_eq!(a.advantages, vec![-1.0, 0.0, 1.0]);
    }

    struct Scripted(Vec<(Verdict, Verdict, f64)>);

    impl RolloutPolicy for Scripted {
        fn rollout(&mut self, _ctx: &PromptContext<'_>, i: usize) -> Result<Rollout, GrpoError> {
            let (impression, answer, p_fake) = self.0[i];
            let text = HarResponse::new(impression, "filler reason", "filler reflection", answer)
                .unwrap()
                .render();
            Ok(Rollout {
                text,
                impression: AnswerDistribution::from_p_fake(p_fake).unwrap(),
            })
        }
    }

    #[test]
    fn single_rollout_has_zero_advantage() {
        let mut policy = Scripted(vec![(Verdict::Fake, Verdict::Fake, 0.9)]);
        let ctx = PromptContext {
            sample_id: "s",
            prompt: "p",
            image_ref: None,
        };
        let (group, adv) = simulate_group(
            &mut policy,
            &ctx,
            Verdict::Fake,
            1,
            &GroupSimConfig::default(),
        )
        .unwrap();
        assert_eq!(group.rewards.len(), 1);
        assert_eq!(adv.advantages, vec![0.0]);
    }

    #[test]
    fn correct_rollout_dominates_group() {
        use Verdict::*;
        let mut policy = Scripted(vec![
            (Real, Real, 0.2),
            (Fake, Fake, 0.9), // the only correct one (truth = fake)
            (Real, Real, 0.3),
            (Fake, Real, 0.8),
        ]);
        let ctx = PromptContext {
            sample_id: "s",
            prompt: "p",
            image_ref: None,
        };
        let (group, adv) = simulate_group(
            &mut policy,
            &ctx,
            Verdict::Fake,
            4,
            &GroupSimConfig::default(),
        )
        .unwrap();
        let best = group
            .rewards
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert_eq!(best, 1);
        for (i, a) in adv.advantages.iter().enumerate() {
            if i != 1 {
                assert!(adv.advantages[1] > *a);
            }
        }
    }

    #[test]
    fn mock_policy_is_seed_deterministic() {
        let ctx = PromptContext {
            sample_id: "s",
            prompt: "p",
            image_ref: None,
        };
        let run = |seed: u64| {
            let mut p = MockPolicy::new(seed, 7, Verdict::Fake);
            simulate_group(&mut p, &ctx, Verdict::Fake, 4, &GroupSimConfig::default()).unwrap()
        };
        let (g1, a1) = run(42);
        let (g2, a2) = run(42);
        assert_eq!(g1, g2);
        assert_eq!(a1, a2);
        let (g3, _) = run(43);
        assert_ne!(g1, g3);
    }
}
