use rand::seq::SliceRandom;
use rand::Rng;

use super::agent::{Agent, AgentNets};
use super::config::AlgoConfig;
use super::gae::{gae_advantages, normalize_advantages};
use super::rollout::RolloutBatch;
use crate::error::{Error, Result};
use crate::nn::{clip_grad_norm, AdamState, GaussianHead, LOG_STD_MAX, LOG_STD_MIN};

/// One flattened training example.
#[derive(Clone, Debug, PartialEq)]
pub struct PpoSample {
    pub input: Vec<f64>,
    pub action: Vec<f64>,
    pub old_log_prob: f64,
    pub advantage: f64,
    pub ret: f64,
}

/// Loss and gradients of one sample's clipped surrogate
/// `-min(ratio * A, clip(ratio, 1 - eps, 1 + eps) * A)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SurrogateTerm {
    pub loss: f64,
    pub ratio: f64,
    /// The clipped branch is the minimum, so the gradient vanishes.
    pub clipped: bool,
    pub d_mean: Vec<f64>,
    pub d_log_std: Vec<f64>,
}

pub fn clipped_surrogate(
    head: &GaussianHead,
    action: &[f64],
    old_log_prob: f64,
    advantage: f64,
    clip: f64,
) -> Result<SurrogateTerm> {
    let log_prob = head.log_prob(action)?;
    let ratio = (log_prob - old_log_prob).exp();
    let unclipped = ratio * advantage;
    let clipped = ratio.clamp(1.0 - clip, 1.0 + clip) * advantage;
    if clipped < unclipped {
        return Ok(SurrogateTerm {
            loss: -clipped,
            ratio,
            clipped: true,
            d_mean: vec![0.0; head.dim()],
            d_log_std: vec![0.0; head.dim()],
        });
    }
    let (g_mean, g_log_std) = head.log_prob_grads(action)?;
    let scale = -advantage * ratio;
    Ok(SurrogateTerm {
        loss: -unclipped,
        ratio,
        clipped: false,
        d_mean: g_mean.iter().map(|g| scale * g).collect(),
        d_log_std: g_log_std.iter().map(|g| scale * g).collect(),
    })
}

/// GAE per environment, then one normalization over the whole batch.
///
/// Time-limit truncations add `gamma * V(final observation)` to the last
/// reward and cut the episode there.
pub fn prepare_samples(agent: &Agent, batch: &RolloutBatch, gamma: f64, lambda: f64) -> Result<Vec<PpoSample>> {
    let mut samples = Vec::with_capacity(batch.len());
    for (records, bootstrap) in batch.records.iter().zip(&batch.bootstrap_values) {
        let rewards: Vec<f64> = records
            .iter()
            .map(|r| r.reward + r.truncation_value.map_or(0.0, |v| gamma * v))
            .collect();
        let values: Vec<f64> = records.iter().map(|r| r.value).collect();
        let dones: Vec<bool> = records.iter().map(|r| r.terminated || r.truncated).collect();
        let (adv, ret) = gae_advantages(&rewards, &values, &dones, *bootstrap, gamma, lambda)?;
        for ((r, a), g) in records.iter().zip(adv).zip(ret) {
            samples.push(PpoSample {
                input: agent.input(&r.observation, &r.condition)?,
                action: r.action.clone(),
                old_log_prob: r.log_prob,
                advantage: a,
                ret: g,
            });
        }
    }
    let mut adv: Vec<f64> = samples.iter().map(|s| s.advantage).collect();
    normalize_advantages(&mut adv);
    for (s, a) in samples.iter_mut().zip(adv) {
        s.advantage = a;
    }
    Ok(samples)
}

/// Averages over every minibatch of one update.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PpoStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
}

/// Adam states for the policy, log std and value parameters.
#[derive(Clone, Debug)]
pub struct PpoLearner {
    opt_policy: AdamState,
    opt_log_std: AdamState,
    opt_value: AdamState,
}

impl PpoLearner {
    pub fn new(agent: &Agent) -> Result<Self> {
        match &agent.nets {
            AgentNets::Ppo { policy, log_std, value } => Ok(PpoLearner {
                opt_policy: AdamState::new(policy.params().len()),
                opt_log_std: AdamState::new(log_std.len()),
                opt_value: AdamState::new(value.params().len()),
            }),
            _ => Err(Error::config("algo.id", "ppo learner needs a ppo agent")),
        }
    }

    /// `epochs` passes over shuffled minibatches; both networks take one
    /// Adam step per minibatch.
    pub fn update<R: Rng + ?Sized>(
        &mut self,
        agent: &mut Agent,
        samples: &[PpoSample],
        config: &AlgoConfig,
        rng: &mut R,
    ) -> Result<PpoStats> {
        let AgentNets::Ppo { policy, log_std, value } = &mut agent.nets else {
            return Err(Error::config("algo.id", "ppo learner needs a ppo agent"));
        };
        if samples.is_empty() {
            return Ok(PpoStats::default());
        }
        let chunk = samples.len().div_ceil(config.minibatches);
        let mut order: Vec<usize> = (0..samples.len()).collect();
        let mut totals = PpoStats::default();
        let mut seen = 0usize;
        let mut minibatch_count = 0usize;
        for epoch in 0..config.epochs {
            order.shuffle(rng);
            for (m, idx) in order.chunks(chunk).enumerate() {
                let n = idx.len() as f64;
                let mut g_policy = vec![0.0; policy.params().len()];
                let mut g_value = vec![0.0; value.params().len()];
                let mut g_log_std = vec![0.0; log_std.len()];
                let (mut p_loss, mut v_loss, mut clipped) = (0.0, 0.0, 0usize);
                for &i in idx {
                    let s = &samples[i];
                    let (mean, cache) = policy.forward(&s.input)?;
                    let head = GaussianHead::new(mean, log_std)?;
                    let term = clipped_surrogate(&head, &s.action, s.old_log_prob, s.advantage, config.clip)?;
                    p_loss += term.loss;
                    if (term.ratio - 1.0).abs() > config.clip {
                        clipped += 1;
                    }
                    let upstream: Vec<f64> = term.d_mean.iter().map(|d| d / n).collect();
                    policy.accumulate_backward(&cache, &upstream, &mut g_policy)?;
                    for (g, d) in g_log_std.iter_mut().zip(&term.d_log_std) {
                        *g += d / n;
                    }
                    let (v, vcache) = value.forward(&s.input)?;
                    let err = v[0] - s.ret;
                    v_loss += 0.5 * err * err;
                    value.accumulate_backward(&vcache, &[err / n], &mut g_value)?;
                }
                let head = GaussianHead::new(vec![0.0; log_std.len()], log_std)?;
                let entropy = head.entropy();
                // The entropy of a state-independent std does not depend on the mean.
                for g in g_log_std.iter_mut() {
                    *g -= config.entropy_coef;
                }
                p_loss /= n;
                v_loss /= n;
                let total = p_loss - config.entropy_coef * entropy + v_loss;
                if !total.is_finite() {
                    return Err(Error::NonFinite(format!("ppo loss in epoch {epoch}, minibatch {m}")));
                }
                if config.max_grad_norm > 0.0 {
                    let mut joint: Vec<f64> = g_policy.iter().chain(&g_log_std).copied().collect();
                    clip_grad_norm(&mut joint, config.max_grad_norm);
                    let split = g_policy.len();
                    g_policy.copy_from_slice(&joint[..split]);
                    g_log_std.copy_from_slice(&joint[split..]);
                    clip_grad_norm(&mut g_value, config.max_grad_norm);
                }
                self.opt_policy.step(policy.params_mut(), &g_policy, config.lr_policy)?;
                self.opt_log_std.step(log_std, &g_log_std, config.lr_policy)?;
                for l in log_std.iter_mut() {
                    *l = l.clamp(LOG_STD_MIN, LOG_STD_MAX);
                }
                self.opt_value.step(value.params_mut(), &g_value, config.lr_value)?;
                totals.policy_loss += p_loss;
                totals.value_loss += v_loss;
                totals.entropy += entropy;
                seen += idx.len();
                totals.clip_fraction += clipped as f64;
                minibatch_count += 1;
            }
        }
        let k = minibatch_count as f64;
        Ok(PpoStats {
            policy_loss: totals.policy_loss / k,
            value_loss: totals.value_loss / k,
            entropy: totals.entropy / k,
            clip_fraction: totals.clip_fraction / seen as f64,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_one_gives_the_score_function() {
        let head = GaussianHead::new(vec![0.3, -0.2], &[0.1, -0.4]).unwrap();
        let action = [0.5, 0.4];
        let old = head.log_prob(&action).unwrap();
        let adv = 1.7;
        let term = clipped_surrogate(&head, &action, old, adv, 0.2).unwrap();
        assert_eq!(term.ratio, 1.0);
        assert!(!term.clipped);
        let (gm, gs) = head.log_prob_grads(&action).unwrap();
        for i in 0..2 {
            assert_eq!(term.d_mean[i], -adv * gm[i]);
            assert_eq!(term.d_log_std[i], -adv * gs[i]);
        }
        assert_eq!(term.loss, -adv);
    }

    #[test]
    fn saturated_clip_has_zero_gradient() {
        let head = GaussianHead::new(vec![0.0], &[0.0]).unwrap();
        let action = [0.1];
        let lp = head.log_prob(&action).unwrap();
        // Old probability much lower: ratio far above 1 + clip.
        let term = clipped_surrogate(&head, &action, lp - 1.0, 2.0, 0.2).unwrap();
        assert!(term.ratio > 1.2 && term.clipped);
        assert!(term.d_mean.iter().chain(&term.d_log_std).all(|g| *g == 0.0));
        assert!((term.loss + 1.2 * 2.0).abs() < 1e-12);
        // Negative advantage with ratio below 1 - clip saturates too.
        let term = clipped_surrogate(&head, &action, lp + 1.0, -2.0, 0.2).unwrap();
        assert!(term.clipped && term.d_mean[0] == 0.0);
        // Negative advantage with a large ratio is not clipped.
        let term = clipped_surrogate(&head, &action, lp - 1.0, -2.0, 0.2).unwrap();
        assert!(!term.clipped && term.d_mean[0] != 0.0);
    }
}
