use rand::Rng;

use super::agent::{argmax, Agent, AgentNets};
use super::config::AlgoConfig;
use super::replay::ConditionalTransition;
use crate::env::Action;
use crate::error::{ensure_finite, Error, Result};
use crate::nn::{clip_grad_norm, AdamState, Mlp};

/// Uniform action with probability `epsilon`, otherwise the first argmax.
pub fn epsilon_greedy<R: Rng + ?Sized>(q_values: &[f64], epsilon: f64, rng: &mut R) -> Result<usize> {
    if q_values.is_empty() {
        return Err(Error::config("q_values", "no actions to choose from"));
    }
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::config("epsilon", format!("{epsilon} is outside [0, 1]")));
    }
    if rng.random::<f64>() < epsilon {
        Ok(rng.random_range(0..q_values.len()))
    } else {
        Ok(argmax(q_values))
    }
}

/// Linear decay from `start` to `end` over the first `decay_steps` steps.
pub fn epsilon_at(step: u64, start: f64, end: f64, decay_steps: f64) -> f64 {
    let frac = step as f64 / decay_steps;
    if decay_steps <= 0.0 || frac >= 1.0 {
        return end;
    }
    start + (end - start) * frac
}

/// `r` for terminal transitions, else `r + gamma * max_a Q'(s', a)`.
pub fn dqn_targets(batch: &[&ConditionalTransition], target_q: &Mlp, gamma: f64) -> Result<Vec<f64>> {
    let mut targets = Vec::with_capacity(batch.len());
    for t in batch {
        let y = if t.terminated {
            t.reward
        } else {
            let q = target_q.predict(&t.next_input)?;
            t.reward + gamma * q.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        };
        targets.push(y);
    }
    ensure_finite("dqn targets", &targets)?;
    Ok(targets)
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DqnStats {
    /// `0.5 * mean((Q(s, a) - y)^2)` before the step.
    pub loss: f64,
}

/// Lagged target network and optimizer around a DQN agent.
#[derive(Clone, Debug)]
pub struct DqnLearner {
    pub target_q: Mlp,
    opt: AdamState,
    updates: u64,
}

impl DqnLearner {
    pub fn new(agent: &Agent) -> Result<Self> {
        match &agent.nets {
            AgentNets::Dqn { q } => Ok(DqnLearner {
                target_q: q.clone(),
                opt: AdamState::new(q.params().len()),
                updates: 0,
            }),
            _ => Err(Error::config("algo.id", "dqn learner needs a dqn agent")),
        }
    }

    /// One squared-error step; the target network is replaced by a copy of
    /// the online one every `config.target_update_interval` updates.
    pub fn update(&mut self, agent: &mut Agent, batch: &[&ConditionalTransition], config: &AlgoConfig) -> Result<DqnStats> {
        if batch.is_empty() {
            return Err(Error::config("algo.batch_size", "dqn minibatch is empty"));
        }
        let AgentNets::Dqn { q } = &mut agent.nets else {
            return Err(Error::config("algo.id", "dqn learner needs a dqn agent"));
        };
        let targets = dqn_targets(batch, &self.target_q, config.gamma)?;
        let n = batch.len() as f64;
        let mut grads = vec![0.0; q.params().len()];
        let mut loss = 0.0;
        let mut upstream = vec![0.0; q.output_dim()];
        for (t, y) in batch.iter().zip(&targets) {
            let a = match t.action {
                Action::Discrete(a) if a < upstream.len() => a,
                _ => return Err(Error::Action("dqn transition holds an invalid action".into())),
            };
            let (values, cache) = q.forward(&t.input)?;
            let err = values[a] - y;
            loss += 0.5 * err * err / n;
            upstream.fill(0.0);
            upstream[a] = err / n;
            q.accumulate_backward(&cache, &upstream, &mut grads)?;
        }
        if !loss.is_finite() {
            return Err(Error::NonFinite("dqn loss".into()));
        }
        if config.max_grad_norm > 0.0 {
            clip_grad_norm(&mut grads, config.max_grad_norm);
        }
        self.opt.step(q.params_mut(), &grads, config.lr_policy)?;
        self.updates += 1;
        if self.updates % config.target_update_interval == 0 {
            self.target_q = q.clone();
        }
        Ok(DqnStats { loss })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Activation;
    use crate::seed::rng_from_seed;

    #[test]
    fn greedy_examples() {
        let mut rng = rng_from_seed(0);
        assert_eq!(epsilon_greedy(&[1.0, 3.0, 2.0], 0.0, &mut rng).unwrap(), 1);
        assert_eq!(epsilon_greedy(&[2.0, 2.0, 1.0], 0.0, &mut rng).unwrap(), 0);
        assert!(epsilon_greedy(&[], 0.5, &mut rng).is_err());
        assert!(epsilon_greedy(&[1.0], 1.5, &mut rng).is_err());
    }

    #[test]
    fn full_exploration_is_uniform() {
        let mut rng = rng_from_seed(3);
        let mut counts = [0usize; 4];
        let n = 100_000;
        for _ in 0..n {
            counts[epsilon_greedy(&[0.0, 5.0, 1.0, 2.0], 1.0, &mut rng).unwrap()] += 1;
        }
        for c in counts {
            assert!((c as f64 / n as f64 - 0.25).abs() < 0.01);
        }
    }

    #[test]
    fn schedule_is_linear_then_flat() {
        assert_eq!(epsilon_at(0, 1.0, 0.05, 100.0), 1.0);
        assert!((epsilon_at(50, 1.0, 0.05, 100.0) - 0.525).abs() < 1e-15);
        assert_eq!(epsilon_at(100, 1.0, 0.05, 100.0), 0.05);
        assert_eq!(epsilon_at(1_000, 1.0, 0.05, 100.0), 0.05);
    }

    #[test]
    fn target_examples() {
        let mut rng = rng_from_seed(8);
        let q = Mlp::glorot(&[2, 3, 1], Activation::Relu, &[false], &mut rng).unwrap();
        let term = ConditionalTransition {
            input: vec![0.0, 1.0],
            action: Action::Discrete(0),
            next_input: vec![1.0, 1.0],
            reward: 3.0,
            terminated: true,
        };
        let live = ConditionalTransition {
            terminated: false,
            ..term.clone()
        };
        let y = dqn_targets(&[&term, &live], &q, 0.9).unwrap();
        assert_eq!(y[0], 3.0);
        assert_eq!(y[1], 3.0 + 0.9 * q.predict(&[1.0, 1.0]).unwrap()[0]);
    }
}
