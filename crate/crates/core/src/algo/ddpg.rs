use super::agent::{squash, Agent, AgentNets};
use super::config::AlgoConfig;
use super::replay::ConditionalTransition;
use crate::env::Action;
use crate::error::{ensure_finite, Error, Result};
use crate::nn::{clip_grad_norm, soft_update, AdamState, Mlp};

fn continuous(action: &Action) -> Result<&[f64]> {
    match action {
        Action::Continuous(a) => Ok(a),
        Action::Discrete(_) => Err(Error::Action("ddpg transition holds a discrete action".into())),
    }
}

fn critic_input(input: &[f64], action: &[f64]) -> Vec<f64> {
    let mut x = Vec::with_capacity(input.len() + action.len());
    x.extend_from_slice(input);
    x.extend_from_slice(action);
    x
}

/// `r` for terminal transitions, else `r + gamma * Q'(s', pi'(s'))`.
pub fn ddpg_targets(
    batch: &[&ConditionalTransition],
    target_actor: &Mlp,
    target_critic: &Mlp,
    low: &[f64],
    high: &[f64],
    gamma: f64,
) -> Result<Vec<f64>> {
    let mut targets = Vec::with_capacity(batch.len());
    for t in batch {
        let y = if t.terminated {
            t.reward
        } else {
            let next_action = squash(&target_actor.predict(&t.next_input)?, low, high);
            let q = target_critic.predict(&critic_input(&t.next_input, &next_action))?[0];
            t.reward + gamma * q
        };
        targets.push(y);
    }
    ensure_finite("ddpg targets", &targets)?;
    Ok(targets)
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DdpgStats {
    /// `0.5 * mean((Q - y)^2)` before the step.
    pub critic_loss: f64,
    /// `-mean(Q(s, pi(s)))` before the actor step.
    pub actor_loss: f64,
}

/// Target networks and optimizers around a DDPG agent.
#[derive(Clone, Debug)]
pub struct DdpgLearner {
    pub target_actor: Mlp,
    pub target_critic: Mlp,
    opt_actor: AdamState,
    opt_critic: AdamState,
}

impl DdpgLearner {
    /// Targets start as copies of the online networks.
    pub fn new(agent: &Agent) -> Result<Self> {
        match &agent.nets {
            AgentNets::Ddpg { actor, critic } => Ok(DdpgLearner {
                target_actor: actor.clone(),
                target_critic: critic.clone(),
                opt_actor: AdamState::new(actor.params().len()),
                opt_critic: AdamState::new(critic.params().len()),
            }),
            _ => Err(Error::config("algo.id", "ddpg learner needs a ddpg agent")),
        }
    }

    /// One critic step, one actor step against the updated critic, then a
    /// soft target update with coefficient `config.soft_update`.
    pub fn update(
        &mut self,
        agent: &mut Agent,
        batch: &[&ConditionalTransition],
        config: &AlgoConfig,
    ) -> Result<DdpgStats> {
        if batch.is_empty() {
            return Err(Error::config("algo.batch_size", "ddpg minibatch is empty"));
        }
        let (low, high) = {
            let (l, h) = agent.bounds()?;
            (l.to_vec(), h.to_vec())
        };
        let AgentNets::Ddpg { actor, critic } = &mut agent.nets else {
            return Err(Error::config("algo.id", "ddpg learner needs a ddpg agent"));
        };
        let targets = ddpg_targets(batch, &self.target_actor, &self.target_critic, &low, &high, config.gamma)?;
        let n = batch.len() as f64;

        let mut g_critic = vec![0.0; critic.params().len()];
        let mut critic_loss = 0.0;
        for (t, y) in batch.iter().zip(&targets) {
            let (q, cache) = critic.forward(&critic_input(&t.input, continuous(&t.action)?))?;
            let err = q[0] - y;
            critic_loss += 0.5 * err * err / n;
            critic.accumulate_backward(&cache, &[err / n], &mut g_critic)?;
        }
        if !critic_loss.is_finite() {
            return Err(Error::NonFinite("ddpg critic loss".into()));
        }
        if config.max_grad_norm > 0.0 {
            clip_grad_norm(&mut g_critic, config.max_grad_norm);
        }
        self.opt_critic.step(critic.params_mut(), &g_critic, config.lr_value)?;

        let mut g_actor = vec![0.0; actor.params().len()];
        let mut actor_loss = 0.0;
        let obs_width = batch[0].input.len();
        for t in batch {
            let (raw, acache) = actor.forward(&t.input)?;
            let action = squash(&raw, &low, &high);
            let (q, ccache) = critic.forward(&critic_input(&t.input, &action))?;
            actor_loss -= q[0] / n;
            let d_input = critic.backward(&ccache, &[1.0])?.input;
            // Ascend Q: d(-Q)/d(raw) = -dQ/da * da/d(raw).
            let upstream: Vec<f64> = raw
                .iter()
                .enumerate()
                .map(|(j, z)| {
                    let th = z.tanh();
                    let da = 0.5 * (high[j] - low[j]) * (1.0 - th * th);
                    -d_input[obs_width + j] * da / n
                })
                .collect();
            actor.accumulate_backward(&acache, &upstream, &mut g_actor)?;
        }
        if !actor_loss.is_finite() {
            return Err(Error::NonFinite("ddpg actor loss".into()));
        }
        if config.max_grad_norm > 0.0 {
            clip_grad_norm(&mut g_actor, config.max_grad_norm);
        }
        self.opt_actor.step(actor.params_mut(), &g_actor, config.lr_policy)?;

        soft_update(self.target_actor.params_mut(), actor.params(), config.soft_update)?;
        soft_update(self.target_critic.params_mut(), critic.params(), config.soft_update)?;
        Ok(DdpgStats {
            critic_loss,
            actor_loss,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Activation;
    use crate::seed::rng_from_seed;

    fn transition(reward: f64, terminated: bool) -> ConditionalTransition {
        ConditionalTransition {
            input: vec![0.2, 0.5],
            action: Action::Continuous(vec![0.3]),
            next_input: vec![0.4, 0.5],
            reward,
            terminated,
        }
    }

    fn nets() -> (Mlp, Mlp) {
        let mut rng = rng_from_seed(5);
        (
            Mlp::glorot(&[2, 4, 1], Activation::Relu, &[true], &mut rng).unwrap(),
            Mlp::glorot(&[3, 4, 1], Activation::Relu, &[true], &mut rng).unwrap(),
        )
    }

    #[test]
    fn terminal_and_zero_discount_targets_are_rewards() {
        let (a, c) = nets();
        let batch = [transition(1.5, true), transition(-2.0, true)];
        let refs: Vec<_> = batch.iter().collect();
        assert_eq!(ddpg_targets(&refs, &a, &c, &[-1.0], &[1.0], 0.99).unwrap(), vec![1.5, -2.0]);
        let batch = [transition(0.25, false)];
        let refs: Vec<_> = batch.iter().collect();
        assert_eq!(ddpg_targets(&refs, &a, &c, &[-1.0], &[1.0], 0.0).unwrap(), vec![0.25]);
    }
}
