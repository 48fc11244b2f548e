use rand::Rng;

use super::agent::{Agent, AgentNets};
use crate::env::{Action, Env, StepResult};
use crate::error::{ensure_finite, Error, Result};
use crate::nn::GaussianHead;
use crate::reward::{Condition, FeatureVector, RewardSpace};
use crate::seed::derive_seed;

/// One environment instance with its current observation and condition.
///
/// Episodes that end are reset in place; the condition only changes through
/// [`EnvSlot::set_condition`].
pub struct EnvSlot {
    pub env: Box<dyn Env>,
    pub obs: Vec<f64>,
    pub condition: Condition,
    seed: u64,
    episodes: u64,
}

impl EnvSlot {
    /// Resets `env` for its first episode; episode `k` uses seed
    /// `derive_seed(seed, "episode", k)`.
    pub fn new(mut env: Box<dyn Env>, condition: Condition, seed: u64) -> Self {
        let obs = env.reset(derive_seed(seed, "episode", 0));
        EnvSlot {
            env,
            obs,
            condition,
            seed,
            episodes: 1,
        }
    }

    pub fn set_condition(&mut self, condition: Condition) {
        self.condition = condition;
    }

    /// Episodes started so far.
    pub fn episodes(&self) -> u64 {
        self.episodes
    }

    /// Moves to the step's next observation, resetting if the episode ended.
    pub fn advance(&mut self, result: StepResult) {
        if result.done() {
            self.obs = self.env.reset(derive_seed(self.seed, "episode", self.episodes));
            self.episodes += 1;
        } else {
            self.obs = result.observation;
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RolloutRecord {
    pub observation: Vec<f64>,
    pub condition: Condition,
    /// Sampled action before any clamping by the environment.
    pub action: Vec<f64>,
    pub log_prob: f64,
    pub value: f64,
    pub reward: f64,
    pub features: FeatureVector,
    pub terminated: bool,
    pub truncated: bool,
    /// Value of the final observation of a time-limited episode.
    pub truncation_value: Option<f64>,
}

/// `records[env][t]` for `t < horizon`.
#[derive(Clone, Debug, PartialEq)]
pub struct RolloutBatch {
    pub horizon: usize,
    pub records: Vec<Vec<RolloutRecord>>,
    /// Value of each environment's observation after the last step.
    pub bootstrap_values: Vec<f64>,
}

impl RolloutBatch {
    pub fn num_envs(&self) -> usize {
        self.records.len()
    }

    pub fn len(&self) -> usize {
        self.horizon * self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn scalar_value(agent: &Agent, input: &[f64]) -> Result<f64> {
    match &agent.nets {
        AgentNets::Ppo { value, .. } => {
            let v = value.predict(input)?[0];
            ensure_finite("value estimate", &[v])?;
            Ok(v)
        }
        _ => Err(Error::config("algo.id", "rollouts need a ppo agent")),
    }
}

/// Steps every slot `horizon` times with actions sampled from the agent's
/// Gaussian policy, recording conditional rewards.
pub fn collect_rollout<R: Rng + ?Sized>(
    agent: &Agent,
    slots: &mut [EnvSlot],
    space: &RewardSpace,
    horizon: usize,
    rng: &mut R,
) -> Result<RolloutBatch> {
    let (policy, log_std) = match &agent.nets {
        AgentNets::Ppo { policy, log_std, .. } => (policy, log_std),
        _ => return Err(Error::config("algo.id", "rollouts need a ppo agent")),
    };
    let mut records: Vec<Vec<RolloutRecord>> = slots.iter().map(|_| Vec::with_capacity(horizon)).collect();
    for t in 0..horizon {
        for (i, slot) in slots.iter_mut().enumerate() {
            let context = |e: Error| e.context(format!("rollout step {t}, environment {i}"));
            let input = agent.input(&slot.obs, &slot.condition).map_err(context)?;
            let mean = policy.predict(&input).map_err(context)?;
            ensure_finite("policy mean", &mean).map_err(context)?;
            let head = GaussianHead::new(mean, log_std).map_err(context)?;
            let action = head.sample(rng);
            let log_prob = head.log_prob(&action).map_err(context)?;
            let value = scalar_value(agent, &input).map_err(context)?;
            let result = slot.env.step(&Action::Continuous(action.clone())).map_err(context)?;
            let reward = space
                .conditional_reward(&slot.condition, &result.features)
                .map_err(context)?;
            let truncation_value = if result.truncated && !result.terminated {
                let last = agent.input(&result.observation, &slot.condition).map_err(context)?;
                Some(scalar_value(agent, &last).map_err(context)?)
            } else {
                None
            };
            records[i].push(RolloutRecord {
                observation: slot.obs.clone(),
                condition: slot.condition.clone(),
                action,
                log_prob,
                value,
                reward,
                features: result.features.clone(),
                terminated: result.terminated,
                truncated: result.truncated,
                truncation_value,
            });
            slot.advance(result);
        }
    }
    let bootstrap_values = slots
        .iter()
        .map(|s| scalar_value(agent, &agent.input(&s.obs, &s.condition)?))
        .collect::<Result<_>>()?;
    Ok(RolloutBatch {
        horizon,
        records,
        bootstrap_values,
    })
}
