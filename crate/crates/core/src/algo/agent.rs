use super::config::{AlgoConfig, AlgorithmId};
use crate::checkpoint::Checkpoint;
use crate::env::{Action, ActionSpace, EnvSpec, Policy};
use crate::error::{ensure_finite, ensure_len, Error, Result};
use crate::nn::{Mlp, LOG_STD_MAX, LOG_STD_MIN};
use crate::reward::Condition;
use crate::seed::child_rng;

/// `obs (+) c`: the observation followed by the condition.
pub fn concat_condition(obs: &[f64], c: &Condition) -> Vec<f64> {
    let mut out = Vec::with_capacity(obs.len() + c.len());
    out.extend_from_slice(obs);
    out.extend_from_slice(c.values());
    out
}

#[derive(Clone, Debug, PartialEq)]
pub enum AgentNets {
    /// Gaussian policy with a state-independent log std, and a value net.
    Ppo { policy: Mlp, log_std: Vec<f64>, value: Mlp },
    /// Tanh-squashed deterministic actor and a critic on `input (+) action`.
    Ddpg { actor: Mlp, critic: Mlp },
    Dqn { q: Mlp },
}

/// Trained (or freshly initialized) networks plus what is needed to run them.
#[derive(Clone, Debug, PartialEq)]
pub struct Agent {
    pub nets: AgentNets,
    pub action_space: ActionSpace,
    pub obs_dim: usize,
    /// Condition width appended to observations; 0 for a non-conditional agent.
    pub condition_dim: usize,
}

fn layer_sizes(input: usize, hidden: &[usize], output: usize) -> Vec<usize> {
    let mut sizes = Vec::with_capacity(hidden.len() + 2);
    sizes.push(input);
    sizes.extend_from_slice(hidden);
    sizes.push(output);
    sizes
}

impl Agent {
    /// Glorot-initialized networks for `config` on an environment with `spec`.
    pub fn init(config: &AlgoConfig, spec: &EnvSpec, condition_dim: usize, seed: u64) -> Result<Self> {
        let input = spec.obs_dim + condition_dim;
        let norms = vec![config.layer_norm; config.hidden.len()];
        let act = config.activation;
        let nets = match (config.id, &spec.action_space) {
            (AlgorithmId::Ppo, ActionSpace::Continuous { low, .. }) => AgentNets::Ppo {
                policy: Mlp::glorot(
                    &layer_sizes(input, &config.hidden, low.len()),
                    act,
                    &norms,
                    &mut child_rng(seed, "init-policy", 0),
                )?,
                log_std: vec![0.0; low.len()],
                value: Mlp::glorot(
                    &layer_sizes(input, &config.hidden, 1),
                    act,
                    &norms,
                    &mut child_rng(seed, "init-value", 0),
                )?,
            },
            (AlgorithmId::Ddpg, ActionSpace::Continuous { low, .. }) => AgentNets::Ddpg {
                actor: Mlp::glorot(
                    &layer_sizes(input, &config.hidden, low.len()),
                    act,
                    &norms,
                    &mut child_rng(seed, "init-actor", 0),
                )?,
                critic: Mlp::glorot(
                    &layer_sizes(input + low.len(), &config.hidden, 1),
                    act,
                    &norms,
                    &mut child_rng(seed, "init-critic", 0),
                )?,
            },
            (AlgorithmId::Dqn, ActionSpace::Discrete(n)) => AgentNets::Dqn {
                q: Mlp::glorot(
                    &layer_sizes(input, &config.hidden, *n),
                    act,
                    &norms,
                    &mut child_rng(seed, "init-q", 0),
                )?,
            },
            (id, space) => {
                let kind = if space.is_discrete() { "discrete" } else { "continuous" };
                return Err(Error::config(
                    "algo.id",
                    format!("{id} does not support the environment's {kind} action space"),
                ));
            }
        };
        Ok(Agent {
            nets,
            action_space: spec.action_space.clone(),
            obs_dim: spec.obs_dim,
            condition_dim,
        })
    }

    pub fn algorithm(&self) -> AlgorithmId {
        match self.nets {
            AgentNets::Ppo { .. } => AlgorithmId::Ppo,
            AgentNets::Ddpg { .. } => AlgorithmId::Ddpg,
            AgentNets::Dqn { .. } => AlgorithmId::Dqn,
        }
    }

    pub fn is_conditional(&self) -> bool {
        self.condition_dim > 0
    }

    /// Network input width.
    pub fn input_dim(&self) -> usize {
        self.obs_dim + self.condition_dim
    }

    /// Network input for `obs` under `condition`; non-conditional agents
    /// ignore the condition.
    pub fn input(&self, obs: &[f64], condition: &Condition) -> Result<Vec<f64>> {
        ensure_len("agent observation", self.obs_dim, obs.len())?;
        if self.is_conditional() {
            ensure_len("agent condition", self.condition_dim, condition.len())?;
            Ok(concat_condition(obs, condition))
        } else {
            Ok(obs.to_vec())
        }
    }

    /// Deterministic action from a prepared network input: the Gaussian mean,
    /// the actor output, or the greedy action.
    pub fn act_on_input(&self, input: &[f64]) -> Result<Action> {
        match &self.nets {
            AgentNets::Ppo { policy, .. } => {
                let mean = policy.predict(input)?;
                ensure_finite("policy mean", &mean)?;
                Ok(Action::Continuous(mean))
            }
            AgentNets::Ddpg { actor, .. } => {
                let (low, high) = self.bounds()?;
                let out = actor.predict(input)?;
                ensure_finite("actor output", &out)?;
                Ok(Action::Continuous(squash(&out, low, high)))
            }
            AgentNets::Dqn { q } => {
                let values = q.predict(input)?;
                ensure_finite("q values", &values)?;
                Ok(Action::Discrete(argmax(&values)))
            }
        }
    }

    pub fn act(&self, obs: &[f64], condition: &Condition) -> Result<Action> {
        self.act_on_input(&self.input(obs, condition)?)
    }

    /// The agent with its condition input held fixed at `condition`.
    pub fn conditioned(&self, condition: Condition) -> Result<ConditionedPolicy<'_>> {
        if self.is_conditional() {
            ensure_len("agent condition", self.condition_dim, condition.len())?;
        }
        Ok(ConditionedPolicy { agent: self, condition })
    }

    pub(crate) fn bounds(&self) -> Result<(&[f64], &[f64])> {
        match &self.action_space {
            ActionSpace::Continuous { low, high } => Ok((low, high)),
            ActionSpace::Discrete(_) => Err(Error::Action("discrete agent has no action bounds".into())),
        }
    }

    /// Stores networks and the fields needed to rebuild the agent.
    pub fn write_to(&self, cp: &mut Checkpoint) {
        cp.set_meta("algorithm", self.algorithm());
        cp.set_meta("conditional", self.is_conditional());
        cp.set_meta("obs_dim", self.obs_dim);
        cp.set_meta("condition_dim", self.condition_dim);
        cp.set_meta("action_space", format_action_space(&self.action_space));
        match &self.nets {
            AgentNets::Ppo { policy, log_std, value } => {
                cp.add_network("policy", policy.clone());
                cp.add_network("value", value.clone());
                cp.add_vector("log_std", log_std.clone());
            }
            AgentNets::Ddpg { actor, critic } => {
                cp.add_network("actor", actor.clone());
                cp.add_network("critic", critic.clone());
            }
            AgentNets::Dqn { q } => cp.add_network("q", q.clone()),
        }
    }

    pub fn from_checkpoint(cp: &Checkpoint) -> Result<Self> {
        let parse_usize = |key: &str| -> Result<usize> {
            cp.require(key)?
                .parse()
                .map_err(|_| Error::Checkpoint(format!("`{key}` is not a count")))
        };
        let algorithm: AlgorithmId = cp
            .require("algorithm")?
            .parse()
            .map_err(|_| Error::Checkpoint("unknown algorithm".into()))?;
        let obs_dim = parse_usize("obs_dim")?;
        let condition_dim = parse_usize("condition_dim")?;
        let action_space = parse_action_space(cp.require("action_space")?)?;
        let nets = match algorithm {
            AlgorithmId::Ppo => {
                let log_std = cp.vector("log_std")?.to_vec();
                if log_std.iter().any(|v| !(LOG_STD_MIN..=LOG_STD_MAX).contains(v)) {
                    return Err(Error::Checkpoint("log_std outside its clamp range".into()));
                }
                AgentNets::Ppo {
                    policy: cp.network("policy")?.clone(),
                    log_std,
                    value: cp.network("value")?.clone(),
                }
            }
            AlgorithmId::Ddpg => AgentNets::Ddpg {
                actor: cp.network("actor")?.clone(),
                critic: cp.network("critic")?.clone(),
            },
            AlgorithmId::Dqn => AgentNets::Dqn {
                q: cp.network("q")?.clone(),
            },
        };
        let agent = Agent {
            nets,
            action_space,
            obs_dim,
            condition_dim,
        };
        agent.check_shapes().map_err(|e| Error::Checkpoint(e.to_string()))?;
        Ok(agent)
    }

    fn check_shapes(&self) -> Result<()> {
        let input = self.input_dim();
        let act = self.action_space.dim();
        let mut checks = Vec::new();
        match &self.nets {
            AgentNets::Ppo { policy, log_std, value } => {
                checks.push(("policy input", input, policy.input_dim()));
                checks.push(("policy output", act, policy.output_dim()));
                checks.push(("log_std", act, log_std.len()));
                checks.push(("value input", input, value.input_dim()));
                checks.push(("value output", 1, value.output_dim()));
            }
            AgentNets::Ddpg { actor, critic } => {
                checks.push(("actor input", input, actor.input_dim()));
                checks.push(("actor output", act, actor.output_dim()));
                checks.push(("critic input", input + act, critic.input_dim()));
                checks.push(("critic output", 1, critic.output_dim()));
            }
            AgentNets::Dqn { q } => {
                checks.push(("q input", input, q.input_dim()));
                checks.push(("q output", act, q.output_dim()));
            }
        }
        for (ctx, expected, actual) in checks {
            ensure_len(ctx, expected, actual)?;
        }
        Ok(())
    }
}

/// [`Policy`] view of an agent at a fixed condition.
pub struct ConditionedPolicy<'a> {
    agent: &'a Agent,
    condition: Condition,
}

impl Policy for ConditionedPolicy<'_> {
    fn act(&self, observation: &[f64]) -> Result<Action> {
        self.agent.act(observation, &self.condition)
    }
}

/// Maps raw actor outputs through tanh onto `[low, high]`.
pub(crate) fn squash(raw: &[f64], low: &[f64], high: &[f64]) -> Vec<f64> {
    raw.iter()
        .zip(low.iter().zip(high))
        .map(|(z, (lo, hi))| lo + (z.tanh() + 1.0) * 0.5 * (hi - lo))
        .collect()
}

/// First index of the maximum.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

fn format_action_space(space: &ActionSpace) -> String {
    match space {
        ActionSpace::Discrete(n) => format!("discrete:{n}"),
        ActionSpace::Continuous { low, high } => {
            let dims: Vec<String> = low.iter().zip(high).map(|(l, h)| format!("{l}:{h}")).collect();
            format!("box:{}", dims.join(","))
        }
    }
}

fn parse_action_space(text: &str) -> Result<ActionSpace> {
    let bad = || Error::Checkpoint(format!("bad action_space {text:?}"));
    if let Some(n) = text.strip_prefix("discrete:") {
        return n.parse().map(ActionSpace::Discrete).map_err(|_| bad());
    }
    let dims = text.strip_prefix("box:").ok_or_else(bad)?;
    let mut low = Vec::new();
    let mut high = Vec::new();
    for d in dims.split(',') {
        let (l, h) = d.split_once(':').ok_or_else(bad)?;
        low.push(l.parse().map_err(|_| bad())?);
        high.push(h.parse().map_err(|_| bad())?);
    }
    Ok(ActionSpace::Continuous { low, high })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{EnvConfig, EnvId};
    use proptest::prelude::*;

    #[test]
    fn concat_examples() {
        assert_eq!(concat_condition(&[], &Condition::new(vec![0.5]).unwrap()), vec![0.5]);
        assert_eq!(
            concat_condition(&[1.0, 2.0], &Condition::new(vec![-1.0, 1.0]).unwrap()),
            vec![1.0, 2.0, -1.0, 1.0]
        );
    }

    proptest! {
        #[test]
        fn concat_width(obs in prop::collection::vec(-5.0f64..5.0, 0..6), c in prop::collection::vec(-1.0f64..1.0, 0..4)) {
            let joined = concat_condition(&obs, &Condition::new(c.clone()).unwrap());
            prop_assert_eq!(joined.len(), obs.len() + c.len());
            prop_assert_eq!(&joined[..obs.len()], &obs[..]);
        }
    }

    #[test]
    fn argmax_prefers_lowest_index() {
        assert_eq!(argmax(&[1.0, 3.0, 2.0]), 1);
        assert_eq!(argmax(&[2.0, 2.0, 1.0]), 0);
    }

    #[test]
    fn squash_hits_bounds_and_midpoint() {
        let out = squash(&[0.0, 50.0, -50.0], &[-1.0, 0.0, 2.0], &[1.0, 4.0, 3.0]);
        assert_eq!(out, vec![0.0, 4.0, 2.0]);
    }

    #[test]
    fn checkpoint_round_trip_for_every_algorithm() {
        for (id, env) in [
            (AlgorithmId::Ppo, EnvId::PointRunner),
            (AlgorithmId::Ddpg, EnvId::PointRunner),
            (AlgorithmId::Dqn, EnvId::GridCollect),
        ] {
            let spec = EnvConfig::new(env).spec();
            let agent = Agent::init(&AlgoConfig::defaults(id), &spec, 2, 9).unwrap();
            let mut cp = Checkpoint::new();
            agent.write_to(&mut cp);
            let back = Agent::from_checkpoint(&Checkpoint::parse(&cp.to_text()).unwrap()).unwrap();
            assert_eq!(back, agent);
        }
    }

    #[test]
    fn incompatible_action_space_is_a_config_error() {
        let spec = EnvConfig::new(EnvId::GridCollect).spec();
        let err = Agent::init(&AlgoConfig::defaults(AlgorithmId::Ppo), &spec, 1, 0).unwrap_err();
        assert!(err.is_config());
    }

    #[test]
    fn non_conditional_input_is_the_observation() {
        let spec = EnvConfig::new(EnvId::PointRunner).spec();
        let agent = Agent::init(&AlgoConfig::defaults(AlgorithmId::Ppo), &spec, 0, 1).unwrap();
        let input = agent.input(&[0.1, 0.2], &Condition::zeros(2)).unwrap();
        assert_eq!(input, vec![0.1, 0.2]);
        assert!(agent.input(&[0.1], &Condition::zeros(0)).is_err());
    }
}
