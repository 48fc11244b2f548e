use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::nn::Activation;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AlgorithmId {
    Ppo,
    Ddpg,
    Dqn,
}

impl AlgorithmId {
    pub fn name(self) -> &'static str {
        match self {
            AlgorithmId::Ppo => "ppo",
            AlgorithmId::Ddpg => "ddpg",
            AlgorithmId::Dqn => "dqn",
        }
    }
}

impl fmt::Display for AlgorithmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AlgorithmId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ppo" => Ok(AlgorithmId::Ppo),
            "ddpg" => Ok(AlgorithmId::Ddpg),
            "dqn" => Ok(AlgorithmId::Dqn),
            other => Err(Error::config("algo.id", format!("unknown algorithm {other:?} (ppo, ddpg, dqn)"))),
        }
    }
}

/// What the refresh period counts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RefreshUnit {
    Updates,
    AgentSteps,
}

/// Hyperparameters for all three algorithms; fields an algorithm does not
/// use are ignored by it.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgoConfig {
    pub id: AlgorithmId,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub clip: f64,
    pub entropy_coef: f64,
    /// Policy, actor or Q-network learning rate.
    pub lr_policy: f64,
    /// Value or critic learning rate.
    pub lr_value: f64,
    /// Global gradient-norm cap per network; 0 disables clipping.
    pub max_grad_norm: f64,
    pub num_envs: usize,
    pub horizon: usize,
    pub epochs: usize,
    pub minibatches: usize,
    /// Replay minibatch size.
    pub batch_size: usize,
    /// PPO counts updates, off-policy algorithms count agent steps.
    pub refresh_period: u64,
    /// Total agent steps.
    pub budget: u64,
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub layer_norm: bool,
    pub replay_capacity: usize,
    /// Agent steps with uniformly random actions before learning starts.
    pub warmup_steps: u64,
    /// Agent steps between training phases.
    pub train_every: u64,
    pub updates_per_train: usize,
    /// Soft target coefficient rho.
    pub soft_update: f64,
    /// Updates between hard target copies.
    pub target_update_interval: u64,
    pub ou_theta: f64,
    pub ou_sigma: f64,
    pub eps_start: f64,
    pub eps_end: f64,
    /// Fraction of the budget over which epsilon decays linearly.
    pub eps_decay_fraction: f64,
    /// Agent steps between evaluation rows; 0 logs only the final row.
    pub eval_interval: u64,
    pub eval_episodes: usize,
}

impl AlgoConfig {
    pub fn defaults(id: AlgorithmId) -> Self {
        let base = AlgoConfig {
            id,
            gamma: 0.99,
            gae_lambda: 0.95,
            clip: 0.2,
            entropy_coef: 0.0,
            lr_policy: 3e-4,
            lr_value: 3e-4,
            max_grad_norm: 0.0,
            num_envs: 8,
            horizon: 256,
            epochs: 16,
            minibatches: 4,
            batch_size: 128,
            refresh_period: 10,
            budget: 200_000,
            hidden: vec![64, 64],
            activation: Activation::Tanh,
            layer_norm: false,
            replay_capacity: 100_000,
            warmup_steps: 1_000,
            train_every: 100,
            updates_per_train: 50,
            soft_update: 0.001,
            target_update_interval: 500,
            ou_theta: 0.15,
            ou_sigma: 0.2,
            eps_start: 1.0,
            eps_end: 0.05,
            eps_decay_fraction: 0.5,
            eval_interval: 20_000,
            eval_episodes: 8,
        };
        match id {
            AlgorithmId::Ppo => AlgoConfig {
                max_grad_norm: 0.5,
                ..base
            },
            AlgorithmId::Ddpg => AlgoConfig {
                lr_policy: 1e-4,
                lr_value: 1e-3,
                refresh_period: 2048,
                budget: 100_000,
                activation: Activation::Relu,
                layer_norm: true,
                ..base
            },
            AlgorithmId::Dqn => AlgoConfig {
                lr_policy: 1e-3,
                batch_size: 64,
                refresh_period: 2048,
                activation: Activation::Relu,
                train_every: 8,
                updates_per_train: 1,
                ..base
            },
        }
    }

    pub fn refresh_unit(&self) -> RefreshUnit {
        match self.id {
            AlgorithmId::Ppo => RefreshUnit::Updates,
            AlgorithmId::Ddpg | AlgorithmId::Dqn => RefreshUnit::AgentSteps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: &str| Err(Error::config(format!("algo.{field}"), msg));
        if !(0.0..1.0).contains(&self.gamma) {
            return bad("gamma", "must lie in [0, 1)");
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return bad("gae_lambda", "must lie in [0, 1]");
        }
        if !(self.clip > 0.0 && self.clip.is_finite()) {
            return bad("clip", "must be positive");
        }
        for (field, lr) in [("lr_policy", self.lr_policy), ("lr_value", self.lr_value)] {
            if !(lr > 0.0 && lr.is_finite()) {
                return bad(field, "must be positive");
            }
        }
        if !(self.entropy_coef >= 0.0 && self.entropy_coef.is_finite()) {
            return bad("entropy_coef", "must be non-negative");
        }
        if !(self.max_grad_norm >= 0.0 && self.max_grad_norm.is_finite()) {
            return bad("max_grad_norm", "must be non-negative");
        }
        let counts = [
            ("num_envs", self.num_envs as u64),
            ("horizon", self.horizon as u64),
            ("epochs", self.epochs as u64),
            ("minibatches", self.minibatches as u64),
            ("batch_size", self.batch_size as u64),
            ("refresh_period", self.refresh_period),
            ("replay_capacity", self.replay_capacity as u64),
            ("train_every", self.train_every),
            ("updates_per_train", self.updates_per_train as u64),
            ("target_update_interval", self.target_update_interval),
            ("eval_episodes", self.eval_episodes as u64),
        ];
        for (field, n) in counts {
            if n == 0 {
                return bad(field, "must be positive");
            }
        }
        if self.hidden.iter().any(|&h| h == 0) {
            return bad("hidden", "layer widths must be positive");
        }
        if !(0.0..=1.0).contains(&self.soft_update) {
            return bad("soft_update", "must lie in [0, 1]");
        }
        if !(self.ou_theta > 0.0 && self.ou_theta <= 1.0) {
            return bad("ou_theta", "must lie in (0, 1]");
        }
        if !(self.ou_sigma >= 0.0 && self.ou_sigma.is_finite()) {
            return bad("ou_sigma", "must be non-negative");
        }
        for (field, p) in [("eps_start", self.eps_start), ("eps_end", self.eps_end)] {
            if !(0.0..=1.0).contains(&p) {
                return bad(field, "must lie in [0, 1]");
            }
        }
        if !(self.eps_decay_fraction > 0.0 && self.eps_decay_fraction <= 1.0) {
            return bad("eps_decay_fraction", "must lie in (0, 1]");
        }
        Ok(())
    }

    /// `(key, value)` pairs without the `algo.` prefix, in a fixed order.
    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        let hidden = self.hidden.iter().map(|h| h.to_string()).collect::<Vec<_>>().join(",");
        vec![
            ("id", self.id.to_string()),
            ("gamma", self.gamma.to_string()),
            ("gae_lambda", self.gae_lambda.to_string()),
            ("clip", self.clip.to_string()),
            ("entropy_coef", self.entropy_coef.to_string()),
            ("lr_policy", self.lr_policy.to_string()),
            ("lr_value", self.lr_value.to_string()),
            ("max_grad_norm", self.max_grad_norm.to_string()),
            ("num_envs", self.num_envs.to_string()),
            ("horizon", self.horizon.to_string()),
            ("epochs", self.epochs.to_string()),
            ("minibatches", self.minibatches.to_string()),
            ("batch_size", self.batch_size.to_string()),
            ("refresh_period", self.refresh_period.to_string()),
            ("budget", self.budget.to_string()),
            ("hidden", hidden),
            ("activation", self.activation.to_string()),
            ("layer_norm", self.layer_norm.to_string()),
            ("replay_capacity", self.replay_capacity.to_string()),
            ("warmup_steps", self.warmup_steps.to_string()),
            ("train_every", self.train_every.to_string()),
            ("updates_per_train", self.updates_per_train.to_string()),
            ("soft_update", self.soft_update.to_string()),
            ("target_update_interval", self.target_update_interval.to_string()),
            ("ou_theta", self.ou_theta.to_string()),
            ("ou_sigma", self.ou_sigma.to_string()),
            ("eps_start", self.eps_start.to_string()),
            ("eps_end", self.eps_end.to_string()),
            ("eps_decay_fraction", self.eps_decay_fraction.to_string()),
            ("eval_interval", self.eval_interval.to_string()),
            ("eval_episodes", self.eval_episodes.to_string()),
        ]
    }

    /// Sets one field from its textual value. `key` has no `algo.` prefix;
    /// `id` is not settable here.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        let field = format!("algo.{key}");
        match key {
            "gamma" => self.gamma = parse_value(&field, value)?,
            "gae_lambda" => self.gae_lambda = parse_value(&field, value)?,
            "clip" => self.clip = parse_value(&field, value)?,
            "entropy_coef" => self.entropy_coef = parse_value(&field, value)?,
            "lr_policy" => self.lr_policy = parse_value(&field, value)?,
            "lr_value" => self.lr_value = parse_value(&field, value)?,
            "max_grad_norm" => self.max_grad_norm = parse_value(&field, value)?,
            "num_envs" => self.num_envs = parse_value(&field, value)?,
            "horizon" => self.horizon = parse_value(&field, value)?,
            "epochs" => self.epochs = parse_value(&field, value)?,
            "minibatches" => self.minibatches = parse_value(&field, value)?,
            "batch_size" => self.batch_size = parse_value(&field, value)?,
            "refresh_period" => self.refresh_period = parse_value(&field, value)?,
            "budget" => self.budget = parse_value(&field, value)?,
            "hidden" => {
                self.hidden = if value.trim().is_empty() {
                    Vec::new()
                } else {
                    value
                        .split(',')
                        .map(|v| parse_value(&field, v))
                        .collect::<Result<_>>()?
                }
            }
            "activation" => {
                self.activation = value
                    .trim()
                    .parse()
                    .map_err(|_| Error::config(field.as_str(), format!("unknown activation {value:?} (tanh, relu, identity)")))?
            }
            "layer_norm" => self.layer_norm = parse_value(&field, value)?,
            "replay_capacity" => self.replay_capacity = parse_value(&field, value)?,
            "warmup_steps" => self.warmup_steps = parse_value(&field, value)?,
            "train_every" => self.train_every = parse_value(&field, value)?,
            "updates_per_train" => self.updates_per_train = parse_value(&field, value)?,
            "soft_update" => self.soft_update = parse_value(&field, value)?,
            "target_update_interval" => self.target_update_interval = parse_value(&field, value)?,
            "ou_theta" => self.ou_theta = parse_value(&field, value)?,
            "ou_sigma" => self.ou_sigma = parse_value(&field, value)?,
            "eps_start" => self.eps_start = parse_value(&field, value)?,
            "eps_end" => self.eps_end = parse_value(&field, value)?,
            "eps_decay_fraction" => self.eps_decay_fraction = parse_value(&field, value)?,
            "eval_interval" => self.eval_interval = parse_value(&field, value)?,
            "eval_episodes" => self.eval_episodes = parse_value(&field, value)?,
            _ => return Err(Error::config(field, "unknown key")),
        }
        Ok(())
    }
}

pub(crate) fn parse_value<T>(field: &str, value: &str) -> Result<T>
where
    T: FromStr,
    T::Err: fmt::Display,
{
    value
        .trim()
        .parse()
        .map_err(|e| Error::config(field, format!("cannot parse {value:?}: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        for id in [AlgorithmId::Ppo, AlgorithmId::Ddpg, AlgorithmId::Dqn] {
            let cfg = AlgoConfig::defaults(id);
            cfg.validate().unwrap();
            let mut other = AlgoConfig::defaults(id);
            other.gamma = 0.5;
            other.hidden = vec![3];
            for (k, v) in cfg.to_pairs().into_iter().skip(1) {
                other.apply(k, &v).unwrap();
            }
            assert_eq!(other, cfg);
        }
    }

    #[test]
    fn refresh_units_follow_the_algorithm() {
        assert_eq!(AlgoConfig::defaults(AlgorithmId::Ppo).refresh_unit(), RefreshUnit::Updates);
        assert_eq!(AlgoConfig::defaults(AlgorithmId::Dqn).refresh_unit(), RefreshUnit::AgentSteps);
    }

    #[test]
    fn invalid_values_name_the_field() {
        let mut cfg = AlgoConfig::defaults(AlgorithmId::Ppo);
        cfg.gamma = 1.0;
        assert!(cfg.validate().unwrap_err().to_string().contains("algo.gamma"));
        let mut cfg = AlgoConfig::defaults(AlgorithmId::Ppo);
        cfg.num_envs = 0;
        assert!(cfg.validate().unwrap_err().to_string().contains("algo.num_envs"));
        let err = cfg.apply("horizon", "many").unwrap_err();
        assert!(err.to_string().contains("algo.horizon"));
        assert!(cfg.apply("nonsense", "1").unwrap_err().to_string().contains("algo.nonsense"));
        assert!("sac".parse::<AlgorithmId>().is_err());
    }
}
