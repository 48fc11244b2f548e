//! Desk-scale environments that report indicator features every step, and
//! a tabular value-iteration oracle.

mod chain;
mod grid_collect;
mod point_runner;
mod tabular;

use std::fmt;
use std::str::FromStr;

pub use chain::chain_mdp;
pub use grid_collect::{GridCollect, GridMap, DEFAULT_GRID_MAP};
pub use point_runner::PointRunner;
pub use tabular::{value_iteration, TabularEnv, TabularMdp, ValueSolution};

use crate::error::{Error, Result};
use crate::seed::derive_seed;

#[derive(Clone, Debug, PartialEq)]
pub enum ActionSpace {
    /// Box with per-dimension bounds.
    Continuous { low: Vec<f64>, high: Vec<f64> },
    Discrete(usize),
}

impl ActionSpace {
    /// Box dimension, or the number of discrete choices.
    pub fn dim(&self) -> usize {
        match self {
            ActionSpace::Continuous { low, .. } => low.len(),
            ActionSpace::Discrete(n) => *n,
        }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, ActionSpace::Discrete(_))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Action {
    Continuous(Vec<f64>),
    Discrete(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnvSpec {
    pub obs_dim: usize,
    pub feature_names: Vec<String>,
    pub action_space: ActionSpace,
    pub max_episode_steps: usize,
}

impl EnvSpec {
    pub fn feature_dim(&self) -> usize {
        self.feature_names.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepResult {
    pub observation: Vec<f64>,
    pub features: crate::FeatureVector,
    /// Absorbing or failed state, e.g. a fall.
    pub terminated: bool,
    /// Time limit reached.
    pub truncated: bool,
    /// The action was outside the box and got clamped.
    pub clamped: bool,
}

impl StepResult {
    pub fn done(&self) -> bool {
        self.terminated || self.truncated
    }
}

pub trait Env: Send {
    fn spec(&self) -> &EnvSpec;

    /// Starts a new episode and returns the first observation.
    fn reset(&mut self, seed: u64) -> Vec<f64>;

    fn step(&mut self, action: &Action) -> Result<StepResult>;
}

/// Deterministic action selection from an observation.
pub trait Policy {
    fn act(&self, observation: &[f64]) -> Result<Action>;
}

impl<F> Policy for F
where
    F: Fn(&[f64]) -> Result<Action>,
{
    fn act(&self, observation: &[f64]) -> Result<Action> {
        self(observation)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EnvId {
    PointRunner,
    GridCollect,
    ChainMdp,
}

impl EnvId {
    pub fn name(self) -> &'static str {
        match self {
            EnvId::PointRunner => "point-runner",
            EnvId::GridCollect => "grid-collect",
            EnvId::ChainMdp => "chain-mdp",
        }
    }
}

impl fmt::Display for EnvId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EnvId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "point-runner" => Ok(EnvId::PointRunner),
            "grid-collect" => Ok(EnvId::GridCollect),
            "chain-mdp" => Ok(EnvId::ChainMdp),
            other => Err(Error::config(
                "env",
                format!("unknown environment {other:?} (expected point-runner, grid-collect or chain-mdp)"),
            )),
        }
    }
}

/// Everything needed to build an environment instance.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvConfig {
    pub id: EnvId,
    /// Layout for grid-collect; the default map when absent.
    pub grid_map: Option<GridMap>,
}

impl EnvConfig {
    pub fn new(id: EnvId) -> Self {
        EnvConfig { id, grid_map: None }
    }

    pub fn build(&self) -> Box<dyn Env> {
        match self.id {
            EnvId::PointRunner => Box::new(PointRunner::new()),
            EnvId::GridCollect => Box::new(GridCollect::new(
                self.grid_map.clone().unwrap_or_else(GridMap::default_map),
            )),
            EnvId::ChainMdp => Box::new(TabularEnv::new(chain_mdp(), chain::CHAIN_MAX_STEPS)),
        }
    }

    pub fn spec(&self) -> EnvSpec {
        self.build().spec().clone()
    }
}

/// Outcome of [`rollout_distance`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DistanceRun {
    /// Accumulated anchor feature (forward displacement on point-runner).
    pub distance: f64,
    pub fell: bool,
    pub steps: usize,
}

/// Runs `policy` for up to `steps` steps, accumulating feature 0.
///
/// Time-limit truncations reset the episode and keep accumulating; a
/// terminating step ends the run and marks it as fallen.
pub fn rollout_distance(env: &mut dyn Env, policy: &dyn Policy, steps: usize, seed: u64) -> Result<DistanceRun> {
    if steps == 0 {
        return Err(Error::config("steps", "must be at least 1"));
    }
    let mut obs = env.reset(derive_seed(seed, "episode", 0));
    let mut episode = 0;
    let mut distance = 0.0;
    for t in 0..steps {
        let action = policy.act(&obs)?;
        let result = env.step(&action)?;
        distance += result.features.values()[0];
        if result.terminated {
            return Ok(DistanceRun {
                distance,
                fell: true,
                steps: t + 1,
            });
        }
        obs = if result.truncated {
            episode += 1;
            env.reset(derive_seed(seed, "episode", episode))
        } else {
            result.observation
        };
    }
    if !distance.is_finite() {
        return Err(Error::NonFinite("rollout distance".into()));
    }
    Ok(DistanceRun {
        distance,
        fell: false,
        steps,
    })
}

pub(crate) fn check_continuous(action: &Action, low: &[f64], high: &[f64]) -> Result<(Vec<f64>, bool)> {
    match action {
        Action::Continuous(a) => {
            if a.len() != low.len() {
                return Err(Error::Action(format!("expected {} dimensions, got {}", low.len(), a.len())));
            }
            if a.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("action".into()));
            }
            let clamped: Vec<f64> = a
                .iter()
                .zip(low.iter().zip(high))
                .map(|(v, (lo, hi))| v.clamp(*lo, *hi))
                .collect();
            let changed = clamped != *a;
            Ok((clamped, changed))
        }
        Action::Discrete(_) => Err(Error::Action("continuous environment got a discrete action".into())),
    }
}

pub(crate) fn check_discrete(action: &Action, n: usize) -> Result<usize> {
    match action {
        Action::Discrete(a) if *a < n => Ok(*a),
        Action::Discrete(a) => Err(Error::Action(format!("action {a} out of range for {n} actions"))),
        Action::Continuous(_) => Err(Error::Action("discrete environment got a continuous action".into())),
    }
}

pub(crate) fn one_hot(index: usize, len: usize) -> Vec<f64> {
    let mut v = vec![0.0; len];
    v[index] = 1.0;
    v
}
