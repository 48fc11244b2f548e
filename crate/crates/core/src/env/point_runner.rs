use rand::Rng;

use super::{check_continuous, Action, ActionSpace, Env, EnvSpec, StepResult};
use crate::error::{Error, Result};
use crate::seed::rng_from_seed;
use crate::FeatureVector;

const DT: f64 = 0.1;
const DRAG: f64 = 0.02;
const SPEED_LIMIT: f64 = 2.0;
const FALL_SPEED: f64 = 1.5;
const MAX_STEPS: usize = 200;
const START_SPEED: f64 = 0.05;
const WRAP: f64 = 10.0;

/// One-dimensional runner: accelerate forward without exceeding the fall
/// speed.
///
/// Features are `(dx, healthy, -a^2)`; `healthy` is 1 on every step except
/// the one on which the runner falls.
#[derive(Clone, Debug)]
pub struct PointRunner {
    spec: EnvSpec,
    x: f64,
    v: f64,
    t: usize,
    done: bool,
}

impl Default for PointRunner {
    fn default() -> Self {
        Self::new()
    }
}

impl PointRunner {
    pub fn new() -> Self {
        PointRunner {
            spec: EnvSpec {
                obs_dim: 2,
                feature_names: vec!["forward".into(), "healthy".into(), "control".into()],
                action_space: ActionSpace::Continuous {
                    low: vec![-1.0],
                    high: vec![1.0],
                },
                max_episode_steps: MAX_STEPS,
            },
            x: 0.0,
            v: 0.0,
            t: 0,
            done: false,
        }
    }

    /// Places the runner at `(x, v)` at the start of a fresh episode.
    pub fn with_state(x: f64, v: f64) -> Self {
        let mut env = Self::new();
        env.x = x;
        env.v = v;
        env
    }

    pub fn position(&self) -> f64 {
        self.x
    }

    pub fn velocity(&self) -> f64 {
        self.v
    }

    fn observation(&self) -> Vec<f64> {
        vec![self.x.rem_euclid(WRAP) / WRAP, self.v]
    }
}

impl Env for PointRunner {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, seed: u64) -> Vec<f64> {
        let mut rng = rng_from_seed(seed);
        self.x = 0.0;
        self.v = rng.random_range(-START_SPEED..=START_SPEED);
        self.t = 0;
        self.done = false;
        self.observation()
    }

    fn step(&mut self, action: &Action) -> Result<StepResult> {
        if self.done {
            return Err(Error::EpisodeOver);
        }
        let (a, clamped) = match &self.spec.action_space {
            ActionSpace::Continuous { low, high } => check_continuous(action, low, high)?,
            ActionSpace::Discrete(_) => unreachable!("point-runner is continuous"),
        };
        let a = a[0];
        let v_next = (self.v + DT * a - DRAG * self.v).clamp(-SPEED_LIMIT, SPEED_LIMIT);
        let x_next = self.x + DT * v_next;
        let fell = v_next.abs() > FALL_SPEED;
        let features = FeatureVector(vec![x_next - self.x, if fell { 0.0 } else { 1.0 }, -a * a]);
        self.x = x_next;
        self.v = v_next;
        self.t += 1;
        let truncated = !fell && self.t >= MAX_STEPS;
        self.done = fell || truncated;
        Ok(StepResult {
            observation: self.observation(),
            features,
            terminated: fell,
            truncated,
            clamped,
        })
    }
}
