//! Conditional deep reinforcement learning.
//!
//! Policies see their observation concatenated with a *condition*: an
//! affine encoding of the reward weights they are being trained under.
//! Training randomizes those weights per environment, so a single network
//! learns a family of behaviors indexed by the condition. After training
//! the condition becomes a control input that can be searched, with a
//! genetic algorithm, for the best-performing behavior without further
//! training.

pub mod algo;
pub mod checkpoint;
pub mod compare;
pub mod config;
pub mod env;
pub mod error;
pub mod hindsight;
pub mod nn;
pub mod reward;
pub mod seed;

pub use algo::{train, Agent, AlgoConfig, AlgorithmId, TrainOutcome, TrainingLog};
pub use checkpoint::{format_float, Checkpoint};
pub use compare::{ComparisonReport, SeedComparison};
pub use config::RunConfig;
pub use env::{Action, ActionSpace, Env, EnvConfig, EnvId, EnvSpec, Policy, StepResult};
pub use error::{Error, Result};
pub use nn::{Activation, AdamState, GaussianHead, Mlp};
pub use reward::{Condition, FeatureVector, Interval, RefreshSchedule, RewardSpace};
