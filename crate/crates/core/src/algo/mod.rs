//! Conditional PPO, DDPG and DQN driven by a reward-randomized outer loop.

mod agent;
mod config;
mod ddpg;
mod dqn;
mod gae;
mod noise;
mod ppo;
mod replay;
mod rollout;
mod train;

pub use agent::{concat_condition, Agent, AgentNets, ConditionedPolicy};
pub use config::{AlgoConfig, AlgorithmId, RefreshUnit};
pub use ddpg::{ddpg_targets, DdpgLearner, DdpgStats};
pub use dqn::{dqn_targets, epsilon_at, epsilon_greedy, DqnLearner, DqnStats};
pub use gae::{gae_advantages, normalize_advantages};
pub use noise::OuNoise;
pub use ppo::{clipped_surrogate, prepare_samples, PpoLearner, PpoSample, PpoStats, SurrogateTerm};
pub use replay::{ConditionalTransition, ReplayBuffer};
pub use rollout::{collect_rollout, EnvSlot, RolloutBatch, RolloutRecord};
pub use train::{evaluate_returns, train, LogRow, TrainOutcome, TrainingLog, TRAINING_LOG_HEADER};

pub(crate) use config::parse_value;
