use rand::Rng;

use super::agent::{squash, Agent, AgentNets};
use super::config::{AlgoConfig, AlgorithmId, RefreshUnit};
use super::ddpg::DdpgLearner;
use super::dqn::{epsilon_at, epsilon_greedy, DqnLearner};
use super::noise::OuNoise;
use super::ppo::{prepare_samples, PpoLearner};
use super::replay::{ConditionalTransition, ReplayBuffer};
use super::rollout::{collect_rollout, EnvSlot};
use crate::checkpoint::format_float;
use crate::env::{Action, EnvConfig};
use crate::error::{Error, Result};
use crate::reward::{Condition, RefreshSchedule, RewardSpace};
use crate::seed::{child_rng, derive_seed, Rng64};

pub const TRAINING_LOG_HEADER: &str =
    "agent_steps,updates,mean_eval_return,mean_eval_fitness,loss_policy,loss_value,clip_fraction";

/// One evaluation row; `None` fields are left blank in the CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct LogRow {
    pub agent_steps: u64,
    pub updates: u64,
    pub mean_eval_return: Option<f64>,
    pub mean_eval_fitness: Option<f64>,
    pub loss_policy: Option<f64>,
    pub loss_value: Option<f64>,
    pub clip_fraction: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainingLog {
    pub rows: Vec<LogRow>,
}

impl TrainingLog {
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(format_float).unwrap_or_default();
        let mut out = String::from(TRAINING_LOG_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.agent_steps,
                r.updates,
                opt(r.mean_eval_return),
                opt(r.mean_eval_fitness),
                opt(r.loss_policy),
                opt(r.loss_value),
                opt(r.clip_fraction)
            ));
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub agent: Agent,
    pub log: TrainingLog,
    pub agent_steps: u64,
    pub updates: u64,
    /// Times a batch of conditions was drawn, including the first.
    pub condition_draws: u64,
}

/// Mean conditional return and mean accumulated anchor feature of the
/// deterministic policy over `episodes` full episodes.
///
/// Conditional agents see a fresh uniform condition per episode;
/// non-conditional agents are scored under the midpoint weights.
pub fn evaluate_returns(
    agent: &Agent,
    env: &EnvConfig,
    space: &RewardSpace,
    episodes: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let mut rng = child_rng(seed, "eval-conditions", 0);
    let mut instance = env.build();
    let max_steps = instance.spec().max_episode_steps;
    let (mut total_return, mut total_fitness) = (0.0, 0.0);
    for k in 0..episodes {
        let condition = if agent.is_conditional() {
            space.sample_conditions(1, &mut rng).remove(0)
        } else {
            space.midpoint_condition()
        };
        let mut obs = instance.reset(derive_seed(seed, "episode", k as u64));
        for _ in 0..max_steps {
            let result = instance.step(&agent.act(&obs, &condition)?)?;
            total_return += space.conditional_reward(&condition, &result.features)?;
            total_fitness += result.features.values()[0];
            if result.done() {
                break;
            }
            obs = result.observation;
        }
    }
    let n = episodes.max(1) as f64;
    Ok((total_return / n, total_fitness / n))
}

struct ConditionSource<'a> {
    space: &'a RewardSpace,
    conditional: bool,
    rng: Rng64,
    draws: u64,
}

impl ConditionSource<'_> {
    fn draw(&mut self, n: usize) -> Vec<Condition> {
        self.draws += 1;
        if self.conditional {
            self.space.sample_conditions(n, &mut self.rng)
        } else {
            vec![self.space.midpoint_condition(); n]
        }
    }

    fn refresh(&mut self, slots: &mut [EnvSlot]) {
        let fresh = self.draw(slots.len());
        for (slot, c) in slots.iter_mut().zip(fresh) {
            slot.set_condition(c);
        }
    }
}

struct Recorder<'a> {
    env: &'a EnvConfig,
    space: &'a RewardSpace,
    config: &'a AlgoConfig,
    seed: u64,
    log: TrainingLog,
    losses: (Option<f64>, Option<f64>, Option<f64>),
}

impl Recorder<'_> {
    fn crossed(&self, before: u64, after: u64) -> bool {
        let every = self.config.eval_interval;
        every > 0 && before / every != after / every
    }

    fn record(&mut self, agent: &Agent, steps: u64, updates: u64) -> Result<()> {
        let row = self.log.rows.len() as u64;
        let (ret, fit) = evaluate_returns(
            agent,
            self.env,
            self.space,
            self.config.eval_episodes,
            derive_seed(self.seed, "eval", row),
        )
        .map_err(|e| e.context(format!("evaluation at {steps} agent steps")))?;
        self.log.rows.push(LogRow {
            agent_steps: steps,
            updates,
            mean_eval_return: Some(ret),
            mean_eval_fitness: Some(fit),
            loss_policy: self.losses.0,
            loss_value: self.losses.1,
            clip_fraction: self.losses.2,
        });
        Ok(())
    }

    fn finish(mut self, agent: &Agent, steps: u64, updates: u64) -> Result<TrainingLog> {
        let logged = self.log.rows.last().map(|r| r.agent_steps);
        if steps > 0 && logged != Some(steps) {
            self.record(agent, steps, updates)?;
        }
        Ok(self.log)
    }
}

/// Reward-randomized training: every environment gets its own condition,
/// all conditions are redrawn every `refresh_period` units, until the
/// agent-step budget is spent. Non-conditional runs train on the midpoint
/// condition without feeding it to the networks.
pub fn train(
    config: &AlgoConfig,
    space: &RewardSpace,
    env: &EnvConfig,
    conditional: bool,
    seed: u64,
) -> Result<TrainOutcome> {
    config.validate()?;
    let spec = env.spec();
    if spec.feature_dim() != space.feature_dim() {
        return Err(Error::config(
            "reward_space.features",
            format!(
                "{} reports {} features but the reward space has {}",
                env.id,
                spec.feature_dim(),
                space.feature_dim()
            ),
        ));
    }
    let condition_dim = if conditional { space.condition_dim() } else { 0 };
    let agent = Agent::init(config, &spec, condition_dim, seed)?;
    let mut conditions = ConditionSource {
        space,
        conditional,
        rng: child_rng(seed, "conditions", 0),
        draws: 0,
    };
    let recorder = Recorder {
        env,
        space,
        config,
        seed,
        log: TrainingLog::default(),
        losses: (None, None, None),
    };
    let result = match config.id {
        AlgorithmId::Ppo => train_ppo(agent, config, space, env, &mut conditions, recorder, seed),
        AlgorithmId::Ddpg | AlgorithmId::Dqn => train_off_policy(agent, config, space, env, &mut conditions, recorder, seed),
    };
    result.map_err(|e| e.context(format!("training {} on {}", config.id, env.id)))
}

fn make_slots(env: &EnvConfig, conditions: &mut ConditionSource<'_>, n: usize, seed: u64) -> Vec<EnvSlot> {
    conditions
        .draw(n)
        .into_iter()
        .enumerate()
        .map(|(i, c)| EnvSlot::new(env.build(), c, derive_seed(seed, "env", i as u64)))
        .collect()
}

fn train_ppo(
    mut agent: Agent,
    config: &AlgoConfig,
    space: &RewardSpace,
    env: &EnvConfig,
    conditions: &mut ConditionSource<'_>,
    mut recorder: Recorder<'_>,
    seed: u64,
) -> Result<TrainOutcome> {
    debug_assert_eq!(config.refresh_unit(), RefreshUnit::Updates);
    let mut learner = PpoLearner::new(&agent)?;
    let mut action_rng = child_rng(seed, "actions", 0);
    let mut minibatch_rng = child_rng(seed, "minibatch", 0);
    let mut schedule = RefreshSchedule::new(config.refresh_period)?;
    let mut slots = if config.budget > 0 {
        make_slots(env, conditions, config.num_envs, seed)
    } else {
        Vec::new()
    };
    let (mut steps, mut updates) = (0u64, 0u64);
    let envs = config.num_envs as u64;
    while steps < config.budget {
        let remaining = config.budget - steps;
        let horizon = (config.horizon as u64).min(remaining.div_ceil(envs)) as usize;
        let batch = collect_rollout(&agent, &mut slots, space, horizon, &mut action_rng)?;
        let samples = prepare_samples(&agent, &batch, config.gamma, config.gae_lambda)?;
        let stats = learner
            .update(&mut agent, &samples, config, &mut minibatch_rng)
            .map_err(|e| e.context(format!("update {updates}")))?;
        let before = steps;
        steps += horizon as u64 * envs;
        updates += 1;
        recorder.losses = (Some(stats.policy_loss), Some(stats.value_loss), Some(stats.clip_fraction));
        if schedule.tick() && conditions.conditional {
            conditions.refresh(&mut slots);
        }
        if recorder.crossed(before, steps) {
            recorder.record(&agent, steps, updates)?;
        }
    }
    let log = recorder.finish(&agent, steps, updates)?;
    Ok(TrainOutcome {
        agent,
        log,
        agent_steps: steps,
        updates,
        condition_draws: conditions.draws,
    })
}

enum OffPolicyLearner {
    Ddpg { learner: DdpgLearner, noise: Vec<OuNoise> },
    Dqn(DqnLearner),
}

fn train_off_policy(
    mut agent: Agent,
    config: &AlgoConfig,
    space: &RewardSpace,
    env: &EnvConfig,
    conditions: &mut ConditionSource<'_>,
    mut recorder: Recorder<'_>,
    seed: u64,
) -> Result<TrainOutcome> {
    debug_assert_eq!(config.refresh_unit(), RefreshUnit::AgentSteps);
    let mut learner = match config.id {
        AlgorithmId::Ddpg => OffPolicyLearner::Ddpg {
            learner: DdpgLearner::new(&agent)?,
            noise: (0..config.num_envs)
                .map(|_| OuNoise::new(agent.action_space.dim(), config.ou_theta, config.ou_sigma))
                .collect(),
        },
        _ => OffPolicyLearner::Dqn(DqnLearner::new(&agent)?),
    };
    let mut action_rng = child_rng(seed, "actions", 0);
    let mut replay_rng = child_rng(seed, "replay", 0);
    let mut replay = ReplayBuffer::new(config.replay_capacity);
    let mut schedule = RefreshSchedule::new(config.refresh_period)?;
    let mut slots = if config.budget > 0 {
        make_slots(env, conditions, config.num_envs, seed)
    } else {
        Vec::new()
    };
    let decay_steps = config.eps_decay_fraction * config.budget as f64;
    let (mut steps, mut updates, mut since_train) = (0u64, 0u64, 0u64);
    while steps < config.budget {
        for i in 0..slots.len() {
            if steps >= config.budget {
                break;
            }
            let slot = &mut slots[i];
            let input = agent.input(&slot.obs, &slot.condition)?;
            let action = match (&mut learner, &agent.nets) {
                (OffPolicyLearner::Ddpg { noise, .. }, AgentNets::Ddpg { actor, .. }) => {
                    let (low, high) = agent.bounds()?;
                    let a: Vec<f64> = if steps < config.warmup_steps {
                        low.iter().zip(high).map(|(l, h)| action_rng.random_range(*l..=*h)).collect()
                    } else {
                        let base = squash(&actor.predict(&input)?, low, high);
                        let n = noise[i].step(&mut action_rng);
                        base.iter()
                            .zip(n)
                            .zip(low.iter().zip(high))
                            .map(|((b, e), (l, h))| (b + e).clamp(*l, *h))
                            .collect()
                    };
                    Action::Continuous(a)
                }
                (OffPolicyLearner::Dqn(_), AgentNets::Dqn { q }) => {
                    let eps = epsilon_at(steps, config.eps_start, config.eps_end, decay_steps);
                    let values = q.predict(&input)?;
                    Action::Discrete(epsilon_greedy(&values, eps, &mut action_rng)?)
                }
                _ => unreachable!("learner matches the agent"),
            };
            let result = slot
                .env
                .step(&action)
                .map_err(|e| e.context(format!("agent step {steps}, environment {i}")))?;
            let reward = space.conditional_reward(&slot.condition, &result.features)?;
            replay.push(ConditionalTransition {
                next_input: agent.input(&result.observation, &slot.condition)?,
                input,
                action,
                reward,
                terminated: result.terminated,
            });
            if result.done() {
                if let OffPolicyLearner::Ddpg { noise, .. } = &mut learner {
                    noise[i].reset();
                }
            }
            slot.advance(result);
            steps += 1;
            if steps > config.warmup_steps {
                since_train += 1;
            }
            if schedule.tick() && conditions.conditional {
                conditions.refresh(&mut slots);
            }
            while since_train >= config.train_every {
                since_train -= config.train_every;
                for _ in 0..config.updates_per_train {
                    let batch = replay.sample(config.batch_size, &mut replay_rng);
                    recorder.losses = match &mut learner {
                        OffPolicyLearner::Ddpg { learner, .. } => {
                            let s = learner.update(&mut agent, &batch, config)?;
                            (Some(s.actor_loss), Some(s.critic_loss), None)
                        }
                        OffPolicyLearner::Dqn(learner) => {
                            let s = learner.update(&mut agent, &batch, config)?;
                            (None, Some(s.loss), None)
                        }
                    };
                    updates += 1;
                }
            }
            if recorder.crossed(steps - 1, steps) {
                recorder.record(&agent, steps, updates)?;
            }
        }
    }
    let log = recorder.finish(&agent, steps, updates)?;
    Ok(TrainOutcome {
        agent,
        log,
        agent_steps: steps,
        updates,
        condition_draws: conditions.draws,
    })
}
