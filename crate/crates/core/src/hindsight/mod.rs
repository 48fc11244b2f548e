//! Searching the condition of a frozen conditional policy for the best
//! fitness, without further training.

mod fitness;
mod ga;

pub use fitness::{evaluate_condition, evaluate_fitness, FitnessReport, FitnessSpec};
pub use ga::{
    crossover_at, crossover_single_point, evolve, individual_seed, mutate, perturb, search_step_bound,
    tournament_select, tournament_winner, EvolutionLog, EvolutionRow, GaConfig, GenerationSummary, Individual,
};

use crate::algo::Agent;
use crate::env::EnvConfig;
use crate::error::{Error, Result};
use crate::reward::Condition;

/// Runs [`evolve`] with fitness measured on the agent's deterministic
/// policy at each genome.
pub fn evolve_agent(
    agent: &Agent,
    env: &EnvConfig,
    ga: &GaConfig,
    spec: &FitnessSpec,
    seed: u64,
) -> Result<EvolutionLog> {
    if !agent.is_conditional() {
        return Err(Error::config(
            "checkpoint",
            "condition search needs a conditional agent; train one with `train` rather than `train-baseline`",
        ));
    }
    if ga.bounds.len() != agent.condition_dim {
        return Err(Error::config(
            "search.bounds",
            format!("expected {} intervals, got {}", agent.condition_dim, ga.bounds.len()),
        ));
    }
    spec.validate()?;
    evolve(ga, seed, |genome, s| {
        let c = Condition::new(genome.to_vec())?;
        Ok(evaluate_condition(agent, env, &c, spec, s)?.fitness)
    })
}
