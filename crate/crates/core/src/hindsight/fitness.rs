use crate::algo::Agent;
use crate::env::{rollout_distance, DistanceRun, EnvConfig, Policy};
use crate::error::{Error, Result};
use crate::reward::Condition;
use crate::seed::derive_seed;

#[derive(Clone, Debug, PartialEq)]
pub struct FitnessSpec {
    pub episodes: usize,
    pub steps: usize,
    /// Fitness is 0 when the fraction of fallen runs exceeds this.
    pub max_fail_fraction: f64,
}

impl Default for FitnessSpec {
    fn default() -> Self {
        FitnessSpec {
            episodes: 20,
            steps: 200,
            max_fail_fraction: 0.2,
        }
    }
}

impl FitnessSpec {
    pub fn validate(&self) -> Result<()> {
        if self.episodes == 0 {
            return Err(Error::config("fitness.episodes", "must be positive"));
        }
        if self.steps == 0 {
            return Err(Error::config("fitness.steps", "must be positive"));
        }
        if !(self.max_fail_fraction > 0.0 && self.max_fail_fraction <= 1.0) {
            return Err(Error::config("fitness.max_fail_fraction", "must lie in (0, 1]"));
        }
        Ok(())
    }

    /// Environment steps one evaluation may consume.
    pub fn step_bound(&self) -> u64 {
        self.episodes as u64 * self.steps as u64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitnessReport {
    pub fitness: f64,
    pub runs: Vec<DistanceRun>,
    pub failures: usize,
    /// Standard error of the mean over surviving runs (0 with fewer than two).
    pub std_error: f64,
}

/// Mean distance of the runs that did not fall; 0 when too many fell.
///
/// Run `k` uses seed `derive_seed(seed, "fitness-episode", k)` on a freshly
/// built environment.
pub fn evaluate_fitness(env: &EnvConfig, policy: &dyn Policy, spec: &FitnessSpec, seed: u64) -> Result<FitnessReport> {
    spec.validate()?;
    let mut runs = Vec::with_capacity(spec.episodes);
    for k in 0..spec.episodes {
        let mut instance = env.build();
        let run = rollout_distance(instance.as_mut(), policy, spec.steps, derive_seed(seed, "fitness-episode", k as u64))
            .map_err(|e| e.context(format!("fitness episode {k}")))?;
        if !run.distance.is_finite() {
            return Err(Error::NonFinite(format!("distance of fitness episode {k}")));
        }
        runs.push(run);
    }
    let survivors: Vec<f64> = runs.iter().filter(|r| !r.fell).map(|r| r.distance).collect();
    let failures = runs.len() - survivors.len();
    let too_many = failures as f64 > spec.max_fail_fraction * spec.episodes as f64;
    let (fitness, std_error) = if too_many || survivors.is_empty() {
        (0.0, 0.0)
    } else {
        let n = survivors.len() as f64;
        let mean = survivors.iter().sum::<f64>() / n;
        let se = if survivors.len() > 1 {
            let var = survivors.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        (mean, se)
    };
    Ok(FitnessReport {
        fitness,
        runs,
        failures,
        std_error,
    })
}

/// [`evaluate_fitness`] of the agent's deterministic policy at `condition`.
pub fn evaluate_condition(
    agent: &Agent,
    env: &EnvConfig,
    condition: &Condition,
    spec: &FitnessSpec,
    seed: u64,
) -> Result<FitnessReport> {
    let policy = agent.conditioned(condition.clone())?;
    evaluate_fitness(env, &policy, spec, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{Action, EnvId};

    #[test]
    fn idle_policy_scores_zero() {
        // Pushing into the top wall never reaches the goal and never ends early.
        let stuck = |_: &[f64]| -> Result<Action> { Ok(Action::Discrete(0)) };
        let spec = FitnessSpec {
            episodes: 4,
            steps: 150,
            max_fail_fraction: 0.2,
        };
        let report = evaluate_fitness(&EnvConfig::new(EnvId::GridCollect), &stuck, &spec, 1).unwrap();
        assert_eq!((report.fitness, report.failures), (0.0, 0));

        // A coasting runner only drifts on its start speed: |dx| <= 0.1 * 0.05 / 0.02.
        let idle = |_: &[f64]| -> Result<Action> { Ok(Action::Continuous(vec![0.0])) };
        let report = evaluate_fitness(&EnvConfig::new(EnvId::PointRunner), &idle, &spec, 1).unwrap();
        assert_eq!(report.failures, 0);
        assert!(report.fitness.abs() <= 0.25);
    }

    #[test]
    fn always_falling_scores_zero() {
        let floor_it = |_: &[f64]| -> Result<Action> { Ok(Action::Continuous(vec![1.0])) };
        let env = EnvConfig::new(EnvId::PointRunner);
        let spec = FitnessSpec {
            episodes: 5,
            steps: 200,
            max_fail_fraction: 0.2,
        };
        let report = evaluate_fitness(&env, &floor_it, &spec, 3).unwrap();
        assert_eq!(report.failures, 5);
        assert_eq!(report.fitness, 0.0);
        let lenient = FitnessSpec {
            max_fail_fraction: 1.0,
            ..spec
        };
        assert_eq!(evaluate_fitness(&env, &floor_it, &lenient, 3).unwrap().fitness, 0.0);
    }

    #[test]
    fn rejects_bad_specs() {
        for spec in [
            FitnessSpec { episodes: 0, ..Default::default() },
            FitnessSpec { steps: 0, ..Default::default() },
            FitnessSpec { max_fail_fraction: 0.0, ..Default::default() },
        ] {
            assert!(spec.validate().unwrap_err().is_config());
        }
        assert_eq!(FitnessSpec::default().step_bound(), 4_000);
    }
}
