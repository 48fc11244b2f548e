//! Boosted-versus-baseline comparison on shared evaluation seeds.

use crate::algo::Agent;
use crate::checkpoint::format_float;
use crate::env::EnvConfig;
use crate::error::{Error, Result};
use crate::hindsight::{evaluate_condition, EvolutionLog, FitnessReport, FitnessSpec};
use crate::reward::Condition;
use crate::seed::derive_seed;

/// Seed both arms are evaluated on for master seed `seed`.
pub fn evaluation_seed(seed: u64) -> u64 {
    derive_seed(seed, "evaluation", 0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeedComparison {
    pub seed: u64,
    /// Best search fitness of each generation.
    pub generation_best: Vec<f64>,
    /// Best genome of the final generation.
    pub condition: Vec<f64>,
    /// Its fitness as measured during the search.
    pub search_fitness: f64,
    pub cdrl: FitnessReport,
    pub baseline: FitnessReport,
}

impl SeedComparison {
    pub fn boosted(&self) -> bool {
        self.cdrl.fitness >= self.baseline.fitness
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonReport {
    pub fitness: FitnessSpec,
    pub seeds: Vec<SeedComparison>,
}

impl ComparisonReport {
    pub fn wins(&self) -> usize {
        self.seeds.iter().filter(|s| s.boosted()).count()
    }

    /// One row per master seed.
    pub fn to_csv(&self) -> String {
        let dims = self.seeds.first().map_or(0, |s| s.condition.len());
        let mut out = String::from("seed");
        for d in 0..dims {
            out.push_str(&format!(",c_{d}"));
        }
        out.push_str(",search_fitness,cdrl_fitness,cdrl_std_error,cdrl_failures,baseline_fitness,baseline_std_error,baseline_failures,boosted\n");
        for s in &self.seeds {
            out.push_str(&s.seed.to_string());
            for c in &s.condition {
                out.push(',');
                out.push_str(&format_float(*c));
            }
            out.push_str(&format!(
                ",{},{},{},{},{},{},{},{}\n",
                format_float(s.search_fitness),
                format_float(s.cdrl.fitness),
                format_float(s.cdrl.std_error),
                s.cdrl.failures,
                format_float(s.baseline.fitness),
                format_float(s.baseline.std_error),
                s.baseline.failures,
                s.boosted()
            ));
        }
        out
    }

    /// Best search fitness by generation next to the baseline level.
    pub fn series_csv(&self) -> String {
        let mut out = String::from("seed,generation,best_fitness,baseline_fitness\n");
        for s in &self.seeds {
            for (g, f) in s.generation_best.iter().enumerate() {
                out.push_str(&format!(
                    "{},{g},{},{}\n",
                    s.seed,
                    format_float(*f),
                    format_float(s.baseline.fitness)
                ));
            }
        }
        out
    }
}

/// Evaluates the final-generation best condition of `log` and the baseline
/// policy with the same spec on [`evaluation_seed`].
pub fn compare_seed(
    cdrl: &Agent,
    baseline: &Agent,
    env: &EnvConfig,
    log: &EvolutionLog,
    spec: &FitnessSpec,
    seed: u64,
) -> Result<SeedComparison> {
    if !cdrl.is_conditional() {
        return Err(Error::config("checkpoint", "the boosted arm needs a conditional agent"));
    }
    if baseline.is_conditional() {
        return Err(Error::config(
            "baseline",
            "the baseline arm needs a non-conditional agent from `train-baseline`",
        ));
    }
    let (genome, search_fitness) = log
        .final_generation_best()
        .ok_or_else(|| Error::config("ga.generations", "evolution log is empty"))?;
    let eval_seed = evaluation_seed(seed);
    let condition = Condition::new(genome.to_vec())?;
    let cdrl_report = evaluate_condition(cdrl, env, &condition, spec, eval_seed)?;
    let baseline_report = evaluate_condition(baseline, env, &Condition::zeros(cdrl.condition_dim), spec, eval_seed)?;
    Ok(SeedComparison {
        seed,
        generation_best: log.summary.iter().map(|s| s.best_fitness).collect(),
        condition: genome.to_vec(),
        search_fitness,
        cdrl: cdrl_report,
        baseline: baseline_report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algo::{AlgoConfig, AlgorithmId};
    use crate::env::EnvId;
    use crate::hindsight::{evolve_agent, GaConfig};

    #[test]
    fn arms_share_seeds_and_csvs_line_up() {
        let env = EnvConfig::new(EnvId::PointRunner);
        let spec = env.spec();
        let mut config = AlgoConfig::defaults(AlgorithmId::Ppo);
        config.hidden = vec![8];
        let cdrl = Agent::init(&config, &spec, 1, 1).unwrap();
        let baseline = Agent::init(&config, &spec, 0, 2).unwrap();
        let ga = GaConfig {
            population: 4,
            generations: 3,
            ..GaConfig::with_dims(1)
        };
        let fitness = FitnessSpec {
            episodes: 3,
            steps: 20,
            max_fail_fraction: 0.2,
        };
        let log = evolve_agent(&cdrl, &env, &ga, &fitness, 9).unwrap();
        let row = compare_seed(&cdrl, &baseline, &env, &log, &fitness, 9).unwrap();
        let (genome, _) = log.final_generation_best().unwrap();
        let again = evaluate_condition(&cdrl, &env, &Condition::new(genome.to_vec()).unwrap(), &fitness, evaluation_seed(9))
            .unwrap();
        assert_eq!(row.cdrl, again);
        assert_eq!(row.generation_best.len(), 3);

        let report = ComparisonReport {
            fitness,
            seeds: vec![row],
        };
        assert_eq!(report.to_csv().lines().count(), 2);
        assert_eq!(report.series_csv().lines().count(), 4);
        assert!(report.to_csv().starts_with("seed,c_0,search_fitness"));

        assert!(compare_seed(&baseline, &baseline, &env, &log, &report.fitness, 9).is_err());
        assert!(compare_seed(&cdrl, &cdrl, &env, &log, &report.fitness, 9).is_err());
    }
}
