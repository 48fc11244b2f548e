use rand::Rng;
use rand_distr::StandardNormal;

use crate::checkpoint::format_float;
use crate::error::{Error, Result};
use crate::reward::Interval;
use crate::seed::{child_rng, derive_seed};

#[derive(Clone, Debug, PartialEq)]
pub struct Individual {
    pub genome: Vec<f64>,
    pub fitness: Option<f64>,
}

impl Individual {
    pub fn new(genome: Vec<f64>) -> Self {
        Individual { genome, fitness: None }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GaConfig {
    pub population: usize,
    pub generations: usize,
    pub tournament: usize,
    pub crossover: f64,
    pub mutation: f64,
    /// Mutation std as a fraction of each search dimension's width.
    pub mutation_scale: f64,
    pub elites: usize,
    /// Search box, one interval per condition dimension.
    pub bounds: Vec<Interval>,
}

impl GaConfig {
    /// Defaults over a `dims`-dimensional search box of `[-2, 2]` per axis.
    pub fn with_dims(dims: usize) -> Self {
        GaConfig {
            population: 50,
            generations: 30,
            tournament: 3,
            crossover: 0.8,
            mutation: 0.1,
            mutation_scale: 0.1,
            elites: 1,
            bounds: vec![Interval { lo: -2.0, hi: 2.0 }; dims],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.population < 2 {
            return Err(Error::config("ga.population", "must be at least 2"));
        }
        if self.generations == 0 {
            return Err(Error::config("ga.generations", "must be positive"));
        }
        if self.tournament == 0 {
            return Err(Error::config("ga.tournament", "must be positive"));
        }
        for (field, p) in [("ga.crossover", self.crossover), ("ga.mutation", self.mutation)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::config(field, "must lie in [0, 1]"));
            }
        }
        if !(self.mutation_scale > 0.0 && self.mutation_scale.is_finite()) {
            return Err(Error::config("ga.mutation_scale", "must be positive"));
        }
        if self.elites >= self.population {
            return Err(Error::config("ga.elites", "must be smaller than the population"));
        }
        if self.bounds.is_empty() {
            return Err(Error::config("search.bounds", "need at least one dimension"));
        }
        Ok(())
    }

    /// Per-dimension mutation standard deviations.
    pub fn mutation_sigmas(&self) -> Vec<f64> {
        self.bounds.iter().map(|b| self.mutation_scale * b.width()).collect()
    }
}

fn fitness_of(ind: &Individual, index: usize) -> Result<f64> {
    ind.fitness
        .ok_or_else(|| Error::config("ga", format!("individual {index} has not been evaluated")))
}

/// Winner among the drawn indices: highest fitness, ties to the lowest index.
pub fn tournament_winner(population: &[Individual], drawn: &[usize]) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for &i in drawn {
        let f = fitness_of(&population[i], i)?;
        best = match best {
            Some((bi, bf)) if bf > f || (bf == f && bi < i) => Some((bi, bf)),
            _ => Some((i, f)),
        };
    }
    best.map(|(i, _)| i)
        .ok_or_else(|| Error::config("ga.tournament", "must be positive"))
}

/// Draws `k` indices uniformly with replacement and returns the winner.
pub fn tournament_select<R: Rng + ?Sized>(population: &[Individual], k: usize, rng: &mut R) -> Result<usize> {
    if population.is_empty() {
        return Err(Error::config("ga.population", "cannot select from an empty population"));
    }
    let drawn: Vec<usize> = (0..k).map(|_| rng.random_range(0..population.len())).collect();
    tournament_winner(population, &drawn)
}

/// Children that swap suffixes after `cut` (`1 <= cut < len`).
pub fn crossover_at(a: &[f64], b: &[f64], cut: usize) -> (Vec<f64>, Vec<f64>) {
    let mut c1 = a[..cut].to_vec();
    c1.extend_from_slice(&b[cut..]);
    let mut c2 = b[..cut].to_vec();
    c2.extend_from_slice(&a[cut..]);
    (c1, c2)
}

/// Single-point crossover at a uniform interior cut; identity for
/// one-gene genomes.
pub fn crossover_single_point<R: Rng + ?Sized>(a: &[f64], b: &[f64], rng: &mut R) -> Result<(Vec<f64>, Vec<f64>)> {
    if a.len() != b.len() {
        return Err(Error::shape("crossover genomes", a.len(), b.len()));
    }
    if a.len() < 2 {
        return Ok((a.to_vec(), b.to_vec()));
    }
    let cut = rng.random_range(1..a.len());
    Ok(crossover_at(a, b, cut))
}

/// Adds `noise` gene-wise and clamps into `bounds`.
pub fn perturb(genome: &[f64], noise: &[f64], bounds: &[Interval]) -> Vec<f64> {
    genome
        .iter()
        .zip(noise)
        .zip(bounds)
        .map(|((g, n), b)| (g + n).clamp(b.lo, b.hi))
        .collect()
}

/// With probability `p_mut`, Gaussian noise with per-gene std `sigmas`,
/// clamped into `bounds`; otherwise a copy.
pub fn mutate<R: Rng + ?Sized>(
    genome: &[f64],
    p_mut: f64,
    sigmas: &[f64],
    bounds: &[Interval],
    rng: &mut R,
) -> Vec<f64> {
    if rng.random::<f64>() >= p_mut {
        return genome.to_vec();
    }
    let noise: Vec<f64> = sigmas
        .iter()
        .map(|s| s * rng.sample::<f64, _>(StandardNormal))
        .collect();
    perturb(genome, &noise, bounds)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvolutionRow {
    pub generation: usize,
    pub individual: usize,
    pub genome: Vec<f64>,
    pub fitness: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GenerationSummary {
    pub generation: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvolutionLog {
    pub rows: Vec<EvolutionRow>,
    pub summary: Vec<GenerationSummary>,
    pub best_genome: Vec<f64>,
    pub best_fitness: f64,
}

impl EvolutionLog {
    /// `generation,individual,c_0,...,fitness`.
    pub fn to_csv(&self) -> String {
        let dims = self.best_genome.len();
        let mut out = String::from("generation,individual");
        for d in 0..dims {
            out.push_str(&format!(",c_{d}"));
        }
        out.push_str(",fitness\n");
        for r in &self.rows {
            out.push_str(&format!("{},{}", r.generation, r.individual));
            for g in &r.genome {
                out.push(',');
                out.push_str(&format_float(*g));
            }
            out.push(',');
            out.push_str(&format_float(r.fitness));
            out.push('\n');
        }
        out
    }

    /// `generation,best_fitness,mean_fitness`.
    pub fn summary_csv(&self) -> String {
        let mut out = String::from("generation,best_fitness,mean_fitness\n");
        for s in &self.summary {
            out.push_str(&format!(
                "{},{},{}\n",
                s.generation,
                format_float(s.best_fitness),
                format_float(s.mean_fitness)
            ));
        }
        out
    }

    pub fn final_generation_best(&self) -> Option<(&[f64], f64)> {
        let last = self.summary.last()?.generation;
        self.rows
            .iter()
            .filter(|r| r.generation == last)
            .fold(None, |best: Option<&EvolutionRow>, r| match best {
                Some(b) if b.fitness >= r.fitness => Some(b),
                _ => Some(r),
            })
            .map(|r| (r.genome.as_slice(), r.fitness))
    }
}

/// Seed for evaluating individual `index` of `generation`.
pub fn individual_seed(seed: u64, generation: usize, index: usize) -> u64 {
    derive_seed(derive_seed(seed, "generation", generation as u64), "individual", index as u64)
}

/// Real-valued GA maximizing `fitness(genome, evaluation_seed)`.
///
/// Elites move to the front of the next generation with their fitness, so
/// they are not re-evaluated; everyone else comes from tournament
/// selection, crossover and mutation.
pub fn evolve<F>(ga: &GaConfig, seed: u64, mut fitness: F) -> Result<EvolutionLog>
where
    F: FnMut(&[f64], u64) -> Result<f64>,
{
    ga.validate()?;
    let mut rng = child_rng(seed, "ga", 0);
    let sigmas = ga.mutation_sigmas();
    let mut population: Vec<Individual> = (0..ga.population)
        .map(|_| Individual::new(ga.bounds.iter().map(|b| rng.random_range(b.lo..=b.hi)).collect()))
        .collect();
    let mut rows = Vec::with_capacity(ga.generations * ga.population);
    let mut summary = Vec::with_capacity(ga.generations);
    let mut best: Option<(Vec<f64>, f64)> = None;
    for g in 0..ga.generations {
        for (i, ind) in population.iter_mut().enumerate() {
            if ind.fitness.is_none() {
                let f = fitness(&ind.genome, individual_seed(seed, g, i))
                    .map_err(|e| e.context(format!("generation {g}, individual {i}")))?;
                if !f.is_finite() {
                    return Err(Error::NonFinite(format!("fitness of generation {g}, individual {i}")));
                }
                ind.fitness = Some(f);
            }
        }
        let scores: Vec<f64> = population.iter().map(|p| p.fitness.unwrap_or(f64::NAN)).collect();
        for (i, ind) in population.iter().enumerate() {
            rows.push(EvolutionRow {
                generation: g,
                individual: i,
                genome: ind.genome.clone(),
                fitness: scores[i],
            });
        }
        let mut ranked: Vec<usize> = (0..population.len()).collect();
        ranked.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        let top = ranked[0];
        summary.push(GenerationSummary {
            generation: g,
            best_fitness: scores[top],
            mean_fitness: scores.iter().sum::<f64>() / scores.len() as f64,
        });
        if best.as_ref().map_or(true, |(_, f)| scores[top] > *f) {
            best = Some((population[top].genome.clone(), scores[top]));
        }
        if g + 1 == ga.generations {
            break;
        }
        let mut next: Vec<Individual> = ranked[..ga.elites].iter().map(|&i| population[i].clone()).collect();
        while next.len() < ga.population {
            let p1 = tournament_select(&population, ga.tournament, &mut rng)?;
            let p2 = tournament_select(&population, ga.tournament, &mut rng)?;
            let (c1, c2) = if rng.random::<f64>() < ga.crossover {
                crossover_single_point(&population[p1].genome, &population[p2].genome, &mut rng)?
            } else {
                (population[p1].genome.clone(), population[p2].genome.clone())
            };
            for child in [c1, c2] {
                if next.len() < ga.population {
                    next.push(Individual::new(mutate(&child, ga.mutation, &sigmas, &ga.bounds, &mut rng)));
                }
            }
        }
        population = next;
    }
    let (best_genome, best_fitness) = best.expect("at least one generation ran");
    Ok(EvolutionLog {
        rows,
        summary,
        best_genome,
        best_fitness,
    })
}

/// Environment steps a full search may consume:
/// `generations * population * episodes * steps`.
pub fn search_step_bound(ga: &GaConfig, fitness: &super::FitnessSpec) -> u64 {
    ga.generations as u64 * ga.population as u64 * fitness.step_bound()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;
    use proptest::prelude::*;

    fn scored(fitness: &[f64]) -> Vec<Individual> {
        fitness
            .iter()
            .map(|f| Individual {
                genome: vec![*f],
                fitness: Some(*f),
            })
            .collect()
    }

    #[test]
    fn tournament_examples() {
        let mut rng = rng_from_seed(0);
        assert_eq!(tournament_select(&scored(&[7.0]), 3, &mut rng).unwrap(), 0);
        let pop = scored(&[3.0, 1.0, 2.0]);
        assert_eq!(tournament_winner(&pop, &[1, 2]).unwrap(), 2);
        assert_eq!(tournament_winner(&scored(&[2.0, 2.0]), &[1, 0, 1]).unwrap(), 0);
        assert!(tournament_select(&[], 3, &mut rng).is_err());
        assert!(tournament_winner(&[Individual::new(vec![0.0])], &[0]).is_err());
    }

    #[test]
    fn crossover_examples() {
        let mut rng = rng_from_seed(1);
        assert_eq!(
            crossover_single_point(&[1.0], &[2.0], &mut rng).unwrap(),
            (vec![1.0], vec![2.0])
        );
        assert_eq!(
            crossover_at(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0], 1),
            (vec![1.0, 5.0, 6.0], vec![4.0, 2.0, 3.0])
        );
        assert!(crossover_single_point(&[1.0], &[1.0, 2.0], &mut rng).is_err());
    }

    proptest! {
        #[test]
        fn crossover_preserves_genes(a in prop::collection::vec(-5.0f64..5.0, 1..8), seed in 0u64..1000) {
            let b: Vec<f64> = a.iter().map(|x| x * 2.0 + 1.0).collect();
            let (c1, c2) = crossover_single_point(&a, &b, &mut rng_from_seed(seed)).unwrap();
            let mut before: Vec<f64> = a.iter().chain(&b).copied().collect();
            let mut after: Vec<f64> = c1.iter().chain(&c2).copied().collect();
            before.sort_by(f64::total_cmp);
            after.sort_by(f64::total_cmp);
            prop_assert_eq!(before, after);
            for i in 0..a.len() {
                prop_assert!((c1[i] == a[i] && c2[i] == b[i]) || (c1[i] == b[i] && c2[i] == a[i]));
            }
        }

        #[test]
        fn mutation_stays_in_bounds(genes in prop::collection::vec(-2.0f64..2.0, 1..5), seed in 0u64..1000) {
            let bounds = vec![Interval { lo: -2.0, hi: 2.0 }; genes.len()];
            let sigmas = vec![3.0; genes.len()];
            let out = mutate(&genes, 1.0, &sigmas, &bounds, &mut rng_from_seed(seed));
            prop_assert!(out.iter().all(|g| (-2.0..=2.0).contains(g)));
        }
    }

    #[test]
    fn mutation_examples() {
        let bounds = [Interval { lo: -2.0, hi: 2.0 }];
        let mut rng = rng_from_seed(2);
        for _ in 0..100 {
            assert_eq!(mutate(&[0.7], 0.0, &[0.4], &bounds, &mut rng), vec![0.7]);
        }
        assert_eq!(perturb(&[2.0], &[0.3], &bounds), vec![2.0]);
    }

    #[test]
    fn generation_count_and_elitism() {
        let mut ga = GaConfig::with_dims(2);
        ga.population = 10;
        ga.generations = 1;
        let log = evolve(&ga, 3, |g, _| Ok(-g[0].abs())).unwrap();
        assert_eq!(log.rows.len(), 10);
        assert_eq!(log.summary.len(), 1);
        ga.generations = 8;
        let log = evolve(&ga, 3, |g, _| Ok(-g[0].abs() - g[1].abs())).unwrap();
        assert_eq!(log.rows.len(), 80);
        for w in log.summary.windows(2) {
            assert!(w[1].best_fitness >= w[0].best_fitness);
        }
        assert_eq!(log.final_generation_best().unwrap().1, log.best_fitness);
    }

    #[test]
    fn validation_names_fields() {
        let mut ga = GaConfig::with_dims(1);
        ga.elites = ga.population;
        assert!(ga.validate().unwrap_err().to_string().contains("ga.elites"));
        let mut ga = GaConfig::with_dims(1);
        ga.population = 1;
        assert!(ga.validate().unwrap_err().to_string().contains("ga.population"));
    }
}
