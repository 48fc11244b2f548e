//! Run configuration in a flat `key=value` text format.
//!
//! One entry per line; `#` starts a comment; blank lines are ignored.
//! Keys are dotted paths (`algo.gamma`, `reward_space.ranges`, ...). Lists
//! are comma-separated and intervals are written `lo:hi`.

use std::collections::HashMap;

use crate::algo::{parse_value, AlgoConfig, AlgorithmId};
use crate::checkpoint::Checkpoint;
use crate::env::{EnvConfig, EnvId, GridMap};
use crate::error::{Error, Result};
use crate::hindsight::{search_step_bound, FitnessSpec, GaConfig};
use crate::reward::{Interval, RewardSpace};

const TOP_LEVEL_KEYS: [&str; 5] = ["env", "seed", "out", "grid.map", "baseline.compensation"];
const SECTIONS: [&str; 5] = ["reward_space.", "algo.", "ga.", "search.", "fitness."];

/// True for keys that belong to a run configuration.
pub fn is_config_key(key: &str) -> bool {
    TOP_LEVEL_KEYS.contains(&key) || SECTIONS.iter().any(|s| key.starts_with(s))
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub env: EnvConfig,
    pub seed: u64,
    pub out: String,
    pub reward_space: RewardSpace,
    pub algo: AlgoConfig,
    pub ga: GaConfig,
    pub fitness: FitnessSpec,
    /// Literal baseline compensation; the search step bound when absent.
    pub compensation: Option<u64>,
}

/// Splits config text into `(key, value)` entries.
pub fn parse_entries(text: &str) -> Result<Vec<(String, String)>> {
    let mut entries = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::config(format!("line {}", n + 1), format!("expected key=value, got {line:?}")))?;
        entries.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(entries)
}

/// Parses one `KEY=VALUE` override.
pub fn parse_override(text: &str) -> Result<(String, String)> {
    let (k, v) = text
        .split_once('=')
        .ok_or_else(|| Error::config("--override", format!("expected KEY=VALUE, got {text:?}")))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

fn format_intervals(list: &[Interval]) -> String {
    list.iter().map(|i| format!("{}:{}", i.lo, i.hi)).collect::<Vec<_>>().join(",")
}

fn parse_intervals(field: &str, text: &str) -> Result<Vec<Interval>> {
    text.split(',')
        .map(|part| {
            let (lo, hi) = part
                .split_once(':')
                .ok_or_else(|| Error::config(field, format!("expected lo:hi, got {part:?}")))?;
            let lo: f64 = parse_value(field, lo)?;
            let hi: f64 = parse_value(field, hi)?;
            Interval::new(lo, hi).map_err(|e| match e {
                Error::Config { message, .. } => Error::config(field, message),
                other => other,
            })
        })
        .collect()
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_with_overrides(text, &[])
    }

    /// Overrides replace file entries with the same key.
    pub fn parse_with_overrides(text: &str, overrides: &[(String, String)]) -> Result<Self> {
        let mut map: HashMap<String, String> = HashMap::new();
        for (k, v) in parse_entries(text)? {
            if map.insert(k.clone(), v).is_some() {
                return Err(Error::config(k, "given more than once"));
            }
        }
        for (k, v) in overrides {
            map.insert(k.clone(), v.clone());
        }
        Self::from_map(map)
    }

    /// Rebuilds the configuration echoed into a checkpoint header.
    pub fn from_checkpoint(cp: &Checkpoint) -> Result<Self> {
        let map = cp
            .meta()
            .iter()
            .filter(|(k, _)| is_config_key(k))
            .cloned()
            .collect();
        Self::from_map(map).map_err(|e| e.context("configuration stored in the checkpoint"))
    }

    fn from_map(mut map: HashMap<String, String>) -> Result<Self> {
        if let Some(bad) = {
            let mut keys: Vec<&String> = map.keys().filter(|k| !is_config_key(k)).collect();
            keys.sort();
            keys.first().map(|k| k.to_string())
        } {
            return Err(Error::config(bad, "unknown key"));
        }
        let env_id: EnvId = map
            .remove("env")
            .ok_or_else(|| Error::config("env", "missing"))?
            .parse()?;
        let grid_map = match map.remove("grid.map") {
            Some(m) => Some(m.parse::<GridMap>()?),
            None => None,
        };
        if grid_map.is_some() && env_id != EnvId::GridCollect {
            return Err(Error::config("grid.map", format!("only grid-collect takes a map, not {env_id}")));
        }
        let env = EnvConfig { id: env_id, grid_map };
        let spec = env.spec();
        let seed = match map.remove("seed") {
            Some(v) => parse_value("seed", &v)?,
            None => 0,
        };
        let out = map.remove("out").unwrap_or_else(|| format!("runs/{env_id}"));

        let features: Vec<String> = match map.remove("reward_space.features") {
            Some(v) => v.split(',').map(|s| s.trim().to_string()).collect(),
            None => spec.feature_names.clone(),
        };
        if features.len() != spec.feature_dim() {
            return Err(Error::config(
                "reward_space.features",
                format!("{env_id} reports {} features, got {}", spec.feature_dim(), features.len()),
            ));
        }
        let anchor_index = match map.remove("reward_space.anchor_index") {
            Some(v) => parse_value("reward_space.anchor_index", &v)?,
            None => 0,
        };
        let anchor_weight = match map.remove("reward_space.anchor_weight") {
            Some(v) => parse_value("reward_space.anchor_weight", &v)?,
            None => 1.0,
        };
        let reward_space = match (map.remove("reward_space.ranges"), map.remove("reward_space.epsilon")) {
            (Some(_), Some(_)) => {
                return Err(Error::config("reward_space.ranges", "give either ranges or epsilon, not both"))
            }
            (Some(r), None) => RewardSpace::new(
                features,
                anchor_index,
                anchor_weight,
                parse_intervals("reward_space.ranges", &r)?,
            )?,
            (None, Some(e)) => RewardSpace::with_epsilon(
                features,
                anchor_index,
                anchor_weight,
                parse_value("reward_space.epsilon", &e)?,
            )?,
            (None, None) => {
                return Err(Error::config(
                    "reward_space.ranges",
                    "missing; give reward_space.ranges=lo:hi,... or reward_space.epsilon",
                ))
            }
        };

        let algo_id: AlgorithmId = map
            .remove("algo.id")
            .ok_or_else(|| Error::config("algo.id", "missing"))?
            .parse()?;
        let mut algo = AlgoConfig::defaults(algo_id);
        let mut ga = GaConfig::with_dims(reward_space.condition_dim());
        let mut fitness = FitnessSpec::default();
        let mut compensation = None;
        let mut keys: Vec<String> = map.keys().cloned().collect();
        keys.sort();
        for key in keys {
            let value = map[&key].clone();
            if let Some(k) = key.strip_prefix("algo.") {
                algo.apply(k, &value)?;
                continue;
            }
            match key.as_str() {
                "ga.population" => ga.population = parse_value(&key, &value)?,
                "ga.generations" => ga.generations = parse_value(&key, &value)?,
                "ga.tournament" => ga.tournament = parse_value(&key, &value)?,
                "ga.crossover" => ga.crossover = parse_value(&key, &value)?,
                "ga.mutation" => ga.mutation = parse_value(&key, &value)?,
                "ga.mutation_scale" => ga.mutation_scale = parse_value(&key, &value)?,
                "ga.elites" => ga.elites = parse_value(&key, &value)?,
                "search.bounds" => ga.bounds = parse_intervals(&key, &value)?,
                "fitness.episodes" => fitness.episodes = parse_value(&key, &value)?,
                "fitness.steps" => fitness.steps = parse_value(&key, &value)?,
                "fitness.max_fail_fraction" => fitness.max_fail_fraction = parse_value(&key, &value)?,
                "baseline.compensation" => {
                    compensation = match value.as_str() {
                        "auto" => None,
                        v => Some(parse_value(&key, v)?),
                    }
                }
                _ => return Err(Error::config(key, "unknown key")),
            }
        }
        if ga.bounds.len() != reward_space.condition_dim() {
            return Err(Error::config(
                "search.bounds",
                format!("expected {} intervals, got {}", reward_space.condition_dim(), ga.bounds.len()),
            ));
        }
        algo.validate()?;
        ga.validate()?;
        fitness.validate()?;
        let cfg = RunConfig {
            env,
            seed,
            out,
            reward_space,
            algo,
            ga,
            fitness,
            compensation,
        };
        Ok(cfg)
    }

    /// Every setting as `(key, value)`, ranges written out explicitly.
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let mut pairs: Vec<(String, String)> = vec![
            ("env".into(), self.env.id.to_string()),
            ("seed".into(), self.seed.to_string()),
            ("out".into(), self.out.clone()),
        ];
        if let Some(map) = &self.env.grid_map {
            pairs.push(("grid.map".into(), map.to_string()));
        }
        let rs = &self.reward_space;
        pairs.push(("reward_space.features".into(), rs.feature_names().join(",")));
        pairs.push(("reward_space.anchor_index".into(), rs.anchor_index().to_string()));
        pairs.push(("reward_space.anchor_weight".into(), rs.anchor_weight().to_string()));
        pairs.push(("reward_space.ranges".into(), format_intervals(rs.ranges())));
        for (k, v) in self.algo.to_pairs() {
            pairs.push((format!("algo.{k}"), v));
        }
        let ga = &self.ga;
        pairs.extend([
            ("ga.population".into(), ga.population.to_string()),
            ("ga.generations".into(), ga.generations.to_string()),
            ("ga.tournament".into(), ga.tournament.to_string()),
            ("ga.crossover".into(), ga.crossover.to_string()),
            ("ga.mutation".into(), ga.mutation.to_string()),
            ("ga.mutation_scale".into(), ga.mutation_scale.to_string()),
            ("ga.elites".into(), ga.elites.to_string()),
            ("search.bounds".into(), format_intervals(&ga.bounds)),
            ("fitness.episodes".into(), self.fitness.episodes.to_string()),
            ("fitness.steps".into(), self.fitness.steps.to_string()),
            ("fitness.max_fail_fraction".into(), self.fitness.max_fail_fraction.to_string()),
            (
                "baseline.compensation".into(),
                self.compensation.map_or_else(|| "auto".to_string(), |c| c.to_string()),
            ),
        ]);
        pairs
    }

    pub fn to_text(&self) -> String {
        self.to_pairs().iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    /// Extra agent steps granted to the non-conditional baseline.
    pub fn compensation_steps(&self) -> u64 {
        self.compensation
            .unwrap_or_else(|| search_step_bound(&self.ga, &self.fitness))
    }

    pub fn baseline_budget(&self) -> u64 {
        self.algo.budget + self.compensation_steps()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "env=point-runner\nalgo.id=ppo\nreward_space.epsilon=0.5\n";

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(cfg.reward_space.ranges(), &[Interval { lo: 0.5, hi: 1.5 }; 2]);
        assert_eq!(cfg.ga.bounds, vec![Interval { lo: -2.0, hi: 2.0 }; 2]);
        assert_eq!(cfg.compensation_steps(), 30 * 50 * 20 * 200);
        assert_eq!(cfg.baseline_budget(), cfg.algo.budget + 6_000_000);
    }

    #[test]
    fn text_round_trip() {
        let text = "# comment\nenv=grid-collect  # trailing\nalgo.id=dqn\nseed=12\n\
                    grid.map=S.H/..G\nreward_space.ranges=0:2,-2:-0.5,-0.5:-0.01\n\
                    algo.hidden=16\nga.population=12\nbaseline.compensation=5000\n";
        let cfg = RunConfig::parse(text).unwrap();
        assert_eq!(cfg.seed, 12);
        assert_eq!(cfg.compensation_steps(), 5_000);
        let again = RunConfig::parse(&cfg.to_text()).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(again.to_text(), cfg.to_text());
    }

    #[test]
    fn overrides_win() {
        let cfg = RunConfig::parse_with_overrides(MINIMAL, &[parse_override("seed=7").unwrap()]).unwrap();
        assert_eq!(cfg.seed, 7);
        assert!(parse_override("seed").is_err());
    }

    #[test]
    fn errors_name_the_field() {
        let cases = [
            ("env=point-runner\nalgo.id=ppo\n", "reward_space.ranges"),
            ("algo.id=ppo\nreward_space.epsilon=0.5\n", "`env`"),
            ("env=point-runner\nreward_space.epsilon=0.5\n", "algo.id"),
            (&format!("{MINIMAL}algo.gamma=2\n"), "algo.gamma"),
            (&format!("{MINIMAL}algo.bogus=2\n"), "algo.bogus"),
            (&format!("{MINIMAL}nonsense=2\n"), "nonsense"),
            (&format!("{MINIMAL}search.bounds=-1:1\n"), "search.bounds"),
            (&format!("{MINIMAL}reward_space.ranges=0:1,0:1\n"), "reward_space.ranges"),
            (&format!("{MINIMAL}seed=1\nseed=2\n"), "seed"),
            ("env=point-runner\nalgo.id=ppo\nreward_space.ranges=0:1\n", "reward_space.ranges"),
            ("env=point-runner\nalgo.id=ppo\nreward_space.ranges=1:0,0:1\n", "reward_space.ranges"),
            (&format!("{MINIMAL}fitness.episodes=0\n"), "fitness.episodes"),
            ("this is not a pair\n", "line 1"),
        ];
        for (text, field) in cases {
            let err = RunConfig::parse(text).unwrap_err();
            assert!(err.is_config(), "{text}: {err}");
            assert!(err.to_string().contains(field), "{text}: {err}");
        }
    }

    #[test]
    fn checkpoint_echo_round_trip() {
        let cfg = RunConfig::parse(MINIMAL).unwrap();
        let mut cp = Checkpoint::new();
        for (k, v) in cfg.to_pairs() {
            cp.set_meta(k, v);
        }
        cp.set_meta("conditional", true);
        assert_eq!(RunConfig::from_checkpoint(&cp).unwrap(), cfg);
    }
}
