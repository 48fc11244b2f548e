use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use cdrl_core::compare::{compare_seed, evaluation_seed};
use cdrl_core::config::{is_config_key, parse_override};
use cdrl_core::hindsight::{evaluate_condition, evolve_agent, FitnessReport};
use cdrl_core::{format_float, Agent, Checkpoint, ComparisonReport, Condition, Error, RunConfig};

use crate::files::{read_checkpoint, read_config, write_atomic};
use crate::Common;

/// Grids with more dimensions than this are refused.
const MAX_GRID_DIMS: usize = 3;

fn resolve(text: &str, common: &Common) -> Result<RunConfig> {
    let mut overrides = common
        .overrides
        .iter()
        .map(|o| parse_override(o))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(seed) = common.seed {
        overrides.push(("seed".into(), seed.to_string()));
    }
    if let Some(out) = &common.out {
        overrides.push(("out".into(), out.display().to_string()));
    }
    Ok(RunConfig::parse_with_overrides(text, &overrides)?)
}

fn out_dir(cfg: &RunConfig) -> PathBuf {
    PathBuf::from(&cfg.out)
}

pub fn train(config: &str, common: &Common, baseline: bool) -> Result<()> {
    let cfg = resolve(&read_config(config)?, common)?;
    let mut algo = cfg.algo.clone();
    if baseline {
        algo.budget = cfg.baseline_budget();
    }
    let outcome = cdrl_core::train(&algo, &cfg.reward_space, &cfg.env, !baseline, cfg.seed)?;

    let mut cp = Checkpoint::new();
    for (k, v) in cfg.to_pairs() {
        cp.set_meta(k, v);
    }
    outcome.agent.write_to(&mut cp);
    cp.set_meta("agent_steps", outcome.agent_steps);
    cp.set_meta("updates", outcome.updates);
    if baseline {
        cp.set_meta("compensation", cfg.compensation_steps());
    }
    let (ckpt_name, log_name) = if baseline {
        ("baseline.ckpt", "baseline_log.csv")
    } else {
        ("agent.ckpt", "training_log.csv")
    };
    let dir = out_dir(&cfg);
    let ckpt = write_atomic(&dir, ckpt_name, &cp.to_text())?;
    write_atomic(&dir, log_name, &outcome.log.to_csv())?;

    let fitness = outcome
        .log
        .rows
        .last()
        .and_then(|r| r.mean_eval_fitness)
        .map_or_else(|| "n/a".to_string(), format_float);
    println!(
        "trained {} {} on {}: {} agent steps, {} updates, final eval fitness {} -> {}",
        if baseline { "baseline" } else { "conditional" },
        cfg.algo.id,
        cfg.env.id,
        outcome.agent_steps,
        outcome.updates,
        fitness,
        ckpt.display()
    );
    Ok(())
}

/// The checkpoint's agent and the run config: `--config` when given,
/// otherwise the config stored in the checkpoint; overrides apply on top.
fn load_run(checkpoint: &Path, config: Option<&str>, common: &Common) -> Result<(Agent, RunConfig)> {
    let cp = read_checkpoint(checkpoint)?;
    let agent = Agent::from_checkpoint(&cp).with_context(|| format!("loading agent from {}", checkpoint.display()))?;
    let text = match config {
        Some(src) => read_config(src)?,
        None => cp
            .meta()
            .iter()
            .filter(|(k, _)| is_config_key(k))
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect(),
    };
    let cfg = resolve(&text, common)?;
    let spec = cfg.env.spec();
    if spec.obs_dim != agent.obs_dim || spec.action_space != agent.action_space {
        return Err(Error::config(
            "env",
            format!("{} does not match the observation and action spaces of the checkpoint", cfg.env.id),
        )
        .into());
    }
    if agent.is_conditional() && agent.condition_dim != cfg.reward_space.condition_dim() {
        return Err(Error::config(
            "reward_space.features",
            format!(
                "checkpoint expects {} condition values, config defines {}",
                agent.condition_dim,
                cfg.reward_space.condition_dim()
            ),
        )
        .into());
    }
    Ok((agent, cfg))
}

pub fn evolve(checkpoint: &Path, baseline: Option<&Path>, config: Option<&str>, common: &Common) -> Result<()> {
    let (agent, cfg) = load_run(checkpoint, config, common)?;
    let baseline_agent = match baseline {
        Some(path) => {
            let cp = read_checkpoint(path)?;
            Some(Agent::from_checkpoint(&cp).with_context(|| format!("loading agent from {}", path.display()))?)
        }
        None => None,
    };
    let log = evolve_agent(&agent, &cfg.env, &cfg.ga, &cfg.fitness, cfg.seed)?;
    let dir = out_dir(&cfg);
    write_atomic(&dir, "evolution.csv", &log.to_csv())?;
    write_atomic(&dir, "evolution_summary.csv", &log.summary_csv())?;
    let best: Vec<String> = log.best_genome.iter().map(|g| format_float(*g)).collect();
    println!(
        "searched {} generations of {}: best fitness {} at condition {}",
        cfg.ga.generations,
        cfg.ga.population,
        format_float(log.best_fitness),
        best.join(",")
    );
    if let Some(base) = baseline_agent {
        let row = compare_seed(&agent, &base, &cfg.env, &log, &cfg.fitness, cfg.seed)?;
        let report = ComparisonReport {
            fitness: cfg.fitness.clone(),
            seeds: vec![row],
        };
        write_atomic(&dir, "comparison.csv", &report.to_csv())?;
        write_atomic(&dir, "comparison_series.csv", &report.series_csv())?;
        let row = &report.seeds[0];
        println!(
            "final-generation best {} vs baseline {} on shared evaluation episodes",
            format_float(row.cdrl.fitness),
            format_float(row.baseline.fitness)
        );
    }
    Ok(())
}

fn parse_condition(text: &str, expected: usize) -> Result<Condition> {
    let values = text
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::config("--condition", format!("{v:?} is not a number")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if values.len() != expected {
        return Err(Error::config(
            "--condition",
            format!("expected {expected} values, one per conditioned feature; got {}", values.len()),
        )
        .into());
    }
    Ok(Condition::new(values)?)
}

fn episodes_table(report: &FitnessReport) -> String {
    let mut out = String::from("episode,distance,fell,steps\n");
    for (k, run) in report.runs.iter().enumerate() {
        out.push_str(&format!("{k},{},{},{}\n", format_float(run.distance), run.fell, run.steps));
    }
    out
}

pub fn eval(
    checkpoint: &Path,
    condition: Option<&str>,
    episodes: Option<usize>,
    config: Option<&str>,
    common: &Common,
) -> Result<()> {
    let (agent, mut cfg) = load_run(checkpoint, config, common)?;
    if let Some(n) = episodes {
        cfg.fitness.episodes = n;
    }
    let condition = match (condition, agent.is_conditional()) {
        (Some(text), true) => parse_condition(text, agent.condition_dim)?,
        (None, true) => Condition::zeros(agent.condition_dim),
        (Some(_), false) => {
            return Err(Error::config("--condition", "baseline checkpoints take no condition").into());
        }
        (None, false) => Condition::zeros(0),
    };
    let report = evaluate_condition(&agent, &cfg.env, &condition, &cfg.fitness, evaluation_seed(cfg.seed))?;
    let path = write_atomic(&out_dir(&cfg), "eval.csv", &episodes_table(&report))?;
    println!(
        "fitness {} std_error {} failures {}/{} -> {}",
        format_float(report.fitness),
        format_float(report.std_error),
        report.failures,
        report.runs.len(),
        path.display()
    );
    Ok(())
}

/// `lo:hi:n` as `n` evenly spaced points from `lo` to `hi`.
fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let bad = |msg: String| Error::config("--grid", msg);
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(bad(format!("expected lo:hi:n, got {text:?}")).into());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad(format!("bad lower end in {text:?}")))?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad(format!("bad upper end in {text:?}")))?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad(format!("bad point count in {text:?}")))?;
    if n == 0 || !lo.is_finite() || !hi.is_finite() {
        return Err(bad(format!("{text:?} needs finite ends and at least one point")).into());
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect())
}

pub fn sweep(
    checkpoint: &Path,
    grid: &[String],
    episodes: Option<usize>,
    config: Option<&str>,
    common: &Common,
) -> Result<()> {
    if grid.len() > MAX_GRID_DIMS {
        return Err(Error::config(
            "--grid",
            format!("{} dimensions requested; sweeps cover at most {MAX_GRID_DIMS}", grid.len()),
        )
        .into());
    }
    let (agent, mut cfg) = load_run(checkpoint, config, common)?;
    if !agent.is_conditional() {
        return Err(Error::config("--checkpoint", "sweeps need a conditional checkpoint").into());
    }
    if grid.len() != agent.condition_dim {
        return Err(Error::config(
            "--grid",
            format!("expected {} grids, one per conditioned feature; got {}", agent.condition_dim, grid.len()),
        )
        .into());
    }
    if let Some(n) = episodes {
        cfg.fitness.episodes = n;
    }
    let axes = grid.iter().map(|g| parse_grid(g)).collect::<Result<Vec<_>>>()?;
    let total: usize = axes.iter().map(Vec::len).product();
    let seed = evaluation_seed(cfg.seed);

    let mut csv: String = (0..axes.len()).map(|d| format!("c_{d},")).collect();
    csv.push_str("fitness\n");
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for flat in 0..total {
        // Row-major: the last dimension varies fastest.
        let mut rest = flat;
        let mut point = vec![0.0; axes.len()];
        for d in (0..axes.len()).rev() {
            point[d] = axes[d][rest % axes[d].len()];
            rest /= axes[d].len();
        }
        let report = evaluate_condition(&agent, &cfg.env, &Condition::new(point.clone())?, &cfg.fitness, seed)
            .with_context(|| format!("grid point {flat}"))?;
        for c in &point {
            csv.push_str(&format_float(*c));
            csv.push(',');
        }
        csv.push_str(&format_float(report.fitness));
        csv.push('\n');
        lo = lo.min(report.fitness);
        hi = hi.max(report.fitness);
    }
    let path = write_atomic(&out_dir(&cfg), "sweep.csv", &csv)?;
    println!(
        "evaluated {total} conditions: fitness from {} to {} -> {}",
        format_float(lo),
        format_float(hi),
        path.display()
    );
    Ok(())
}
