use super::{check_discrete, one_hot, Action, ActionSpace, Env, EnvSpec, StepResult};
use crate::error::{ensure_finite, ensure_len, Error, Result};
use crate::reward::dot;
use crate::FeatureVector;

/// Deterministic finite MDP with features on `(s, a)` pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct TabularMdp {
    num_states: usize,
    num_actions: usize,
    transitions: Vec<usize>,
    features: Vec<Vec<f64>>,
    terminal: Vec<bool>,
    start: usize,
    feature_names: Vec<String>,
}

impl TabularMdp {
    /// `transitions[s * A + a]` is the successor of `(s, a)` and
    /// `features[s * A + a]` its feature vector.
    pub fn new(
        num_actions: usize,
        transitions: Vec<usize>,
        features: Vec<Vec<f64>>,
        terminal: Vec<bool>,
        start: usize,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        let num_states = terminal.len();
        if num_states == 0 || num_actions == 0 {
            return Err(Error::config("tabular_mdp", "needs at least one state and one action"));
        }
        ensure_len("tabular transitions", num_states * num_actions, transitions.len())?;
        ensure_len("tabular features", num_states * num_actions, features.len())?;
        if let Some(bad) = transitions.iter().find(|&&s| s >= num_states) {
            return Err(Error::config("tabular_mdp", format!("transition to state {bad} out of range")));
        }
        for phi in &features {
            ensure_len("tabular feature vector", feature_names.len(), phi.len())?;
            ensure_finite("tabular features", phi)?;
        }
        if start >= num_states {
            return Err(Error::config("tabular_mdp", "start state out of range"));
        }
        Ok(TabularMdp {
            num_states,
            num_actions,
            transitions,
            features,
            terminal,
            start,
            feature_names,
        })
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn is_terminal(&self, s: usize) -> bool {
        self.terminal[s]
    }

    pub fn next_state(&self, s: usize, a: usize) -> usize {
        self.transitions[s * self.num_actions + a]
    }

    pub fn features(&self, s: usize, a: usize) -> &[f64] {
        &self.features[s * self.num_actions + a]
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValueSolution {
    pub values: Vec<f64>,
    /// `q[s * A + a]`.
    pub q: Vec<f64>,
    /// Greedy action per state, ties toward the lower index; 0 on terminals.
    pub policy: Vec<usize>,
    pub iterations: usize,
    /// Max-norm Bellman residual of `values`.
    pub residual: f64,
}

fn backup(mdp: &TabularMdp, weights: &[f64], gamma: f64, values: &[f64], q: &mut [f64]) {
    for s in 0..mdp.num_states {
        for a in 0..mdp.num_actions {
            q[s * mdp.num_actions + a] = if mdp.terminal[s] {
                0.0
            } else {
                let next = mdp.next_state(s, a);
                let cont = if mdp.terminal[next] { 0.0 } else { values[next] };
                dot(weights, mdp.features(s, a)) + gamma * cont
            };
        }
    }
}

fn greedy(q: &[f64], num_actions: usize) -> (Vec<f64>, Vec<usize>) {
    q.chunks_exact(num_actions)
        .map(|row| {
            let mut best = 0;
            for a in 1..row.len() {
                if row[a] > row[best] {
                    best = a;
                }
            }
            (row[best], best)
        })
        .unzip()
}

/// Value iteration under `r(s, a) = weights . phi(s, a)`.
///
/// Iterates until successive sweeps differ by at most `tol * (1 - gamma)`,
/// which bounds both the Bellman residual and the distance to the fixed
/// point by `tol`.
pub fn value_iteration(mdp: &TabularMdp, weights: &[f64], gamma: f64, tol: f64) -> Result<ValueSolution> {
    ensure_len("value iteration weights", mdp.feature_names.len(), weights.len())?;
    ensure_finite("value iteration weights", weights)?;
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::config("gamma", format!("{gamma} is outside [0, 1)")));
    }
    if !(tol > 0.0) {
        return Err(Error::config("tol", "must be positive"));
    }
    let n = mdp.num_states;
    let mut values = vec![0.0; n];
    let mut q = vec![0.0; n * mdp.num_actions];
    let stop = tol * (1.0 - gamma);
    let mut iterations = 0;
    loop {
        backup(mdp, weights, gamma, &values, &mut q);
        let (next, _) = greedy(&q, mdp.num_actions);
        let delta = next.iter().zip(&values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        values = next;
        iterations += 1;
        if delta <= stop {
            break;
        }
    }
    backup(mdp, weights, gamma, &values, &mut q);
    let (bellman, policy) = greedy(&q, mdp.num_actions);
    let residual = bellman.iter().zip(&values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(ValueSolution {
        values,
        q,
        policy,
        iterations,
        residual,
    })
}

/// Episodic wrapper with one-hot state observations.
#[derive(Clone, Debug)]
pub struct TabularEnv {
    mdp: TabularMdp,
    spec: EnvSpec,
    state: usize,
    t: usize,
    done: bool,
}

impl TabularEnv {
    pub fn new(mdp: TabularMdp, max_episode_steps: usize) -> Self {
        let spec = EnvSpec {
            obs_dim: mdp.num_states,
            feature_names: mdp.feature_names.clone(),
            action_space: ActionSpace::Discrete(mdp.num_actions),
            max_episode_steps,
        };
        let state = mdp.start;
        TabularEnv {
            mdp,
            spec,
            state,
            t: 0,
            done: false,
        }
    }

    pub fn mdp(&self) -> &TabularMdp {
        &self.mdp
    }

    pub fn state(&self) -> usize {
        self.state
    }

    /// One-hot observation for state `s`.
    pub fn observe(&self, s: usize) -> Vec<f64> {
        one_hot(s, self.mdp.num_states)
    }
}

impl Env for TabularEnv {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, _seed: u64) -> Vec<f64> {
        self.state = self.mdp.start;
        self.t = 0;
        self.done = false;
        self.observe(self.state)
    }

    fn step(&mut self, action: &Action) -> Result<StepResult> {
        if self.done {
            return Err(Error::EpisodeOver);
        }
        let a = check_discrete(action, self.mdp.num_actions)?;
        let features = FeatureVector(self.mdp.features(self.state, a).to_vec());
        self.state = self.mdp.next_state(self.state, a);
        self.t += 1;
        let terminated = self.mdp.terminal[self.state];
        let truncated = !terminated && self.t >= self.spec.max_episode_steps;
        self.done = terminated || truncated;
        Ok(StepResult {
            observation: self.observe(self.state),
            features,
            terminated,
            truncated,
            clamped: false,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("f{i}")).collect()
    }

    #[test]
    fn single_absorbing_state_has_zero_value() {
        let mdp = TabularMdp::new(1, vec![0], vec![vec![5.0]], vec![true], 0, names(1)).unwrap();
        let sol = value_iteration(&mdp, &[1.0], 0.9, 1e-10).unwrap();
        assert_eq!(sol.values, vec![0.0]);
    }

    #[test]
    fn one_step_into_absorbing_state() {
        // 0 -> 1 (absorbing) with reward 1.
        let mdp = TabularMdp::new(
            1,
            vec![1, 1],
            vec![vec![1.0], vec![0.0]],
            vec![false, true],
            0,
            names(1),
        )
        .unwrap();
        let sol = value_iteration(&mdp, &[1.0], 0.9, 1e-12).unwrap();
        assert!((sol.values[0] - 1.0).abs() < 1e-12);
        assert_eq!(sol.values[1], 0.0);
    }

    #[test]
    fn residual_within_tolerance_and_ties_go_low() {
        // Self-loop with two identical actions.
        let mdp = TabularMdp::new(
            2,
            vec![0, 0],
            vec![vec![1.0], vec![1.0]],
            vec![false],
            0,
            names(1),
        )
        .unwrap();
        for tol in [1e-3, 1e-6, 1e-9] {
            let sol = value_iteration(&mdp, &[1.0], 0.95, tol).unwrap();
            assert!(sol.residual <= tol);
            assert!((sol.values[0] - 20.0).abs() <= tol);
            assert_eq!(sol.policy, vec![0]);
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        let mdp = TabularMdp::new(1, vec![0], vec![vec![1.0]], vec![true], 0, names(1)).unwrap();
        assert!(value_iteration(&mdp, &[f64::NAN], 0.9, 1e-6).is_err());
        assert!(value_iteration(&mdp, &[1.0], 1.0, 1e-6).is_err());
        assert!(value_iteration(&mdp, &[1.0], 0.5, 0.0).is_err());
        assert!(TabularMdp::new(1, vec![3], vec![vec![1.0]], vec![true], 0, names(1)).is_err());
    }
}
