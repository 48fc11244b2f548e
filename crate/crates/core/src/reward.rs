//! Anchored reward-parameter space and its normalized condition space.
//!
//! A reward is a weighted sum of per-step indicator features. One weight
//! (the anchor) is held fixed; every other weight ranges over a closed
//! interval, and each interval is mapped affinely onto `[-1, 1]`. A point
//! in that normalized box is a [`Condition`].

use rand::Rng;
use rand_distr::{Distribution, Uniform};

use crate::error::{ensure_finite, ensure_len, Error, Result};

/// Closed, non-degenerate interval `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::config("interval", format!("[{lo}, {hi}] is not finite")));
        }
        if lo >= hi {
            return Err(Error::config("interval", format!("[{lo}, {hi}] is empty or degenerate")));
        }
        Ok(Interval { lo, hi })
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// A point in condition space.
///
/// Training draws lie in `[-1, 1]^(N-1)`; search-time points may lie
/// outside it and are never clamped.
#[derive(Clone, Debug, PartialEq)]
pub struct Condition(Vec<f64>);

impl Condition {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        ensure_finite("condition", &values)?;
        Ok(Condition(values))
    }

    pub fn zeros(dim: usize) -> Self {
        Condition(vec![0.0; dim])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Indicator features `phi(s, a, s')` of one transition; index 0 is the
/// anchored feature by default.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RewardSpace {
    feature_names: Vec<String>,
    anchor_index: usize,
    anchor_weight: f64,
    ranges: Vec<Interval>,
}

impl RewardSpace {
    /// `ranges` lists the non-anchor weights in feature order, skipping the
    /// anchor.
    pub fn new(
        feature_names: Vec<String>,
        anchor_index: usize,
        anchor_weight: f64,
        ranges: Vec<Interval>,
    ) -> Result<Self> {
        if feature_names.is_empty() {
            return Err(Error::config("reward_space.features", "at least one feature is required"));
        }
        if anchor_index >= feature_names.len() {
            return Err(Error::config(
                "reward_space.anchor_index",
                format!("{anchor_index} is out of range for {} features", feature_names.len()),
            ));
        }
        if !anchor_weight.is_finite() {
            return Err(Error::config("reward_space.anchor_weight", "must be finite"));
        }
        if ranges.len() + 1 != feature_names.len() {
            return Err(Error::config(
                "reward_space.ranges",
                format!(
                    "expected {} ranges (one per non-anchor feature), got {}",
                    feature_names.len() - 1,
                    ranges.len()
                ),
            ));
        }
        for r in &ranges {
            Interval::new(r.lo, r.hi).map_err(|e| match e {
                Error::Config { message, .. } => Error::config("reward_space.ranges", message),
                other => other,
            })?;
        }
        Ok(RewardSpace {
            feature_names,
            anchor_index,
            anchor_weight,
            ranges,
        })
    }

    /// Every non-anchor weight ranges over `[1 - eps, 1 + eps]`.
    pub fn with_epsilon(
        feature_names: Vec<String>,
        anchor_index: usize,
        anchor_weight: f64,
        eps: f64,
    ) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::config("reward_space.epsilon", format!("{eps} must be positive")));
        }
        let n = feature_names.len().saturating_sub(1);
        let ranges = vec![Interval { lo: 1.0 - eps, hi: 1.0 + eps }; n];
        Self::new(feature_names, anchor_index, anchor_weight, ranges)
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn anchor_index(&self) -> usize {
        self.anchor_index
    }

    pub fn anchor_weight(&self) -> f64 {
        self.anchor_weight
    }

    pub fn ranges(&self) -> &[Interval] {
        &self.ranges
    }

    /// N, the number of features.
    pub fn feature_dim(&self) -> usize {
        self.feature_names.len()
    }

    /// N - 1, the width of a condition.
    pub fn condition_dim(&self) -> usize {
        self.ranges.len()
    }

    /// Maps non-anchor weights to condition space, per dimension
    /// `c = 2 (w - lo) / (hi - lo) - 1`.
    pub fn to_condition(&self, weights: &[f64]) -> Result<Condition> {
        ensure_len("non-anchor weights", self.condition_dim(), weights.len())?;
        ensure_finite("non-anchor weights", weights)?;
        Ok(Condition(
            weights
                .iter()
                .zip(&self.ranges)
                .map(|(w, r)| 2.0 * (w - r.lo) / r.width() - 1.0)
                .collect(),
        ))
    }

    /// Inverse of [`RewardSpace::to_condition`]; extrapolates linearly
    /// outside `[-1, 1]`.
    pub fn from_condition(&self, c: &Condition) -> Result<Vec<f64>> {
        ensure_len("condition", self.condition_dim(), c.len())?;
        Ok(c.0
            .iter()
            .zip(&self.ranges)
            .map(|(ci, r)| r.lo + 0.5 * (ci + 1.0) * r.width())
            .collect())
    }

    /// All N feature weights `[xi; M^-1(c)]`, with the anchor at its index.
    pub fn weights(&self, c: &Condition) -> Result<Vec<f64>> {
        let mut rest = self.from_condition(c)?.into_iter();
        Ok((0..self.feature_dim())
            .map(|i| {
                if i == self.anchor_index {
                    self.anchor_weight
                } else {
                    rest.next().expect("one weight per non-anchor feature")
                }
            })
            .collect())
    }

    /// The reward of one transition under condition `c`.
    pub fn conditional_reward(&self, c: &Condition, features: &FeatureVector) -> Result<f64> {
        ensure_len("feature vector", self.feature_dim(), features.len())?;
        Ok(dot(&self.weights(c)?, features.values()))
    }

    /// `n` independent uniform draws from `[-1, 1]^(N-1)`.
    pub fn sample_conditions<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<Condition> {
        let unit = Uniform::new_inclusive(-1.0, 1.0).expect("valid bounds");
        (0..n)
            .map(|_| Condition((0..self.condition_dim()).map(|_| unit.sample(rng)).collect()))
            .collect()
    }

    /// The condition of the range midpoints.
    pub fn midpoint_condition(&self) -> Condition {
        Condition::zeros(self.condition_dim())
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Counts refresh units and reports when conditions are due for a redraw.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RefreshSchedule {
    period: u64,
    counter: u64,
}

impl RefreshSchedule {
    pub fn new(period: u64) -> Result<Self> {
        if period == 0 {
            return Err(Error::config("algo.refresh_period", "must be positive"));
        }
        Ok(RefreshSchedule { period, counter: 0 })
    }

    pub fn period(&self) -> u64 {
        self.period
    }

    pub fn counter(&self) -> u64 {
        self.counter
    }

    /// Advances by one unit; true exactly when the new count is a multiple
    /// of the period.
    pub fn tick(&mut self) -> bool {
        self.counter += 1;
        self.counter % self.period == 0
    }
}
