use rand::Rng;
use rand_distr::StandardNormal;

/// Ornstein-Uhlenbeck exploration noise reverting to zero:
/// `n' = n - theta * n + sigma * N(0, 1)` per dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct OuNoise {
    pub state: Vec<f64>,
    pub theta: f64,
    pub sigma: f64,
}

impl OuNoise {
    pub fn new(dim: usize, theta: f64, sigma: f64) -> Self {
        debug_assert!(theta > 0.0 && theta <= 1.0 && sigma >= 0.0);
        OuNoise {
            state: vec![0.0; dim],
            theta,
            sigma,
        }
    }

    /// Advances the process and returns the new state.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> &[f64] {
        for n in self.state.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *n += self.theta * (0.0 - *n) + self.sigma * z;
        }
        &self.state
    }

    pub fn reset(&mut self) {
        self.state.fill(0.0);
    }

    /// Variance of the stationary distribution, `sigma^2 / (2 theta - theta^2)`.
    pub fn stationary_variance(&self) -> f64 {
        self.sigma * self.sigma / (2.0 * self.theta - self.theta * self.theta)
    }
}
