use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{ensure_len, Result};

pub const LOG_STD_MIN: f64 = -5.0;
pub const LOG_STD_MAX: f64 = 2.0;

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Diagonal Gaussian over continuous actions with state-independent
/// `log_std`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianHead {
    pub mean: Vec<f64>,
    pub log_std: Vec<f64>,
}

impl GaussianHead {
    /// `log_std` is clamped to `[LOG_STD_MIN, LOG_STD_MAX]`.
    pub fn new(mean: Vec<f64>, log_std: &[f64]) -> Result<Self> {
        ensure_len("gaussian log_std", mean.len(), log_std.len())?;
        Ok(GaussianHead {
            mean,
            log_std: log_std.iter().map(|s| s.clamp(LOG_STD_MIN, LOG_STD_MAX)).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn log_prob(&self, action: &[f64]) -> Result<f64> {
        ensure_len("gaussian action", self.dim(), action.len())?;
        Ok(self
            .mean
            .iter()
            .zip(&self.log_std)
            .zip(action)
            .map(|((mu, ls), a)| {
                let z = (a - mu) / ls.exp();
                -0.5 * z * z - ls - HALF_LN_2PI
            })
            .sum())
    }

    /// Gradients of `log_prob(action)` with respect to the mean and log_std.
    pub fn log_prob_grads(&self, action: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        ensure_len("gaussian action", self.dim(), action.len())?;
        let mut d_mean = Vec::with_capacity(self.dim());
        let mut d_log_std = Vec::with_capacity(self.dim());
        for ((mu, ls), a) in self.mean.iter().zip(&self.log_std).zip(action) {
            let var = (2.0 * ls).exp();
            let diff = a - mu;
            d_mean.push(diff / var);
            d_log_std.push(diff * diff / var - 1.0);
        }
        Ok((d_mean, d_log_std))
    }

    pub fn entropy(&self) -> f64 {
        self.log_std.iter().map(|ls| ls + 0.5 + HALF_LN_2PI).sum()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.mean
            .iter()
            .zip(&self.log_std)
            .map(|(mu, ls)| {
                let n: f64 = rng.sample(StandardNormal);
                mu + ls.exp() * n
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;

    #[test]
    fn density_at_mode() {
        let head = GaussianHead::new(vec![0.0], &[0.0]).unwrap();
        let lp = head.log_prob(&[0.0]).unwrap();
        assert!((lp - (-0.5 * (2.0 * std::f64::consts::PI).ln())).abs() < 1e-15);
        assert!((lp + 0.9189).abs() < 1e-4);
    }

    #[test]
    fn symmetric_about_mean() {
        let head = GaussianHead::new(vec![0.3, -1.0], &[-0.5, 0.7]).unwrap();
        for d in [0.01, 0.4, 2.5] {
            let up = head.log_prob(&[0.3 + d, -1.0 + d]).unwrap();
            let down = head.log_prob(&[0.3 - d, -1.0 - d]).unwrap();
            assert!((up - down).abs() < 1e-12);
        }
    }

    #[test]
    fn integrates_to_one() {
        // Composite Simpson over [-8 sigma, 8 sigma].
        let (mu, ls) = (0.7, -0.3);
        let head = GaussianHead::new(vec![mu], &[ls]).unwrap();
        let sigma = f64::exp(ls);
        let (a, b, n) = (mu - 8.0 * sigma, mu + 8.0 * sigma, 4000);
        let h = (b - a) / n as f64;
        let f = |x: f64| head.log_prob(&[x]).unwrap().exp();
        let mut sum = f(a) + f(b);
        for i in 1..n {
            sum += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        assert!((sum * h / 3.0 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn log_std_is_clamped() {
        let head = GaussianHead::new(vec![0.0, 0.0], &[-9.0, 4.0]).unwrap();
        assert_eq!(head.log_std, vec![LOG_STD_MIN, LOG_STD_MAX]);
        assert!(GaussianHead::new(vec![0.0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn grads_match_finite_differences() {
        let head = GaussianHead::new(vec![0.2, -0.4], &[0.1, -0.6]).unwrap();
        let action = [0.9, -1.3];
        let (dm, ds) = head.log_prob_grads(&action).unwrap();
        let h = 1e-6;
        for i in 0..2 {
            let mut plus = head.clone();
            let mut minus = head.clone();
            plus.mean[i] += h;
            minus.mean[i] -= h;
            let fd = (plus.log_prob(&action).unwrap() - minus.log_prob(&action).unwrap()) / (2.0 * h);
            assert!((fd - dm[i]).abs() < 1e-7);
            let mut plus = head.clone();
            let mut minus = head.clone();
            plus.log_std[i] += h;
            minus.log_std[i] -= h;
            let fd = (plus.log_prob(&action).unwrap() - minus.log_prob(&action).unwrap()) / (2.0 * h);
            assert!((fd - ds[i]).abs() < 1e-7);
        }
    }

    #[test]
    fn samples_have_action_dim() {
        let head = GaussianHead::new(vec![0.0; 3], &[0.0; 3]).unwrap();
        let mut rng = rng_from_seed(1);
        assert_eq!(head.sample(&mut rng).len(), 3);
    }
}
