use crate::error::{ensure_len, Result};

/// Generalized advantage estimates and the matching returns
/// (`advantages + values`).
///
/// `dones[t]` marks the last step of an episode; no value is bootstrapped
/// across it. `bootstrap_value` is the value of the state after the final
/// step.
pub fn gae_advantages(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    bootstrap_value: f64,
    gamma: f64,
    lambda: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = rewards.len();
    ensure_len("gae values", n, values.len())?;
    ensure_len("gae dones", n, dones.len())?;
    let mut advantages = vec![0.0; n];
    let mut running = 0.0;
    for t in (0..n).rev() {
        let next_value = if t + 1 == n { bootstrap_value } else { values[t + 1] };
        running = if dones[t] {
            rewards[t] - values[t]
        } else {
            let delta = rewards[t] + gamma * next_value - values[t];
            delta + gamma * lambda * running
        };
        advantages[t] = running;
    }
    let returns = advantages.iter().zip(values).map(|(a, v)| a + v).collect();
    Ok((advantages, returns))
}

/// Shifts and scales to zero mean and unit standard deviation (population
/// std, floored at 1e-8).
pub fn normalize_advantages(advantages: &mut [f64]) {
    if advantages.is_empty() {
        return;
    }
    let n = advantages.len() as f64;
    let mean = advantages.iter().sum::<f64>() / n;
    let std = (advantages.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n).sqrt();
    let scale = 1.0 / std.max(1e-8);
    for a in advantages.iter_mut() {
        *a = (*a - mean) * scale;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_zero_is_one_step_error() {
        let r = [1.0, -2.0, 0.5];
        let v = [0.3, 0.1, -0.7];
        let (adv, ret) = gae_advantages(&r, &v, &[false, true, false], 9.0, 0.0, 0.95).unwrap();
        for t in 0..3 {
            assert_eq!(adv[t], r[t] - v[t]);
            assert_eq!(ret[t], adv[t] + v[t]);
        }
    }

    #[test]
    fn lambda_one_telescopes() {
        // Dyadic inputs keep every operation exact.
        let r = [1.0, 2.0, -1.0, 0.5];
        let v = [0.5, -1.0, 2.0, 0.25];
        let (g, boot) = (0.5, 4.0);
        let (adv, _) = gae_advantages(&r, &v, &[false; 4], boot, g, 1.0).unwrap();
        for t in 0..4 {
            let mut closed = 0.0;
            for k in 0..4 - t {
                closed += g.powi(k as i32) * r[t + k];
            }
            closed += g.powi((4 - t) as i32) * boot - v[t];
            assert_eq!(adv[t], closed);
        }
    }

    #[test]
    fn done_blocks_bootstrap() {
        let (adv, _) = gae_advantages(&[1.0, 1.0], &[0.0, 0.0], &[true, false], 10.0, 0.9, 0.9).unwrap();
        assert_eq!(adv[0], 1.0);
        assert!((adv[1] - 10.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_length_mismatch() {
        assert!(gae_advantages(&[1.0], &[1.0, 2.0], &[false], 0.0, 0.9, 0.9).is_err());
        assert!(gae_advantages(&[1.0], &[1.0], &[], 0.0, 0.9, 0.9).is_err());
    }

    #[test]
    fn normalization_guards_zero_spread() {
        let mut one = [3.0];
        normalize_advantages(&mut one);
        assert_eq!(one, [0.0]);
        let mut many = [1.0, 2.0, 3.0, 4.0];
        normalize_advantages(&mut many);
        let mean: f64 = many.iter().sum::<f64>() / 4.0;
        let var: f64 = many.iter().map(|a| a * a).sum::<f64>() / 4.0;
        assert!(mean.abs() < 1e-12 && (var - 1.0).abs() < 1e-12);
    }
}
