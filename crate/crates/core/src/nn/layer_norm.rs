use crate::error::{ensure_len, Result};

/// Added to the variance before the square root.
pub const LAYER_NORM_EPS: f64 = 1e-5;

/// `gain * (x - mean(x)) / sqrt(var(x) + eps) + shift`, with the
/// population variance.
pub fn layer_norm(x: &[f64], gain: &[f64], shift: &[f64]) -> Result<Vec<f64>> {
    ensure_len("layer_norm gain", x.len(), gain.len())?;
    ensure_len("layer_norm shift", x.len(), shift.len())?;
    let (normalized, _) = normalize(x);
    Ok(normalized
        .iter()
        .zip(gain.iter().zip(shift))
        .map(|(n, (g, s))| g * n + s)
        .collect())
}

/// Returns the standardized vector and `1 / sqrt(var + eps)`.
pub(crate) fn normalize(x: &[f64]) -> (Vec<f64>, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let inv_std = 1.0 / (var + LAYER_NORM_EPS).sqrt();
    (x.iter().map(|v| (v - mean) * inv_std).collect(), inv_std)
}

/// Gradient through `normalize` given the gradient w.r.t. its output.
pub(crate) fn normalize_backward(d_norm: &[f64], normalized: &[f64], inv_std: f64) -> Vec<f64> {
    let n = d_norm.len() as f64;
    let mean_d = d_norm.iter().sum::<f64>() / n;
    let mean_dx = d_norm.iter().zip(normalized).map(|(d, x)| d * x).sum::<f64>() / n;
    d_norm
        .iter()
        .zip(normalized)
        .map(|(d, x)| inv_std * (d - mean_d - x * mean_dx))
        .collect()
}
