//! Dense network substrate: forward/backward passes, Adam, layer
//! normalization and the diagonal Gaussian policy head.

mod adam;
mod gaussian;
mod layer_norm;
mod mlp;

pub use adam::{AdamState, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};
pub use gaussian::{GaussianHead, LOG_STD_MAX, LOG_STD_MIN};
pub use layer_norm::{layer_norm, LAYER_NORM_EPS};
pub use mlp::{parameter_count, Activation, ForwardCache, Gradients, Mlp};

/// Scale `grads` in place so its L2 norm does not exceed `max_norm`.
/// Returns the norm before scaling.
pub fn clip_grad_norm(grads: &mut [f64], max_norm: f64) -> f64 {
    let norm = grads.iter().map(|g| g * g).sum::<f64>().sqrt();
    if max_norm > 0.0 && norm > max_norm {
        let scale = max_norm / norm;
        grads.iter_mut().for_each(|g| *g *= scale);
    }
    norm
}

/// `target <- (1 - rho) * target + rho * online`, element-wise.
pub fn soft_update(target: &mut [f64], online: &[f64], rho: f64) -> crate::Result<()> {
    crate::error::ensure_len("soft_update", target.len(), online.len())?;
    if !(0.0..=1.0).contains(&rho) {
        return Err(crate::Error::config("soft_update.rho", format!("{rho} is outside [0, 1]")));
    }
    for (t, o) in target.iter_mut().zip(online) {
        *t = (1.0 - rho) * *t + rho * o;
    }
    Ok(())
}
