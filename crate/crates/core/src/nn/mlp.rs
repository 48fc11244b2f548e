//! Fully-connected network over a flat parameter vector.
//!
//! Parameters are stored layer by layer: the weight matrix (row-major,
//! `out x in`), the bias, then the layer-norm gain and shift when that
//! hidden layer is normalized. Hidden layers compute
//! `act(W x + b)` followed by optional layer normalization; the output
//! layer is affine.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Uniform};

use super::layer_norm::{normalize, normalize_backward};
use crate::error::{ensure_finite, ensure_len, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Activation {
    Tanh,
    Relu,
    Identity,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Relu => z.max(0.0),
            Activation::Identity => z,
        }
    }

    /// Derivative given the pre-activation `z` and output `h`.
    #[inline]
    fn derivative(self, z: f64, h: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - h * h,
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
            Activation::Identity => "identity",
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tanh" => Ok(Activation::Tanh),
            "relu" => Ok(Activation::Relu),
            "identity" => Ok(Activation::Identity),
            other => Err(Error::config(
                "activation",
                format!("unknown activation {other:?} (expected tanh, relu or identity)"),
            )),
        }
    }
}

/// Number of parameters for the given architecture:
/// `sum(n_out * n_in + n_out)` plus `2 * n_out` per normalized layer.
pub fn parameter_count(layer_sizes: &[usize], layer_norm: &[bool]) -> usize {
    layer_sizes
        .windows(2)
        .enumerate()
        .map(|(l, w)| {
            let norm = layer_norm.get(l).copied().unwrap_or(false);
            w[1] * w[0] + w[1] + if norm { 2 * w[1] } else { 0 }
        })
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct LayerLayout {
    fan_in: usize,
    fan_out: usize,
    weight: usize,
    bias: usize,
    /// Offset of the gain; the shift follows it.
    norm: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    layer_sizes: Vec<usize>,
    activation: Activation,
    layer_norm: Vec<bool>,
    layout: Vec<LayerLayout>,
    params: Vec<f64>,
}

/// Intermediate values of one forward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    layers: Vec<LayerCache>,
}

#[derive(Clone, Debug)]
struct LayerCache {
    input: Vec<f64>,
    pre: Vec<f64>,
    post: Vec<f64>,
    norm: Option<(Vec<f64>, f64)>,
}

impl ForwardCache {
    pub fn pre_activations(&self, layer: usize) -> &[f64] {
        &self.layers[layer].pre
    }

    pub fn post_activations(&self, layer: usize) -> &[f64] {
        &self.layers[layer].post
    }
}

/// Gradients of `upstream . output` with respect to the parameters (same
/// layout as [`Mlp::params`]) and to the input.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub params: Vec<f64>,
    pub input: Vec<f64>,
}

fn build_layout(layer_sizes: &[usize], layer_norm: &[bool]) -> Result<Vec<LayerLayout>> {
    if layer_sizes.len() < 2 {
        return Err(Error::config(
            "layer_sizes",
            "need at least an input and an output size",
        ));
    }
    if let Some(pos) = layer_sizes.iter().position(|&n| n == 0) {
        return Err(Error::config(
            "layer_sizes",
            format!("layer {pos} has zero units"),
        ));
    }
    ensure_len("layer_norm flags", layer_sizes.len() - 2, layer_norm.len())?;
    let mut offset = 0;
    let mut layout = Vec::with_capacity(layer_sizes.len() - 1);
    for (l, w) in layer_sizes.windows(2).enumerate() {
        let (fan_in, fan_out) = (w[0], w[1]);
        let weight = offset;
        let bias = weight + fan_in * fan_out;
        offset = bias + fan_out;
        let norm = if layer_norm.get(l).copied().unwrap_or(false) {
            let gain = offset;
            offset += 2 * fan_out;
            Some(gain)
        } else {
            None
        };
        layout.push(LayerLayout {
            fan_in,
            fan_out,
            weight,
            bias,
            norm,
        });
    }
    Ok(layout)
}

impl Mlp {
    /// Network with zero weights and biases; layer-norm gains start at 1.
    pub fn zeros(layer_sizes: &[usize], activation: Activation, layer_norm: &[bool]) -> Result<Self> {
        let layout = build_layout(layer_sizes, layer_norm)?;
        let mut params = vec![0.0; parameter_count(layer_sizes, layer_norm)];
        for layer in &layout {
            if let Some(gain) = layer.norm {
                params[gain..gain + layer.fan_out].fill(1.0);
            }
        }
        Ok(Mlp {
            layer_sizes: layer_sizes.to_vec(),
            activation,
            layer_norm: layer_norm.to_vec(),
            layout,
            params,
        })
    }

    /// Glorot-uniform weights, zero biases.
    pub fn glorot<R: Rng + ?Sized>(
        layer_sizes: &[usize],
        activation: Activation,
        layer_norm: &[bool],
        rng: &mut R,
    ) -> Result<Self> {
        let mut mlp = Self::zeros(layer_sizes, activation, layer_norm)?;
        for layer in mlp.layout.clone() {
            let limit = (6.0 / (layer.fan_in + layer.fan_out) as f64).sqrt();
            let dist = Uniform::new_inclusive(-limit, limit).expect("finite positive limit");
            for w in &mut mlp.params[layer.weight..layer.bias] {
                *w = dist.sample(rng);
            }
        }
        Ok(mlp)
    }

    pub fn from_params(
        layer_sizes: &[usize],
        activation: Activation,
        layer_norm: &[bool],
        params: Vec<f64>,
    ) -> Result<Self> {
        let layout = build_layout(layer_sizes, layer_norm)?;
        ensure_len("mlp parameters", parameter_count(layer_sizes, layer_norm), params.len())?;
        ensure_finite("mlp parameters", &params)?;
        Ok(Mlp {
            layer_sizes: layer_sizes.to_vec(),
            activation,
            layer_norm: layer_norm.to_vec(),
            layout,
            params,
        })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn layer_norm_flags(&self) -> &[bool] {
        &self.layer_norm
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().expect("at least two layer sizes")
    }

    pub fn num_layers(&self) -> usize {
        self.layout.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn weight(&self, layer: usize) -> &[f64] {
        let l = &self.layout[layer];
        &self.params[l.weight..l.bias]
    }

    pub fn weight_mut(&mut self, layer: usize) -> &mut [f64] {
        let l = self.layout[layer];
        &mut self.params[l.weight..l.bias]
    }

    pub fn bias(&self, layer: usize) -> &[f64] {
        let l = &self.layout[layer];
        &self.params[l.bias..l.bias + l.fan_out]
    }

    pub fn bias_mut(&mut self, layer: usize) -> &mut [f64] {
        let l = self.layout[layer];
        &mut self.params[l.bias..l.bias + l.fan_out]
    }

    /// Layer-norm `(gain, shift)` for a normalized hidden layer.
    pub fn norm_params(&self, layer: usize) -> Option<(&[f64], &[f64])> {
        let l = &self.layout[layer];
        l.norm.map(|g| {
            (
                &self.params[g..g + l.fan_out],
                &self.params[g + l.fan_out..g + 2 * l.fan_out],
            )
        })
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        ensure_len("mlp input", self.input_dim(), input.len())?;
        ensure_finite("mlp input", input)
    }

    #[inline]
    fn affine(&self, layer: &LayerLayout, input: &[f64], out: &mut Vec<f64>) {
        let w = &self.params[layer.weight..layer.bias];
        let b = &self.params[layer.bias..layer.bias + layer.fan_out];
        out.clear();
        out.extend(w.chunks_exact(layer.fan_in).zip(b).map(|(row, bias)| {
            row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>() + bias
        }));
    }

    /// Output only; no cache.
    pub fn predict(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_input(input)?;
        let last = self.layout.len() - 1;
        let mut current = input.to_vec();
        let mut next = Vec::new();
        for (l, layer) in self.layout.iter().enumerate() {
            self.affine(layer, &current, &mut next);
            if l < last {
                for z in next.iter_mut() {
                    *z = self.activation.apply(*z);
                }
                if let Some(g) = layer.norm {
                    let (normalized, _) = normalize(&next);
                    let gain = &self.params[g..g + layer.fan_out];
                    let shift = &self.params[g + layer.fan_out..g + 2 * layer.fan_out];
                    for (i, v) in next.iter_mut().enumerate() {
                        *v = gain[i] * normalized[i] + shift[i];
                    }
                }
            }
            std::mem::swap(&mut current, &mut next);
        }
        Ok(current)
    }

    pub fn forward(&self, input: &[f64]) -> Result<(Vec<f64>, ForwardCache)> {
        self.check_input(input)?;
        let last = self.layout.len() - 1;
        let mut layers = Vec::with_capacity(self.layout.len());
        let mut current = input.to_vec();
        for (l, layer) in self.layout.iter().enumerate() {
            let mut pre = Vec::with_capacity(layer.fan_out);
            self.affine(layer, &current, &mut pre);
            let (post, output, norm) = if l < last {
                let post: Vec<f64> = pre.iter().map(|&z| self.activation.apply(z)).collect();
                match layer.norm {
                    Some(g) => {
                        let (normalized, inv_std) = normalize(&post);
                        let gain = &self.params[g..g + layer.fan_out];
                        let shift = &self.params[g + layer.fan_out..g + 2 * layer.fan_out];
                        let out = (0..layer.fan_out)
                            .map(|i| gain[i] * normalized[i] + shift[i])
                            .collect();
                        (post, out, Some((normalized, inv_std)))
                    }
                    None => (post.clone(), post, None),
                }
            } else {
                (pre.clone(), pre.clone(), None)
            };
            layers.push(LayerCache {
                input: std::mem::replace(&mut current, output),
                pre,
                post,
                norm,
            });
        }
        Ok((current, ForwardCache { layers }))
    }

    /// Exact gradients of `upstream . output`.
    pub fn backward(&self, cache: &ForwardCache, upstream: &[f64]) -> Result<Gradients> {
        let mut params = vec![0.0; self.params.len()];
        let input = self.accumulate_backward(cache, upstream, &mut params)?;
        Ok(Gradients { params, input })
    }

    /// Like [`Mlp::backward`] but adds the parameter gradient into
    /// `grad_params`; returns the input gradient.
    pub fn accumulate_backward(
        &self,
        cache: &ForwardCache,
        upstream: &[f64],
        grad_params: &mut [f64],
    ) -> Result<Vec<f64>> {
        ensure_len("mlp upstream gradient", self.output_dim(), upstream.len())?;
        ensure_len("mlp gradient buffer", self.params.len(), grad_params.len())?;
        ensure_len("mlp forward cache", self.layout.len(), cache.layers.len())?;
        let last = self.layout.len() - 1;
        let mut grad = upstream.to_vec();
        for l in (0..self.layout.len()).rev() {
            let layer = &self.layout[l];
            let lc = &cache.layers[l];
            // grad is d/d(layer output); turn it into d/d(pre-activation).
            if l < last {
                if let (Some(g), Some((normalized, inv_std))) = (layer.norm, &lc.norm) {
                    let n = layer.fan_out;
                    let mut d_norm = vec![0.0; n];
                    for i in 0..n {
                        grad_params[g + i] += grad[i] * normalized[i];
                        grad_params[g + n + i] += grad[i];
                        d_norm[i] = grad[i] * self.params[g + i];
                    }
                    grad = normalize_backward(&d_norm, normalized, *inv_std);
                }
                for (i, d) in grad.iter_mut().enumerate() {
                    *d *= self.activation.derivative(lc.pre[i], lc.post[i]);
                }
            }
            let w = &self.params[layer.weight..layer.bias];
            let mut grad_in = vec![0.0; layer.fan_in];
            for (o, &dz) in grad.iter().enumerate() {
                if dz == 0.0 {
                    continue;
                }
                let row = o * layer.fan_in;
                let gw = &mut grad_params[layer.weight + row..layer.weight + row + layer.fan_in];
                for (gw, x) in gw.iter_mut().zip(&lc.input) {
                    *gw += dz * x;
                }
                for (gi, w) in grad_in.iter_mut().zip(&w[row..row + layer.fan_in]) {
                    *gi += dz * w;
                }
                grad_params[layer.bias + o] += dz;
            }
            grad = grad_in;
        }
        Ok(grad)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;

    #[test]
    fn zero_weights_output_last_bias() {
        let mut mlp = Mlp::zeros(&[3, 4, 2], Activation::Tanh, &[false]).unwrap();
        mlp.bias_mut(0).copy_from_slice(&[0.3, -0.2, 0.1, 0.4]);
        mlp.bias_mut(1).copy_from_slice(&[1.5, -2.5]);
        // Hidden biases feed through zero output weights, so only b_out survives.
        assert_eq!(mlp.predict(&[0.7, -1.0, 2.0]).unwrap(), vec![1.5, -2.5]);
    }

    #[test]
    fn identity_layer_passes_input_through() {
        let mut mlp = Mlp::zeros(&[3, 3], Activation::Identity, &[]).unwrap();
        for i in 0..3 {
            mlp.weight_mut(0)[i * 3 + i] = 1.0;
        }
        let x = [0.25, -4.0, 9.5];
        assert_eq!(mlp.predict(&x).unwrap(), x.to_vec());
    }

    #[test]
    fn tanh_2_3_1_matches_hand_computation() {
        // W1 = [[0.5, -0.2], [0.1, 0.3], [-0.4, 0.8]], b1 = [0.1, 0, -0.1]
        // W2 = [[1.0, -1.5, 0.5]], b2 = [0.2]; x = (1, 2)
        // z1 = (0.2, 0.7, 1.1) -> h1 = tanh(z1)
        // y  = tanh(0.2) - 1.5 tanh(0.7) + 0.5 tanh(1.1) + 0.2
        let params = vec![
            0.5, -0.2, 0.1, 0.3, -0.4, 0.8, // W1
            0.1, 0.0, -0.1, // b1
            1.0, -1.5, 0.5, // W2
            0.2, // b2
        ];
        let mlp = Mlp::from_params(&[2, 3, 1], Activation::Tanh, &[false], params).unwrap();
        let y = mlp.predict(&[1.0, 2.0]).unwrap()[0];
        let hand = 0.197_375_320_224_904 - 1.5 * 0.604_367_777_117_164 + 0.5 * 0.800_499_021_760_63 + 0.2;
        assert!((y - hand).abs() < 1e-12, "{y} vs {hand}");
        let (out, cache) = mlp.forward(&[1.0, 2.0]).unwrap();
        assert_eq!(out[0], y);
        assert!((cache.pre_activations(0)[2] - 1.1).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_inputs() {
        let mlp = Mlp::zeros(&[2, 1], Activation::Tanh, &[]).unwrap();
        assert!(matches!(mlp.predict(&[1.0]), Err(Error::Shape { .. })));
        assert!(matches!(mlp.predict(&[1.0, f64::NAN]), Err(Error::NonFinite(_))));
        let (_, cache) = mlp.forward(&[1.0, 2.0]).unwrap();
        assert!(mlp.backward(&cache, &[1.0, 2.0]).is_err());
        assert!(Mlp::zeros(&[2, 3, 1], Activation::Tanh, &[]).is_err());
        assert!(Mlp::from_params(&[2, 1], Activation::Tanh, &[], vec![0.0; 2]).is_err());
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let mut rng = rng_from_seed(3);
        let mlp = Mlp::glorot(&[4, 5, 3], Activation::Relu, &[true], &mut rng).unwrap();
        let (_, cache) = mlp.forward(&[0.1, 0.2, -0.3, 0.4]).unwrap();
        let g = mlp.backward(&cache, &[0.0; 3]).unwrap();
        assert!(g.params.iter().chain(&g.input).all(|v| *v == 0.0));
    }

    #[test]
    fn linear_weight_gradient_is_outer_product() {
        let mut rng = rng_from_seed(5);
        let mlp = Mlp::glorot(&[3, 2], Activation::Tanh, &[], &mut rng).unwrap();
        let x = [0.5, -1.0, 2.0];
        let up = [1.5, -0.25];
        let (_, cache) = mlp.forward(&x).unwrap();
        let g = mlp.backward(&cache, &up).unwrap();
        for o in 0..2 {
            for i in 0..3 {
                assert_eq!(g.params[o * 3 + i], up[o] * x[i]);
            }
            assert_eq!(g.params[6 + o], up[o]);
        }
    }

    #[test]
    fn parameter_count_formula() {
        assert_eq!(parameter_count(&[2, 3, 1], &[false]), 2 * 3 + 3 + 3 + 1);
        assert_eq!(parameter_count(&[4, 8, 8, 2], &[true, false]), 40 + 16 + 72 + 18);
        let mut rng = rng_from_seed(0);
        for (sizes, ln) in [
            (vec![1, 1], vec![]),
            (vec![5, 16, 16, 3], vec![true, true]),
            (vec![7, 4, 9, 2, 1], vec![false, true, false]),
        ] {
            let mlp = Mlp::glorot(&sizes, Activation::Relu, &ln, &mut rng).unwrap();
            assert_eq!(mlp.params().len(), parameter_count(&sizes, &ln));
        }
    }

    #[test]
    fn glorot_respects_limits_and_is_deterministic() {
        let a = Mlp::glorot(&[6, 10, 4], Activation::Tanh, &[false], &mut rng_from_seed(9)).unwrap();
        let b = Mlp::glorot(&[6, 10, 4], Activation::Tanh, &[false], &mut rng_from_seed(9)).unwrap();
        assert_eq!(a, b);
        let limit = (6.0f64 / 16.0).sqrt();
        assert!(a.weight(0).iter().all(|w| w.abs() <= limit));
        assert!(a.bias(0).iter().all(|b| *b == 0.0));
    }
}
