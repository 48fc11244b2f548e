//! Plain-text parameter snapshots.
//!
//! A header of `key=value` lines ends at the first blank line; every
//! parameter follows, one per line, in section order. Each network section
//! contributes its flat parameter vector (per layer: weights row-major,
//! biases, then layer-norm gains and shifts).

use crate::error::{Error, Result};
use crate::nn::{parameter_count, Activation, Mlp};

pub const CHECKPOINT_FORMAT: &str = "cdrl-checkpoint-1";

/// Formats with 17 significant digits, enough to parse back bit-exactly.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    meta: Vec<(String, String)>,
    networks: Vec<(String, Mlp)>,
    vectors: Vec<(String, Vec<f64>)>,
}

impl Default for Checkpoint {
    fn default() -> Self {
        Self::new()
    }
}

impl Checkpoint {
    pub fn new() -> Self {
        Checkpoint {
            meta: Vec::new(),
            networks: Vec::new(),
            vectors: Vec::new(),
        }
    }

    /// Adds or replaces a metadata entry.
    pub fn set_meta(&mut self, key: impl Into<String>, value: impl ToString) {
        let key = key.into();
        let value = value.to_string();
        match self.meta.iter_mut().find(|(k, _)| *k == key) {
            Some(entry) => entry.1 = value,
            None => self.meta.push((key, value)),
        }
    }

    pub fn meta(&self) -> &[(String, String)] {
        &self.meta
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::Checkpoint(format!("missing header key `{key}`")))
    }

    pub fn add_network(&mut self, name: &str, net: Mlp) {
        self.networks.push((name.to_string(), net));
    }

    pub fn add_vector(&mut self, name: &str, values: Vec<f64>) {
        self.vectors.push((name.to_string(), values));
    }

    pub fn network(&self, name: &str) -> Result<&Mlp> {
        self.networks
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, m)| m)
            .ok_or_else(|| Error::Checkpoint(format!("missing network `{name}`")))
    }

    pub fn vector(&self, name: &str) -> Result<&[f64]> {
        self.vectors
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
            .ok_or_else(|| Error::Checkpoint(format!("missing vector `{name}`")))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut line = |k: &str, v: &str| {
            out.push_str(k);
            out.push('=');
            out.push_str(v);
            out.push('\n');
        };
        line("format", CHECKPOINT_FORMAT);
        for (k, v) in &self.meta {
            line(k, v);
        }
        let names: Vec<&str> = self.networks.iter().map(|(n, _)| n.as_str()).collect();
        line("networks", &names.join(","));
        for (name, net) in &self.networks {
            let sizes: Vec<String> = net.layer_sizes().iter().map(|s| s.to_string()).collect();
            let norms: Vec<String> = net.layer_norm_flags().iter().map(|f| f.to_string()).collect();
            line(&format!("net.{name}.layer_sizes"), &sizes.join(","));
            line(&format!("net.{name}.activation"), net.activation().name());
            line(&format!("net.{name}.layer_norm"), &norms.join(","));
        }
        let names: Vec<&str> = self.vectors.iter().map(|(n, _)| n.as_str()).collect();
        line("vectors", &names.join(","));
        for (name, v) in &self.vectors {
            line(&format!("vec.{name}.len"), &v.len().to_string());
        }
        out.push('\n');
        let params = self
            .networks
            .iter()
            .flat_map(|(_, n)| n.params().iter())
            .chain(self.vectors.iter().flat_map(|(_, v)| v.iter()));
        for p in params {
            out.push_str(&format_float(*p));
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let bad = |msg: String| Error::Checkpoint(msg);
        let (header, body) = text
            .split_once("\n\n")
            .ok_or_else(|| bad("no blank line after the header".into()))?;
        let mut pairs = Vec::new();
        for (i, l) in header.lines().enumerate() {
            let (k, v) = l
                .split_once('=')
                .ok_or_else(|| bad(format!("header line {} is not key=value", i + 1)))?;
            pairs.push((k.to_string(), v.to_string()));
        }
        let take = |key: &str| -> Result<String> {
            pairs
                .iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| v.clone())
                .ok_or_else(|| bad(format!("missing header key `{key}`")))
        };
        let format = take("format")?;
        if format != CHECKPOINT_FORMAT {
            return Err(bad(format!("unsupported format {format:?}")));
        }
        let list = |v: String| -> Vec<String> {
            v.split(',').filter(|s| !s.is_empty()).map(str::to_string).collect()
        };
        let net_names = list(take("networks")?);
        let vec_names = list(take("vectors")?);

        let mut values = body.lines().enumerate().map(|(i, l)| {
            l.trim()
                .parse::<f64>()
                .map_err(|_| bad(format!("parameter line {} is not a number: {l:?}", i + 1)))
        });
        let mut read = |n: usize, what: &str| -> Result<Vec<f64>> {
            let mut out = Vec::with_capacity(n);
            for _ in 0..n {
                out.push(values.next().ok_or_else(|| bad(format!("too few parameters for {what}")))??);
            }
            Ok(out)
        };

        let mut cp = Checkpoint::new();
        let mut structural = vec!["format".to_string(), "networks".to_string(), "vectors".to_string()];
        for name in &net_names {
            let sizes_key = format!("net.{name}.layer_sizes");
            let act_key = format!("net.{name}.activation");
            let norm_key = format!("net.{name}.layer_norm");
            let sizes: Vec<usize> = list(take(&sizes_key)?)
                .iter()
                .map(|s| s.parse().map_err(|_| bad(format!("bad layer size {s:?} for `{name}`"))))
                .collect::<Result<_>>()?;
            let activation: Activation = take(&act_key)?
                .parse()
                .map_err(|_| bad(format!("bad activation for `{name}`")))?;
            let norms: Vec<bool> = list(take(&norm_key)?)
                .iter()
                .map(|s| s.parse().map_err(|_| bad(format!("bad layer_norm flag {s:?} for `{name}`"))))
                .collect::<Result<_>>()?;
            if norms.len() + 2 != sizes.len() {
                return Err(bad(format!("layer_norm flags do not match layers for `{name}`")));
            }
            let params = read(parameter_count(&sizes, &norms), name)?;
            let net = Mlp::from_params(&sizes, activation, &norms, params)
                .map_err(|e| bad(format!("network `{name}`: {e}")))?;
            cp.add_network(name, net);
            structural.extend([sizes_key, act_key, norm_key]);
        }
        for name in &vec_names {
            let len_key = format!("vec.{name}.len");
            let len: usize = take(&len_key)?
                .parse()
                .map_err(|_| bad(format!("bad length for vector `{name}`")))?;
            let v = read(len, name)?;
            cp.add_vector(name, v);
            structural.push(len_key);
        }
        if values.next().is_some() {
            return Err(bad("trailing parameters after the last section".into()));
        }
        for (k, v) in pairs {
            if !structural.contains(&k) {
                cp.meta.push((k, v));
            }
        }
        Ok(cp)
    }
}
