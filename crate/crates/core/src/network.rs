//! Feed-forward ReLU controllers: evaluation, JSON loading, and interval
//! bound propagation.
//!
//! Interval bounds serve two purposes downstream: neurons whose pre-activation
//! interval does not straddle zero need no binary variable in the MILP, and
//! the interval endpoints are the big-M constants for the ones that do.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::linalg::Matrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Layer {
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

/// Feed-forward network, alternating affine maps and activations. The final
/// layer must be linear (it produces the control command).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReluNetwork {
    pub layers: Vec<Layer>,
}

/// Stability of one neuron given its pre-activation interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    /// Lower bound >= 0: the ReLU is the identity here.
    Active,
    /// Upper bound <= 0: the ReLU is constantly zero here.
    Inactive,
    /// The interval straddles zero; a binary variable is required.
    Unstable,
}

/// Per-layer pre-activation intervals and stability tags.
#[derive(Debug, Clone)]
pub struct LayerInterval {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub stability: Vec<Stability>,
    pub activation: Activation,
}

impl LayerInterval {
    /// Bounds after the activation is applied.
    pub fn post_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        match self.activation {
            Activation::Linear => (self.lower.clone(), self.upper.clone()),
            Activation::Relu => (
                self.lower.iter().map(|&l| l.max(0.0)).collect(),
                self.upper.iter().map(|&u| u.max(0.0)).collect(),
            ),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LayerBounds {
    pub layers: Vec<LayerInterval>,
}

impl LayerBounds {
    /// Number of ReLU neurons whose interval straddles zero: the binary count
    /// of the MILP encoding.
    pub fn unstable_count(&self) -> usize {
        self.layers
            .iter()
            .filter(|l| l.activation == Activation::Relu)
            .map(|l| l.stability.iter().filter(|s| **s == Stability::Unstable).count())
            .sum()
    }
}

impl ReluNetwork {
    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.weights.cols())
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.weights.rows())
    }

    /// Hidden neuron count (neurons of every non-final layer).
    pub fn hidden_neurons(&self) -> usize {
        self.layers
            .iter()
            .take(self.layers.len().saturating_sub(1))
            .map(|l| l.weights.rows())
            .sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::Schema("network needs at least one layer".into()));
        }
        for (i, layer) in self.layers.iter().enumerate() {
            if layer.bias.len() != layer.weights.rows() {
                return Err(Error::Schema(format!(
                    "layer {i}: weights have {} rows but bias has length {}",
                    layer.weights.rows(),
                    layer.bias.len()
                )));
            }
            if !layer.weights.is_finite() || layer.bias.iter().any(|v| !v.is_finite()) {
                return Err(Error::Schema(format!("layer {i}: entries must be finite")));
            }
            if layer.weights.rows() == 0 || layer.weights.cols() == 0 {
                return Err(Error::Schema(format!("layer {i}: empty weight matrix")));
            }
            if i > 0 {
                let prev = self.layers[i - 1].weights.rows();
                if layer.weights.cols() != prev {
                    return Err(Error::Schema(format!(
                        "layer {i}: expects input {} but previous layer outputs {prev}",
                        layer.weights.cols()
                    )));
                }
            }
        }
        if self.layers.last().unwrap().activation != Activation::Linear {
            return Err(Error::Schema("final layer must be linear".into()));
        }
        Ok(())
    }

    /// Standard affine + `max(0, .)` evaluation.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::Dimension(format!(
                "network expects input {}, got {}",
                self.input_dim(),
                x.len()
            )));
        }
        let mut h = x.to_vec();
        for layer in &self.layers {
            let mut z = layer.weights.matvec(&h)?;
            for (zi, b) in z.iter_mut().zip(&layer.bias) {
                *zi += b;
            }
            if layer.activation == Activation::Relu {
                for zi in z.iter_mut() {
                    *zi = zi.max(0.0);
                }
            }
            h = z;
        }
        Ok(h)
    }

    /// Interval propagation of `input_box` through every layer. The reported
    /// intervals are sound: any input in the box produces pre-activations
    /// inside them.
    pub fn interval_bounds(&self, input_lo: &[f64], input_hi: &[f64]) -> Result<LayerBounds> {
        if input_lo.len() != self.input_dim() || input_hi.len() != self.input_dim() {
            return Err(Error::Dimension("interval_bounds: box length mismatch".into()));
        }
        if input_lo
            .iter()
            .chain(input_hi)
            .any(|v| !v.is_finite())
        {
            return Err(Error::Schema("interval_bounds: box must be finite".into()));
        }
        let mut lo = input_lo.to_vec();
        let mut hi = input_hi.to_vec();
        let mut layers = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let (mut zlo, mut zhi) = layer.weights.interval_image(&lo, &hi)?;
            for (v, b) in zlo.iter_mut().zip(&layer.bias) {
                *v += b;
            }
            for (v, b) in zhi.iter_mut().zip(&layer.bias) {
                *v += b;
            }
            let stability = zlo
                .iter()
                .zip(&zhi)
                .map(|(&l, &u)| {
                    if l >= 0.0 {
                        Stability::Active
                    } else if u <= 0.0 {
                        Stability::Inactive
                    } else {
                        Stability::Unstable
                    }
                })
                .collect();
            let entry = LayerInterval {
                lower: zlo,
                upper: zhi,
                stability,
                activation: layer.activation,
            };
            let (post_lo, post_hi) = entry.post_bounds();
            lo = post_lo;
            hi = post_hi;
            layers.push(entry);
        }
        Ok(LayerBounds { layers })
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let net: ReluNetwork =
            serde_json::from_str(s).map_err(|e| Error::Parse(format!("network: {e}")))?;
        net.validate()?;
        Ok(net)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("network serializes")
    }
}

pub fn load_network(path: &Path) -> Result<ReluNetwork> {
    let text = std::fs::read_to_string(path)?;
    ReluNetwork::from_json_str(&text)
}

pub fn save_network(net: &ReluNetwork, path: &Path) -> Result<()> {
    std::fs::write(path, net.to_json_string())?;
    Ok(())
}
