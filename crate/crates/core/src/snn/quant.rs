use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::snn::network::{validate_layers, LayerShape};
use crate::snn::{FloatLayer, FloatNetwork, LayerKind, NeuronParams};
use crate::tensor::Matrix;

/// Widths accepted by [`quantize`].
pub const MIN_BITS: u32 = 2;
pub const MAX_BITS: u32 = 16;

/// Integer weight matrix with a single real scale: `w ≈ values * delta`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantizedMatrix {
    pub values: Matrix<i32>,
    pub delta: f64,
}

impl QuantizedMatrix {
    pub fn dequantize(&self) -> Matrix<f64> {
        self.values.map(|&q| q as f64 * self.delta)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuantizedLayer {
    pub kind: LayerKind,
    pub weights: QuantizedMatrix,
    pub recurrent_weights: Option<QuantizedMatrix>,
    pub neuron: NeuronParams,
}

impl QuantizedLayer {
    pub fn n_in(&self) -> usize {
        self.weights.values.cols()
    }

    pub fn n_out(&self) -> usize {
        self.weights.values.rows()
    }
}

/// Network whose every weight is an `n_bit` two's-complement integer.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantizedNetwork {
    n_bit: u32,
    layers: Vec<QuantizedLayer>,
    num_classes: usize,
}

impl QuantizedNetwork {
    pub fn new(n_bit: u32, layers: Vec<QuantizedLayer>, num_classes: usize) -> Result<Self> {
        if !(MIN_BITS..=MAX_BITS).contains(&n_bit) {
            return Err(Error::Validation(format!("n_bit must be in {MIN_BITS}..={MAX_BITS}, got {n_bit}")));
        }
        validate_layers(
            layers.iter().map(|l| LayerShape {
                kind: l.kind,
                n_in: l.n_in(),
                n_out: l.n_out(),
                recurrent: l.recurrent_weights.as_ref().map(|m| (m.values.rows(), m.values.cols())),
                neuron: l.neuron,
            }),
            num_classes,
        )?;
        let (lo, hi) = int_range(n_bit);
        for (li, l) in layers.iter().enumerate() {
            for m in std::iter::once(&l.weights).chain(l.recurrent_weights.as_ref()) {
                if !(m.delta > 0.0) || !m.delta.is_finite() {
                    return Err(Error::Validation(format!("layer {li} has non-positive scale {}", m.delta)));
                }
                if let Some(pos) = m.values.as_slice().iter().position(|&q| q < lo || q > hi) {
                    return Err(Error::Validation(format!(
                        "layer {li} weight {pos} = {} outside the {n_bit}-bit range [{lo}, {hi}]",
                        m.values.as_slice()[pos]
                    )));
                }
            }
        }
        Ok(QuantizedNetwork { n_bit, layers, num_classes })
    }

    pub fn n_bit(&self) -> u32 {
        self.n_bit
    }

    pub fn layers(&self) -> &[QuantizedLayer] {
        &self.layers
    }

    pub fn layer(&self, index: usize) -> Result<&QuantizedLayer> {
        self.layers.get(index).ok_or(Error::LayerOutOfRange { index, len: self.layers.len() })
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn n_inputs(&self) -> usize {
        self.layers[0].n_in()
    }

    /// Mutable access to one layer's feed-forward integers. Callers must keep
    /// values inside the `n_bit` range; [`flip_bit`] does.
    pub(crate) fn weights_mut(&mut self, layer: usize) -> &mut Matrix<i32> {
        &mut self.layers[layer].weights.values
    }

    pub(crate) fn recurrent_mut(&mut self, layer: usize) -> Option<&mut Matrix<i32>> {
        self.layers[layer].recurrent_weights.as_mut().map(|m| &mut m.values)
    }

    pub fn dequantize(&self) -> FloatNetwork {
        let layers = self
            .layers
            .iter()
            .map(|l| FloatLayer {
                kind: l.kind,
                weights: l.weights.dequantize(),
                recurrent_weights: l.recurrent_weights.as_ref().map(QuantizedMatrix::dequantize),
                neuron: l.neuron,
            })
            .collect();
        FloatNetwork::new(layers, self.num_classes).expect("dequantized network keeps a valid shape")
    }

    /// Total number of stored weight bits across every matrix.
    pub fn total_bits(&self) -> u64 {
        self.layers
            .iter()
            .map(|l| {
                let rec = l.recurrent_weights.as_ref().map_or(0, |m| m.values.len());
                (l.weights.values.len() + rec) as u64 * self.n_bit as u64
            })
            .sum()
    }
}

/// Smallest and largest value of an `n_bit` two's-complement integer.
pub fn int_range(n_bit: u32) -> (i32, i32) {
    let half = 1i32 << (n_bit - 1);
    (-half, half - 1)
}

/// Flips bit `bit` (0 = LSB, `n_bit - 1` = MSB) of `value` in its `n_bit`
/// two's-complement encoding.
#[inline]
pub fn flip_bit(value: i32, bit: u32, n_bit: u32) -> i32 {
    debug_assert!(bit < n_bit);
    let mask = (1i64 << n_bit) - 1;
    let raw = (value as i64 & mask) ^ (1i64 << bit);
    let signed = if raw >> (n_bit - 1) == 1 { raw - (1i64 << n_bit) } else { raw };
    signed as i32
}

/// Flips the sign (most significant) bit. The value moves by `2^(n_bit-1)`.
#[inline]
pub fn flip_msb(value: i32, n_bit: u32) -> i32 {
    flip_bit(value, n_bit - 1, n_bit)
}

/// Symmetric per-matrix quantization:
/// `delta = max|w| / (2^(n_bit-1) - 1)`, `q = clamp(round(w / delta))`,
/// rounding half away from zero.
pub fn quantize(net: &FloatNetwork, n_bit: u32) -> Result<QuantizedNetwork> {
    if !(MIN_BITS..=MAX_BITS).contains(&n_bit) {
        return Err(Error::Argument(format!("n_bit must be in {MIN_BITS}..={MAX_BITS}, got {n_bit}")));
    }
    let layers = net
        .layers()
        .iter()
        .enumerate()
        .map(|(i, l)| {
            Ok(QuantizedLayer {
                kind: l.kind,
                weights: quantize_matrix(&l.weights, n_bit).ok_or(Error::DegenerateScale { layer: i })?,
                recurrent_weights: match &l.recurrent_weights {
                    Some(r) => Some(quantize_matrix(r, n_bit).ok_or(Error::DegenerateScale { layer: i })?),
                    None => None,
                },
                neuron: l.neuron,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    QuantizedNetwork::new(n_bit, layers, net.num_classes())
}

/// `None` when every weight is zero (or non-finite), since the scale is undefined.
pub fn quantize_matrix(m: &Matrix<f64>, n_bit: u32) -> Option<QuantizedMatrix> {
    let max_abs = m.as_slice().iter().fold(0.0f64, |acc, w| acc.max(w.abs()));
    if !(max_abs > 0.0) || !max_abs.is_finite() {
        return None;
    }
    let (lo, hi) = int_range(n_bit);
    let delta = max_abs / hi as f64;
    let values = m.map(|&w| ((w / delta).round() as i64).clamp(lo as i64, hi as i64) as i32);
    Some(QuantizedMatrix { values, delta })
}
