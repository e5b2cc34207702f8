use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::snn::NeuronParams;
use crate::tensor::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerKind {
    FullyConnected,
    Recurrent,
}

impl LayerKind {
    fn suffix(self) -> char {
        match self {
            LayerKind::FullyConnected => 'F',
            LayerKind::Recurrent => 'R',
        }
    }
}

/// Floating-point synaptic layer followed by a population of LIF neurons.
///
/// `weights` is `n_out × n_in`; recurrent layers additionally carry an
/// `n_out × n_out` matrix driven by the layer's own spikes from the previous step.
#[derive(Clone, Debug, PartialEq)]
pub struct FloatLayer {
    pub kind: LayerKind,
    pub weights: Matrix<f64>,
    pub recurrent_weights: Option<Matrix<f64>>,
    pub neuron: NeuronParams,
}

impl FloatLayer {
    pub fn fully_connected(weights: Matrix<f64>, neuron: NeuronParams) -> Self {
        FloatLayer { kind: LayerKind::FullyConnected, weights, recurrent_weights: None, neuron }
    }

    pub fn recurrent(weights: Matrix<f64>, recurrent_weights: Matrix<f64>, neuron: NeuronParams) -> Self {
        FloatLayer { kind: LayerKind::Recurrent, weights, recurrent_weights: Some(recurrent_weights), neuron }
    }

    pub fn n_in(&self) -> usize {
        self.weights.cols()
    }

    pub fn n_out(&self) -> usize {
        self.weights.rows()
    }
}

/// Stack of layers ending in one output neuron per class.
#[derive(Clone, Debug, PartialEq)]
pub struct FloatNetwork {
    layers: Vec<FloatLayer>,
    num_classes: usize,
}

impl FloatNetwork {
    pub fn new(layers: Vec<FloatLayer>, num_classes: usize) -> Result<Self> {
        validate_layers(
            layers.iter().map(|l| LayerShape {
                kind: l.kind,
                n_in: l.n_in(),
                n_out: l.n_out(),
                recurrent: l.recurrent_weights.as_ref().map(|m| (m.rows(), m.cols())),
                neuron: l.neuron,
            }),
            num_classes,
        )?;
        Ok(FloatNetwork { layers, num_classes })
    }

    /// Uniform `±gain/sqrt(fan_in)` initialisation, deterministic in `seed`.
    pub fn random(arch: &Architecture, neuron: NeuronParams, gain: f64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::with_capacity(arch.layers.len());
        let mut n_in = arch.inputs;
        for &(n_out, kind) in &arch.layers {
            let a = gain / (n_in as f64).sqrt();
            let weights = Matrix::from_fn(n_out, n_in, |_, _| rng.gen_range(-a..a));
            let layer = match kind {
                LayerKind::FullyConnected => FloatLayer::fully_connected(weights, neuron),
                LayerKind::Recurrent => {
                    let ar = 0.5 * gain / (n_out as f64).sqrt();
                    let rec = Matrix::from_fn(n_out, n_out, |_, _| rng.gen_range(-ar..ar));
                    FloatLayer::recurrent(weights, rec, neuron)
                }
            };
            layers.push(layer);
            n_in = n_out;
        }
        let num_classes = arch.layers.last().map(|l| l.0).unwrap_or(0);
        FloatNetwork::new(layers, num_classes)
    }

    pub fn layers(&self) -> &[FloatLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [FloatLayer] {
        &mut self.layers
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn n_inputs(&self) -> usize {
        self.layers[0].n_in()
    }

    pub fn architecture(&self) -> Architecture {
        Architecture {
            inputs: self.n_inputs(),
            layers: self.layers.iter().map(|l| (l.n_out(), l.kind)).collect(),
        }
    }
}

pub(crate) struct LayerShape {
    pub kind: LayerKind,
    pub n_in: usize,
    pub n_out: usize,
    pub recurrent: Option<(usize, usize)>,
    pub neuron: NeuronParams,
}

pub(crate) fn validate_layers(shapes: impl Iterator<Item = LayerShape>, num_classes: usize) -> Result<()> {
    let mut prev_out: Option<usize> = None;
    let mut count = 0;
    for (i, s) in shapes.enumerate() {
        count += 1;
        s.neuron.validate()?;
        if let Some(p) = prev_out {
            if p != s.n_in {
                return Err(Error::Dimension(format!(
                    "layer {i} expects {} inputs but layer {} emits {p}",
                    s.n_in,
                    i - 1
                )));
            }
        }
        match (s.kind, s.recurrent) {
            (LayerKind::FullyConnected, None) => {}
            (LayerKind::FullyConnected, Some(_)) => {
                return Err(Error::Validation(format!("fully-connected layer {i} carries recurrent weights")))
            }
            (LayerKind::Recurrent, None) => {
                return Err(Error::Validation(format!("recurrent layer {i} is missing recurrent weights")))
            }
            (LayerKind::Recurrent, Some((r, c))) => {
                if r != s.n_out || c != s.n_out {
                    return Err(Error::Dimension(format!(
                        "recurrent layer {i} needs {0}x{0} recurrent weights, got {r}x{c}",
                        s.n_out
                    )));
                }
            }
        }
        prev_out = Some(s.n_out);
    }
    if count == 0 {
        return Err(Error::Validation("network has no layers".into()));
    }
    if prev_out != Some(num_classes) {
        return Err(Error::Dimension(format!(
            "final layer has {} outputs but network declares {num_classes} classes",
            prev_out.unwrap_or(0)
        )));
    }
    Ok(())
}

/// Layer widths in the `64F-128F-4F` notation: the first number is the input
/// width, each following `<n>F` or `<n>R` is a fully-connected or recurrent
/// layer with `n` neurons.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub inputs: usize,
    pub layers: Vec<(usize, LayerKind)>,
}

impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split('-').map(str::trim);
        let first = parts.next().filter(|p| !p.is_empty()).ok_or_else(|| Error::Parse("empty architecture".into()))?;
        let inputs = parse_width(first.trim_end_matches(['F', 'f']))?;
        let mut layers = Vec::new();
        for p in parts {
            let (num, kind) = match p.chars().last() {
                Some('F' | 'f') => (&p[..p.len() - 1], LayerKind::FullyConnected),
                Some('R' | 'r') => (&p[..p.len() - 1], LayerKind::Recurrent),
                _ => {
                    return Err(Error::Parse(format!(
                        "layer `{p}` must end in F (fully connected) or R (recurrent)"
                    )))
                }
            };
            layers.push((parse_width(num)?, kind));
        }
        if layers.is_empty() {
            return Err(Error::Parse(format!("architecture `{s}` has no layers")));
        }
        Ok(Architecture { inputs, layers })
    }
}

fn parse_width(s: &str) -> Result<usize> {
    match s.parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(Error::Parse(format!("`{s}` is not a positive layer width"))),
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}F", self.inputs)?;
        for (n, k) in &self.layers {
            write!(f, "-{}{}", n, k.suffix())?;
        }
        Ok(())
    }
}
