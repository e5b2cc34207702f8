use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::snn::{FloatLayer, FloatNetwork, LayerKind, NeuronParams, QuantizedLayer, QuantizedMatrix, QuantizedNetwork};
use crate::tensor::Matrix;

pub const NETWORK_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "W: Deserialize<'de>"))]
struct LayerDoc<W> {
    kind: LayerKind,
    n_in: usize,
    n_out: usize,
    weights: Vec<W>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    recurrent_weights: Option<Vec<W>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    recurrent_delta: Option<f64>,
    lambda: f64,
    v_th: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "W: Deserialize<'de>"))]
struct NetworkDoc<W> {
    version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n_bit: Option<u32>,
    num_classes: usize,
    layers: Vec<LayerDoc<W>>,
}

/// Either kind of network file.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyNetwork {
    Float(FloatNetwork),
    Quantized(QuantizedNetwork),
}

fn matrix<W>(data: Vec<W>, rows: usize, cols: usize, what: &str, li: usize) -> Result<Matrix<W>> {
    if data.len() != rows * cols {
        return Err(Error::Validation(format!(
            "layer {li}: {what} has {} entries, expected {rows}x{cols}",
            data.len()
        )));
    }
    Matrix::from_vec(rows, cols, data)
}

fn recurrent_shape<W>(l: &LayerDoc<W>, li: usize) -> Result<()> {
    match (l.kind, l.recurrent_weights.is_some()) {
        (LayerKind::Recurrent, false) => Err(Error::Validation(format!("layer {li}: recurrent layer without recurrent_weights"))),
        (LayerKind::FullyConnected, true) => {
            Err(Error::Validation(format!("layer {li}: fully_connected layer with recurrent_weights")))
        }
        _ => Ok(()),
    }
}

fn neuron<W>(l: &LayerDoc<W>) -> Result<NeuronParams> {
    NeuronParams::new(l.lambda, l.v_th)
}

pub fn float_to_json(net: &FloatNetwork) -> String {
    let doc = NetworkDoc {
        version: NETWORK_VERSION,
        n_bit: None,
        num_classes: net.num_classes(),
        layers: net
            .layers()
            .iter()
            .map(|l| LayerDoc {
                kind: l.kind,
                n_in: l.n_in(),
                n_out: l.n_out(),
                weights: l.weights.as_slice().to_vec(),
                recurrent_weights: l.recurrent_weights.as_ref().map(|m| m.as_slice().to_vec()),
                delta: None,
                recurrent_delta: None,
                lambda: l.neuron.lambda,
                v_th: l.neuron.v_th,
            })
            .collect(),
    };
    serde_json::to_string(&doc).expect("network serializes")
}

pub fn quantized_to_json(net: &QuantizedNetwork) -> String {
    let doc = NetworkDoc {
        version: NETWORK_VERSION,
        n_bit: Some(net.n_bit()),
        num_classes: net.num_classes(),
        layers: net
            .layers()
            .iter()
            .map(|l| LayerDoc {
                kind: l.kind,
                n_in: l.n_in(),
                n_out: l.n_out(),
                weights: l.weights.values.as_slice().to_vec(),
                recurrent_weights: l.recurrent_weights.as_ref().map(|m| m.values.as_slice().to_vec()),
                delta: Some(l.weights.delta),
                recurrent_delta: l.recurrent_weights.as_ref().map(|m| m.delta),
                lambda: l.neuron.lambda,
                v_th: l.neuron.v_th,
            })
            .collect(),
    };
    serde_json::to_string(&doc).expect("network serializes")
}

#[derive(Deserialize)]
struct Probe {
    version: u32,
    #[serde(default)]
    n_bit: Option<u32>,
}

fn typed<W: DeserializeOwned>(text: &str) -> Result<NetworkDoc<W>> {
    Ok(serde_json::from_str(text)?)
}

pub fn network_from_json(text: &str) -> Result<AnyNetwork> {
    let probe: Probe = serde_json::from_str(text)?;
    if probe.version != NETWORK_VERSION {
        return Err(Error::UnsupportedVersion { found: probe.version, supported: NETWORK_VERSION });
    }
    match probe.n_bit {
        None => {
            let doc = typed::<f64>(text)?;
            let mut layers = Vec::with_capacity(doc.layers.len());
            for (li, l) in doc.layers.into_iter().enumerate() {
                recurrent_shape(&l, li)?;
                if l.delta.is_some() || l.recurrent_delta.is_some() {
                    return Err(Error::Validation(format!("layer {li}: float network layer carries a scale")));
                }
                let neuron = neuron(&l)?;
                layers.push(FloatLayer {
                    kind: l.kind,
                    weights: matrix(l.weights, l.n_out, l.n_in, "weights", li)?,
                    recurrent_weights: l.recurrent_weights.map(|w| matrix(w, l.n_out, l.n_out, "recurrent_weights", li)).transpose()?,
                    neuron,
                });
            }
            Ok(AnyNetwork::Float(FloatNetwork::new(layers, doc.num_classes)?))
        }
        Some(n_bit) => {
            let doc = typed::<i32>(text)?;
            let mut layers = Vec::with_capacity(doc.layers.len());
            for (li, l) in doc.layers.into_iter().enumerate() {
                recurrent_shape(&l, li)?;
                let neuron = neuron(&l)?;
                let delta = l.delta.ok_or_else(|| Error::Validation(format!("layer {li}: missing delta")))?;
                let recurrent_weights = match l.recurrent_weights {
                    Some(w) => Some(QuantizedMatrix {
                        values: matrix(w, l.n_out, l.n_out, "recurrent_weights", li)?,
                        delta: l
                            .recurrent_delta
                            .ok_or_else(|| Error::Validation(format!("layer {li}: missing recurrent_delta")))?,
                    }),
                    None => None,
                };
                layers.push(QuantizedLayer {
                    kind: l.kind,
                    weights: QuantizedMatrix { values: matrix(l.weights, l.n_out, l.n_in, "weights", li)?, delta },
                    recurrent_weights,
                    neuron,
                });
            }
            Ok(AnyNetwork::Quantized(QuantizedNetwork::new(n_bit, layers, doc.num_classes)?))
        }
    }
}

pub fn quantized_from_json(text: &str) -> Result<QuantizedNetwork> {
    match network_from_json(text)? {
        AnyNetwork::Quantized(n) => Ok(n),
        AnyNetwork::Float(_) => Err(Error::Validation("expected a quantized network (n_bit present)".into())),
    }
}

pub fn float_from_json(text: &str) -> Result<FloatNetwork> {
    match network_from_json(text)? {
        AnyNetwork::Float(n) => Ok(n),
        AnyNetwork::Quantized(_) => Err(Error::Validation("expected a float network (no n_bit)".into())),
    }
}

pub fn save_float_network(net: &FloatNetwork, path: &Path) -> Result<()> {
    std::fs::write(path, float_to_json(net))?;
    Ok(())
}

pub fn save_quantized_network(net: &QuantizedNetwork, path: &Path) -> Result<()> {
    std::fs::write(path, quantized_to_json(net))?;
    Ok(())
}

pub fn load_network(path: &Path) -> Result<AnyNetwork> {
    network_from_json(&std::fs::read_to_string(path)?)
}

pub fn load_float_network(path: &Path) -> Result<FloatNetwork> {
    float_from_json(&std::fs::read_to_string(path)?)
}

pub fn load_quantized_network(path: &Path) -> Result<QuantizedNetwork> {
    quantized_from_json(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::snn::{quantize, Architecture};

    fn nets() -> (FloatNetwork, QuantizedNetwork) {
        let arch: Architecture = "5F-4R-3F".parse().unwrap();
        let f = FloatNetwork::random(&arch, NeuronParams::default(), 1.3, 7).unwrap();
        let q = quantize(&f, 8).unwrap();
        (f, q)
    }

    #[test]
    fn roundtrips_exactly() {
        let (f, q) = nets();
        assert_eq!(float_from_json(&float_to_json(&f)).unwrap(), f);
        assert_eq!(quantized_from_json(&quantized_to_json(&q)).unwrap(), q);
        let text = quantized_to_json(&q);
        assert_eq!(quantized_to_json(&quantized_from_json(&text).unwrap()), text);
    }

    #[test]
    fn rejections() {
        let (f, q) = nets();
        let text = float_to_json(&f).replacen("\"version\":1", "\"version\":2", 1);
        assert_eq!(network_from_json(&text).unwrap_err().code(), "E_VERSION");
        assert_eq!(quantized_from_json(&float_to_json(&f)).unwrap_err().code(), "E_VALIDATION");
        let text = quantized_to_json(&q);
        assert_eq!(network_from_json(&text[..text.len() / 2]).unwrap_err().code(), "E_TRUNCATED");
        let text = quantized_to_json(&q).replacen("\"n_in\":5", "\"n_in\":6", 1);
        assert_eq!(network_from_json(&text).unwrap_err().code(), "E_VALIDATION");
        let text = quantized_to_json(&q).replacen("\"version\":1", "\"version\":1,\"extra\":0", 1);
        assert_eq!(network_from_json(&text).unwrap_err().code(), "E_PARSE");
    }
}
