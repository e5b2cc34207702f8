use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genetic::SignBitVector;
use crate::snn::{flip_msb, QuantizedNetwork};

/// Sparse XOR key over the sign bits of one layer: the flat row-major
/// indices of the weights whose MSB is (or must be) flipped.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SecretKey {
    layer: usize,
    n_bit: u32,
    genome_length: usize,
    positions: Vec<u32>,
}

impl SecretKey {
    /// Validates that positions are strictly increasing and inside the layer.
    pub fn new(layer: usize, n_bit: u32, genome_length: usize, positions: Vec<u32>) -> Result<Self> {
        for (i, w) in positions.windows(2).enumerate() {
            if w[0] == w[1] {
                return Err(Error::Validation(format!("duplicate key position {} at index {}", w[1], i + 1)));
            }
            if w[0] > w[1] {
                return Err(Error::Validation(format!(
                    "key positions not ascending at index {}: {} after {}",
                    i + 1,
                    w[1],
                    w[0]
                )));
            }
        }
        if let Some((i, &p)) = positions.iter().enumerate().find(|(_, &p)| p as usize >= genome_length) {
            return Err(Error::Validation(format!(
                "key position {p} at index {i} exceeds genome length {genome_length}"
            )));
        }
        Ok(SecretKey { layer, n_bit, genome_length, positions })
    }

    pub fn empty(layer: usize, n_bit: u32, genome_length: usize) -> Self {
        SecretKey { layer, n_bit, genome_length, positions: Vec::new() }
    }

    /// Key of a candidate sign vector: `best XOR raw`.
    pub fn from_genomes(layer: usize, n_bit: u32, best: &SignBitVector, raw: &SignBitVector) -> Result<Self> {
        if best.len() != raw.len() {
            return Err(Error::Dimension(format!("genome lengths differ: {} vs {}", best.len(), raw.len())));
        }
        Ok(SecretKey { layer, n_bit, genome_length: raw.len(), positions: best.differing_positions(raw) })
    }

    /// Builds a key from arbitrary positions, sorting them first.
    pub fn from_unsorted(layer: usize, n_bit: u32, genome_length: usize, mut positions: Vec<u32>) -> Result<Self> {
        positions.sort_unstable();
        Self::new(layer, n_bit, genome_length, positions)
    }

    pub fn layer(&self) -> usize {
        self.layer
    }

    pub fn n_bit(&self) -> u32 {
        self.n_bit
    }

    pub fn genome_length(&self) -> usize {
        self.genome_length
    }

    pub fn positions(&self) -> &[u32] {
        &self.positions
    }

    /// Hamming weight of the key.
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Key restricted to the given subset of its own positions.
    pub fn subset(&self, positions: Vec<u32>) -> Result<Self> {
        Self::from_unsorted(self.layer, self.n_bit, self.genome_length, positions)
    }
}

/// XORs the key into the sign bits of its layer. Encryption and
/// decryption are the same operation.
pub fn apply_key(net: &QuantizedNetwork, key: &SecretKey) -> Result<QuantizedNetwork> {
    let layer = net.layer(key.layer)?;
    let expected = layer.weights.values.len();
    if key.genome_length != expected {
        return Err(Error::KeyLength { layer: key.layer, key: key.genome_length, expected });
    }
    if key.n_bit != net.n_bit() {
        return Err(Error::Validation(format!(
            "key is for {}-bit weights, network stores {}-bit",
            key.n_bit,
            net.n_bit()
        )));
    }
    let mut out = net.clone();
    let n_bit = net.n_bit();
    let values = out.weights_mut(key.layer).as_mut_slice();
    for &p in &key.positions {
        let v = &mut values[p as usize];
        *v = flip_msb(*v, n_bit);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::snn::{LayerKind, NeuronParams, QuantizedLayer, QuantizedMatrix};
    use crate::tensor::Matrix;

    fn net(values: Vec<i32>) -> QuantizedNetwork {
        let n = values.len();
        let layer = QuantizedLayer {
            kind: LayerKind::FullyConnected,
            weights: QuantizedMatrix { values: Matrix::from_vec(1, n, values).unwrap(), delta: 0.1 },
            recurrent_weights: None,
            neuron: NeuronParams::default(),
        };
        QuantizedNetwork::new(8, vec![layer], 1).unwrap()
    }

    #[test]
    fn flips_the_msb_of_hit_weights() {
        let n = net(vec![1, 5, -7]);
        let key = SecretKey::new(0, 8, 3, vec![0]).unwrap();
        let enc = apply_key(&n, &key).unwrap();
        assert_eq!(enc.layers()[0].weights.values.as_slice(), &[-127, 5, -7]);
        assert_eq!(apply_key(&enc, &key).unwrap(), n);
    }

    #[test]
    fn empty_key_is_identity() {
        let n = net(vec![1, 5, -7]);
        assert_eq!(apply_key(&n, &SecretKey::empty(0, 8, 3)).unwrap(), n);
    }

    #[test]
    fn wrong_length_is_rejected() {
        let n = net(vec![1, 5, -7]);
        let key = SecretKey::new(0, 8, 4, vec![3]).unwrap();
        assert!(matches!(apply_key(&n, &key), Err(Error::KeyLength { .. })));
    }

    #[test]
    fn duplicate_positions_name_the_offending_index() {
        let err = SecretKey::new(0, 8, 10, vec![1, 4, 4, 7]).unwrap_err();
        assert!(err.to_string().contains("index 2"), "{err}");
        assert!(SecretKey::new(0, 8, 10, vec![3, 2]).is_err());
        assert!(SecretKey::new(0, 8, 10, vec![10]).is_err());
    }
}
