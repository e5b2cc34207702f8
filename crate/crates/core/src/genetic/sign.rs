use crate::error::{Error, Result};
use crate::snn::QuantizedNetwork;

/// Signs of one layer's weights, flattened row-major, each entry `-1` or `+1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SignBitVector(Vec<i8>);

impl SignBitVector {
    pub fn new(bits: Vec<i8>) -> Result<Self> {
        if let Some(pos) = bits.iter().position(|&b| b != 1 && b != -1) {
            return Err(Error::Validation(format!("sign vector entry {pos} is {}, expected -1 or +1", bits[pos])));
        }
        Ok(SignBitVector(bits))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    /// Every sign flipped: the vector at maximum Hamming distance.
    pub fn negated(&self) -> Self {
        SignBitVector(self.0.iter().map(|&b| -b).collect())
    }

    pub fn hamming(&self, other: &SignBitVector) -> usize {
        self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count()
    }

    /// Positions where `self` and `other` disagree, ascending.
    pub fn differing_positions(&self, other: &SignBitVector) -> Vec<u32> {
        self.0
            .iter()
            .zip(&other.0)
            .enumerate()
            .filter_map(|(i, (a, b))| (a != b).then_some(i as u32))
            .collect()
    }

    pub(crate) fn bits_mut(&mut self) -> &mut [i8] {
        &mut self.0
    }
}

/// `-1` where the two's-complement MSB of the quantized weight is set
/// (the weight is negative), `+1` otherwise.
pub fn extract_sign_bits(net: &QuantizedNetwork, layer: usize) -> Result<SignBitVector> {
    let l = net.layer(layer)?;
    Ok(SignBitVector(l.weights.values.as_slice().iter().map(|&q| if q < 0 { -1 } else { 1 }).collect()))
}
