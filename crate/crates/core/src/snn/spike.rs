use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary spike raster of shape `timesteps × features`, stored row-major
/// (all features of step 0, then step 1, ...).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpikeTrain {
    timesteps: usize,
    features: usize,
    bits: Vec<u8>,
}

impl SpikeTrain {
    pub fn new(timesteps: usize, features: usize, bits: Vec<u8>) -> Result<Self> {
        if timesteps == 0 || features == 0 {
            return Err(Error::Dimension(format!(
                "spike train needs T >= 1 and F >= 1, got T={timesteps} F={features}"
            )));
        }
        if bits.len() != timesteps * features {
            return Err(Error::Dimension(format!(
                "spike train {timesteps}x{features} needs {} entries, got {}",
                timesteps * features,
                bits.len()
            )));
        }
        if let Some(pos) = bits.iter().position(|&b| b > 1) {
            return Err(Error::Validation(format!("spike value {} at index {pos} is not 0/1", bits[pos])));
        }
        Ok(SpikeTrain { timesteps, features, bits })
    }

    pub fn zeros(timesteps: usize, features: usize) -> Result<Self> {
        Self::new(timesteps, features, vec![0; timesteps * features])
    }

    #[inline]
    pub fn timesteps(&self) -> usize {
        self.timesteps
    }

    #[inline]
    pub fn features(&self) -> usize {
        self.features
    }

    #[inline]
    pub fn get(&self, t: usize, f: usize) -> bool {
        self.bits[t * self.features + f] == 1
    }

    pub fn set(&mut self, t: usize, f: usize, spike: bool) {
        self.bits[t * self.features + f] = spike as u8;
    }

    /// Spikes of one timestep.
    #[inline]
    pub fn step(&self, t: usize) -> &[u8] {
        &self.bits[t * self.features..(t + 1) * self.features]
    }

    pub fn as_bits(&self) -> &[u8] {
        &self.bits
    }

    /// Indices of the features that fire at each timestep.
    pub fn active_per_step(&self) -> Vec<Vec<usize>> {
        (0..self.timesteps)
            .map(|t| {
                self.step(t)
                    .iter()
                    .enumerate()
                    .filter_map(|(f, &b)| (b == 1).then_some(f))
                    .collect()
            })
            .collect()
    }

    pub fn spike_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }
}

/// One `(input, label)` pair.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledSample {
    pub input: SpikeTrain,
    pub label: usize,
}

/// A collection of equally-shaped labelled spike trains.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dataset {
    timesteps: usize,
    features: usize,
    num_classes: usize,
    samples: Vec<LabeledSample>,
}

impl Dataset {
    pub fn new(
        timesteps: usize,
        features: usize,
        num_classes: usize,
        samples: Vec<LabeledSample>,
    ) -> Result<Self> {
        if timesteps == 0 || features == 0 {
            return Err(Error::Dimension(format!("dataset needs T, F >= 1, got T={timesteps} F={features}")));
        }
        if num_classes == 0 {
            return Err(Error::Validation("dataset must declare at least one class".into()));
        }
        for (i, s) in samples.iter().enumerate() {
            if s.input.timesteps() != timesteps || s.input.features() != features {
                return Err(Error::Dimension(format!(
                    "sample {i} is {}x{}, dataset is {timesteps}x{features}",
                    s.input.timesteps(),
                    s.input.features()
                )));
            }
            if s.label >= num_classes {
                return Err(Error::Validation(format!(
                    "sample {i} has label {} but dataset declares {num_classes} classes",
                    s.label
                )));
            }
        }
        Ok(Dataset { timesteps, features, num_classes, samples })
    }

    pub fn timesteps(&self) -> usize {
        self.timesteps
    }

    pub fn features(&self) -> usize {
        self.features
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn samples(&self) -> &[LabeledSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// New dataset holding the samples at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            timesteps: self.timesteps,
            features: self.features,
            num_classes: self.num_classes,
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
        }
    }
}
