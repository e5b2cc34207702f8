use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::snn::{Dataset, LabeledSample, SpikeTrain};

/// Rate-coded synthetic classification task.
///
/// Features are split into `num_classes` contiguous blocks. A sample of
/// class `c` fires each feature of block `c` with probability `p_on` and
/// every other feature with probability `p_off`, independently per
/// timestep. Each bit is then flipped with probability `noise`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticTaskSpec {
    pub num_classes: usize,
    pub features: usize,
    pub timesteps: usize,
    pub samples_per_class: usize,
    pub p_on: f64,
    pub p_off: f64,
    pub noise: f64,
    pub seed: u64,
}

impl Default for SyntheticTaskSpec {
    fn default() -> Self {
        SyntheticTaskSpec {
            num_classes: 4,
            features: 64,
            timesteps: 20,
            samples_per_class: 100,
            p_on: 0.5,
            p_off: 0.1,
            noise: 0.02,
            seed: 0,
        }
    }
}

impl SyntheticTaskSpec {
    pub fn validate(&self) -> Result<()> {
        if self.num_classes < 2 {
            return Err(Error::Validation(format!("need at least 2 classes, got {}", self.num_classes)));
        }
        if self.features < self.num_classes {
            return Err(Error::Validation(format!(
                "features ({}) must be >= num_classes ({})",
                self.features, self.num_classes
            )));
        }
        if self.timesteps == 0 || self.samples_per_class == 0 {
            return Err(Error::Validation("timesteps and samples_per_class must be >= 1".into()));
        }
        for (name, p) in [("p_on", self.p_on), ("p_off", self.p_off), ("noise", self.noise)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Validation(format!("{name} must be in [0, 1], got {p}")));
            }
        }
        Ok(())
    }

    /// Feature range `[start, end)` of class `c`'s block. Leftover features
    /// go to the first blocks.
    pub fn block(&self, c: usize) -> std::ops::Range<usize> {
        let base = self.features / self.num_classes;
        let extra = self.features % self.num_classes;
        let start = c * base + c.min(extra);
        start..start + base + usize::from(c < extra)
    }

    /// Firing probability of feature `f` for class `c` before noise.
    pub fn template(&self, c: usize, f: usize) -> f64 {
        if self.block(c).contains(&f) {
            self.p_on
        } else {
            self.p_off
        }
    }

    /// Firing probability after noise.
    pub fn effective_rate(&self, c: usize, f: usize) -> f64 {
        let p = self.template(c, f);
        p * (1.0 - self.noise) + (1.0 - p) * self.noise
    }
}

/// Draws the dataset. Samples are interleaved by class (0, 1, .., C-1, 0, ..).
pub fn generate_synthetic(spec: &SyntheticTaskSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (t_len, f_len) = (spec.timesteps, spec.features);
    let mut samples = Vec::with_capacity(spec.num_classes * spec.samples_per_class);
    for _ in 0..spec.samples_per_class {
        for c in 0..spec.num_classes {
            let mut bits = Vec::with_capacity(t_len * f_len);
            for _ in 0..t_len {
                for f in 0..f_len {
                    let fire = rng.gen_bool(spec.template(c, f));
                    let flip = rng.gen_bool(spec.noise);
                    bits.push(u8::from(fire ^ flip));
                }
            }
            samples.push(LabeledSample { input: SpikeTrain::new(t_len, f_len, bits)?, label: c });
        }
    }
    Dataset::new(t_len, f_len, spec.num_classes, samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::encode_dataset;

    #[test]
    fn noiseless_blocks_are_separable() {
        let spec = SyntheticTaskSpec { p_on: 1.0, p_off: 0.0, noise: 0.0, samples_per_class: 3, features: 10, ..Default::default() };
        let d = generate_synthetic(&spec).unwrap();
        for s in d.samples() {
            let per_block: Vec<usize> = (0..4)
                .map(|c| spec.block(c).map(|f| (0..spec.timesteps).filter(|&t| s.input.get(t, f)).count()).sum())
                .collect();
            let expected = spec.block(s.label).len() * spec.timesteps;
            for (c, &n) in per_block.iter().enumerate() {
                assert_eq!(n, if c == s.label { expected } else { 0 });
            }
        }
    }

    #[test]
    fn blocks_cover_features() {
        let spec = SyntheticTaskSpec { features: 10, ..Default::default() };
        let ranges: Vec<_> = (0..4).map(|c| spec.block(c)).collect();
        assert_eq!(ranges, vec![0..3, 3..6, 6..8, 8..10]);
    }

    #[test]
    fn same_seed_same_bytes() {
        let spec = SyntheticTaskSpec { samples_per_class: 5, ..Default::default() };
        let a = encode_dataset(&generate_synthetic(&spec).unwrap()).unwrap();
        let b = encode_dataset(&generate_synthetic(&spec).unwrap()).unwrap();
        assert_eq!(a, b);
        let other = SyntheticTaskSpec { seed: 1, ..spec };
        assert_ne!(a, encode_dataset(&generate_synthetic(&other).unwrap()).unwrap());
    }

    #[test]
    fn firing_rate_within_three_sigma() {
        let spec = SyntheticTaskSpec { samples_per_class: 50, ..Default::default() };
        let d = generate_synthetic(&spec).unwrap();
        for c in 0..spec.num_classes {
            for (range, f0) in [(spec.block(c), spec.block(c).start), (spec.block((c + 1) % 4), spec.block((c + 1) % 4).start)] {
                let p = spec.effective_rate(c, f0);
                let mut fired = 0usize;
                let mut trials = 0usize;
                for s in d.samples().iter().filter(|s| s.label == c) {
                    for t in 0..spec.timesteps {
                        for f in range.clone() {
                            fired += usize::from(s.input.get(t, f));
                            trials += 1;
                        }
                    }
                }
                let sigma = (p * (1.0 - p) / trials as f64).sqrt();
                let rate = fired as f64 / trials as f64;
                assert!((rate - p).abs() <= 3.0 * sigma, "class {c}: rate {rate} vs {p} (sigma {sigma})");
            }
        }
    }

    #[test]
    fn invalid_specs() {
        assert!(generate_synthetic(&SyntheticTaskSpec { num_classes: 1, ..Default::default() }).is_err());
        assert!(generate_synthetic(&SyntheticTaskSpec { noise: 1.5, ..Default::default() }).is_err());
    }
}
