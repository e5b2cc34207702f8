//! Saturating signed fixed-point arithmetic for the membrane datapath.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::snn::NeuronParams;

/// Signed two's-complement Q-format: `total_bits` wide, `frac_bits` of them fractional.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FixedFormat {
    pub total_bits: u32,
    pub frac_bits: u32,
}

impl Default for FixedFormat {
    fn default() -> Self {
        FixedFormat { total_bits: 16, frac_bits: 8 }
    }
}

impl FixedFormat {
    pub fn new(total_bits: u32, frac_bits: u32) -> Result<Self> {
        if !(2..=32).contains(&total_bits) || frac_bits >= total_bits {
            return Err(Error::Argument(format!(
                "fixed-point format needs 2 <= total_bits <= 32 and frac_bits < total_bits, got Q{total_bits}.{frac_bits}"
            )));
        }
        Ok(FixedFormat { total_bits, frac_bits })
    }

    #[inline]
    pub fn max_raw(&self) -> i64 {
        (1i64 << (self.total_bits - 1)) - 1
    }

    #[inline]
    pub fn min_raw(&self) -> i64 {
        -(1i64 << (self.total_bits - 1))
    }

    /// Value of one least-significant bit.
    pub fn resolution(&self) -> f64 {
        (self.frac_bits as f64).exp2().recip()
    }

    #[inline]
    pub fn saturate(&self, raw: i64) -> i64 {
        raw.clamp(self.min_raw(), self.max_raw())
    }

    /// Nearest representable value (ties away from zero), saturated.
    #[inline]
    pub fn from_f64(&self, x: f64) -> i64 {
        let scaled = (x * (self.frac_bits as f64).exp2()).round();
        if scaled.is_nan() {
            return 0;
        }
        // `as` saturates at the i64 bounds, so infinities clamp correctly too.
        self.saturate(scaled as i64)
    }

    #[inline]
    pub fn to_f64(&self, raw: i64) -> f64 {
        raw as f64 * self.resolution()
    }

    /// Fixed-point product, rounded half away from zero and saturated.
    #[inline]
    pub fn mul(&self, a: i64, b: i64) -> i64 {
        let p = a as i128 * b as i128;
        let half = if self.frac_bits == 0 { 0 } else { 1i128 << (self.frac_bits - 1) };
        let mag = (p.abs() + half) >> self.frac_bits;
        let q = if p < 0 { -mag } else { mag };
        self.saturate(q.clamp(i64::MIN as i128, i64::MAX as i128) as i64)
    }

    #[inline]
    pub fn add(&self, a: i64, b: i64) -> i64 {
        self.saturate(a.saturating_add(b))
    }

    /// Converts an exact integer partial sum of quantized weights into a
    /// membrane current: `sum * delta`, rounded into this format.
    #[inline]
    pub fn scale_sum(&self, sum: i64, delta: f64) -> i64 {
        self.from_f64(sum as f64 * delta)
    }
}

/// Neuron constants pre-rounded into a [`FixedFormat`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FixedNeuron {
    pub format: FixedFormat,
    pub lambda_raw: i64,
    pub v_th_raw: i64,
}

impl FixedNeuron {
    pub fn from_params(params: &NeuronParams, format: FixedFormat) -> Self {
        FixedNeuron {
            format,
            lambda_raw: format.from_f64(params.lambda),
            v_th_raw: format.from_f64(params.v_th),
        }
    }

    /// `V' = sat(lambda*V*(1 - spike) + i_ext)`, `spike' = V' >= v_th`.
    #[inline]
    pub fn step(&self, v: &mut i64, i_ext: i64, spike: &mut u8) {
        let leak = if *spike == 1 { 0 } else { self.format.mul(self.lambda_raw, *v) };
        *v = self.format.add(leak, i_ext);
        *spike = (*v >= self.v_th_raw) as u8;
    }
}
