use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Leak factor and firing threshold of a layer of LIF neurons.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeuronParams {
    pub lambda: f64,
    pub v_th: f64,
}

impl Default for NeuronParams {
    fn default() -> Self {
        NeuronParams { lambda: 0.9, v_th: 1.0 }
    }
}

impl NeuronParams {
    pub fn new(lambda: f64, v_th: f64) -> Result<Self> {
        let p = NeuronParams { lambda, v_th };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.lambda) {
            return Err(Error::Validation(format!("lambda must be in [0, 1), got {}", self.lambda)));
        }
        if !(self.v_th > 0.0) || !self.v_th.is_finite() {
            return Err(Error::Validation(format!("v_th must be positive, got {}", self.v_th)));
        }
        Ok(())
    }
}

/// One discrete LIF update:
///
/// ```text
/// V'[i] = lambda * V[i] * (1 - O_prev[i]) + I_ext[i]
/// O'[i] = V'[i] >= v_th
/// ```
///
/// The `(1 - O_prev)` factor is the reset: a neuron that fired on the
/// previous step starts from its input current alone.
pub fn lif_step(
    v: &[f64],
    i_ext: &[f64],
    o_prev: &[u8],
    params: &NeuronParams,
) -> Result<(Vec<f64>, Vec<u8>)> {
    if v.len() != i_ext.len() || v.len() != o_prev.len() {
        return Err(Error::Dimension(format!(
            "lif_step lengths differ: V={}, I_ext={}, O_prev={}",
            v.len(),
            i_ext.len(),
            o_prev.len()
        )));
    }
    let mut v_next = v.to_vec();
    let mut o_next = o_prev.to_vec();
    lif_step_in_place(&mut v_next, i_ext, &mut o_next, params);
    Ok((v_next, o_next))
}

/// In-place form of [`lif_step`]; `spikes` holds `O_prev` on entry and `O_next` on exit.
#[inline]
pub(crate) fn lif_step_in_place(v: &mut [f64], i_ext: &[f64], spikes: &mut [u8], params: &NeuronParams) {
    for ((vi, &ii), si) in v.iter_mut().zip(i_ext).zip(spikes.iter_mut()) {
        let leak = if *si == 1 { 0.0 } else { params.lambda * *vi };
        *vi = leak + ii;
        *si = (*vi >= params.v_th) as u8;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_state_is_a_fixed_point() {
        let (v, o) = lif_step(&[0.0], &[0.0], &[0], &NeuronParams::default()).unwrap();
        assert_eq!(v, vec![0.0]);
        assert_eq!(o, vec![0]);
    }

    #[test]
    fn integrates_and_fires() {
        let p = NeuronParams::new(0.5, 1.0).unwrap();
        let (v, o) = lif_step(&[0.8], &[0.7], &[0], &p).unwrap();
        assert!((v[0] - 1.1).abs() < 1e-12);
        assert_eq!(o, vec![1]);
    }

    #[test]
    fn previous_spike_resets_membrane() {
        let p = NeuronParams::new(0.5, 1.0).unwrap();
        let (v, o) = lif_step(&[1.1], &[0.0], &[1], &p).unwrap();
        assert_eq!(v, vec![0.0]);
        assert_eq!(o, vec![0]);
    }

    #[test]
    fn length_mismatch_is_a_dimension_error() {
        let p = NeuronParams::default();
        assert!(matches!(lif_step(&[0.0, 0.0], &[0.0], &[0, 0], &p), Err(Error::Dimension(_))));
    }

    #[test]
    fn params_are_validated() {
        assert!(NeuronParams::new(1.0, 1.0).is_err());
        assert!(NeuronParams::new(-0.1, 1.0).is_err());
        assert!(NeuronParams::new(0.5, 0.0).is_err());
        assert!(NeuronParams::new(0.0, 0.1).is_ok());
    }
}
