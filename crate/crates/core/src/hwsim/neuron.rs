use crate::error::Result;
use crate::snn::{FixedFormat, NeuronParams};

/// Digital LIF neuron with a saturating signed membrane register.
///
/// Register widths follow a [`FixedFormat`]: `w_m` total bits, `f_m` of
/// them fractional. Products are rounded half away from zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FixedPointLif {
    w_m: u32,
    f_m: u32,
    lambda: i64,
    v_th: i64,
    v: i64,
    spike: bool,
}

impl FixedPointLif {
    pub fn new(params: &NeuronParams, format: FixedFormat) -> Result<Self> {
        params.validate()?;
        let format = FixedFormat::new(format.total_bits, format.frac_bits)?;
        let mut n = FixedPointLif { w_m: format.total_bits, f_m: format.frac_bits, lambda: 0, v_th: 0, v: 0, spike: false };
        n.lambda = n.to_register(params.lambda);
        n.v_th = n.to_register(params.v_th);
        Ok(n)
    }

    fn max(&self) -> i64 {
        (1i64 << (self.w_m - 1)) - 1
    }

    fn min(&self) -> i64 {
        -(1i64 << (self.w_m - 1))
    }

    fn sat(&self, x: i128) -> i64 {
        x.clamp(self.min() as i128, self.max() as i128) as i64
    }

    /// Rounds a real value into the register format, saturating.
    pub fn to_register(&self, x: f64) -> i64 {
        let scaled = (x * f64::from(self.f_m).exp2()).round();
        if scaled.is_nan() {
            0
        } else {
            self.sat(scaled as i128)
        }
    }

    pub fn to_real(&self, raw: i64) -> f64 {
        raw as f64 / f64::from(self.f_m).exp2()
    }

    /// Membrane current of an integer partial sum scaled by the layer's
    /// quantization step.
    pub fn scale_input(&self, sum: i64, delta: f64) -> i64 {
        self.to_register(sum as f64 * delta)
    }

    fn fixmul(&self, a: i64, b: i64) -> i64 {
        let p = a as i128 * b as i128;
        let half = if self.f_m == 0 { 0 } else { 1i128 << (self.f_m - 1) };
        let q = (p.abs() + half) >> self.f_m;
        self.sat(if p < 0 { -q } else { q })
    }

    /// One timestep. The leak path is zeroed by the reset multiplexer when
    /// the neuron fired on the previous step.
    pub fn step(&mut self, i_ext: i64) -> bool {
        let leak = if self.spike { 0 } else { self.fixmul(self.lambda, self.v) };
        self.v = self.sat(leak as i128 + i_ext as i128);
        self.spike = self.v >= self.v_th;
        self.spike
    }

    /// Sums two membrane currents with saturation.
    pub fn add_inputs(&self, a: i64, b: i64) -> i64 {
        self.sat(a as i128 + b as i128)
    }

    pub fn membrane(&self) -> i64 {
        self.v
    }

    pub fn spiked(&self) -> bool {
        self.spike
    }

    pub fn set_membrane(&mut self, raw: i64) {
        self.v = self.sat(raw as i128);
    }

    pub fn reset(&mut self) {
        self.v = 0;
        self.spike = false;
    }
}

/// Free-function form of [`FixedPointLif::step`], returning `(V', spike)`.
pub fn lif_fixed_step(neuron: &mut FixedPointLif, i_ext: i64) -> (i64, bool) {
    let s = neuron.step(i_ext);
    (neuron.membrane(), s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::snn::{lif_step, FixedNeuron};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fmt() -> FixedFormat {
        FixedFormat::default()
    }

    #[test]
    fn zero_in_zero_out() {
        let mut n = FixedPointLif::new(&NeuronParams::default(), fmt()).unwrap();
        assert_eq!(lif_fixed_step(&mut n, 0), (0, false));
    }

    #[test]
    fn exact_half_leak() {
        let mut n = FixedPointLif::new(&NeuronParams::new(0.5, 4.0).unwrap(), fmt()).unwrap();
        n.set_membrane(n.to_register(2.0));
        let (v, s) = lif_fixed_step(&mut n, 0);
        assert_eq!(v, n.to_register(1.0));
        assert!(!s);
    }

    #[test]
    fn saturates_at_extremes() {
        let mut n = FixedPointLif::new(&NeuronParams::new(0.9, 1000.0).unwrap(), fmt()).unwrap();
        n.step(i64::MAX);
        assert_eq!(n.membrane(), 32767);
        n.reset();
        n.step(i64::MIN);
        assert_eq!(n.membrane(), -32768);
        n.step(i64::MIN);
        assert_eq!(n.membrane(), -32768);
    }

    #[test]
    fn reset_after_spike() {
        let mut n = FixedPointLif::new(&NeuronParams::new(0.9, 1.0).unwrap(), fmt()).unwrap();
        assert!(n.step(n.to_register(1.5)));
        // previous spike gates the leak: only the new input remains
        n.step(n.to_register(0.25));
        assert_eq!(n.membrane(), n.to_register(0.25));
    }

    #[test]
    fn tracks_float_reference_until_first_spike() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let params = NeuronParams::new(rng.gen_range(0.0..0.99), rng.gen_range(0.5..4.0)).unwrap();
            let mut hw = FixedPointLif::new(&params, fmt()).unwrap();
            let mut v = vec![0.0];
            let mut o = vec![0u8];
            // lambda rounded as the register holds it; each product adds at
            // most half an LSB of error, so the bound grows linearly.
            let tol = 2f64.powi(-(fmt().frac_bits as i32) + 1);
            let lam = hw.to_real(hw.to_register(params.lambda));
            let params_q = NeuronParams::new(lam, params.v_th).unwrap();
            for step in 0..50 {
                let raw_in = rng.gen_range(-64..=96);
                let i = hw.to_real(raw_in);
                let (nv, no) = lif_step(&v, &[i], &o, &params_q).unwrap();
                hw.step(raw_in);
                assert!((hw.to_real(hw.membrane()) - nv[0]).abs() <= tol * (step + 1) as f64, "{} vs {}", hw.to_real(hw.membrane()), nv[0]);
                if no[0] == 1 || hw.spiked() {
                    break;
                }
                v = nv;
                o = no;
            }
        }
    }

    #[test]
    fn agrees_with_software_fixed_neuron() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..100 {
            let params = NeuronParams::new(rng.gen_range(0.0..0.99), rng.gen_range(0.1..3.0)).unwrap();
            let sw = FixedNeuron::from_params(&params, fmt());
            let mut hw = FixedPointLif::new(&params, fmt()).unwrap();
            let (mut v, mut s) = (0i64, 0u8);
            for _ in 0..100 {
                let i = rng.gen_range(-2000..2000);
                sw.step(&mut v, i, &mut s);
                hw.step(i);
                assert_eq!((hw.membrane(), hw.spiked()), (v, s == 1));
            }
        }
    }
}
