//! Backpropagation through time with a rectangular surrogate derivative.
//!
//! The loss is softmax cross-entropy over the output-layer spike counts.
//! The spike nonlinearity `H(V - v_th)` has derivative zero almost
//! everywhere, so the backward pass substitutes
//! `dS/dV = 1 if |V - v_th| <= window else 0`.
//!
//! [`SpikeFunction::Relaxed`] swaps the forward step function for the
//! piecewise-linear ramp `clamp(V - v_th + window, 0, 2*window)` whose exact
//! derivative *is* the rectangular window. Gradients computed in that mode
//! are true gradients of a continuous loss and can be checked against
//! finite differences.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::snn::{evaluate_accuracy, Architecture, Dataset, FloatNetwork, LabeledSample, NeuronParams};
use crate::tensor::Matrix;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpikeFunction {
    /// Binary spikes forward, rectangular surrogate backward.
    #[default]
    Heaviside,
    /// Continuous ramp forward whose derivative equals the surrogate.
    Relaxed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    /// Half-width of the rectangular surrogate around `v_th`.
    pub window: f64,
    pub batch_size: usize,
    pub init_gain: f64,
    pub neuron: NeuronParams,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 60,
            learning_rate: 0.01,
            window: 0.5,
            batch_size: 16,
            init_gain: 2.0,
            neuron: NeuronParams::default(),
            seed: 0,
        }
    }
}

/// Gradient of the loss with respect to one layer's weights.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerGradient {
    pub weights: Matrix<f64>,
    pub recurrent: Option<Matrix<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epoch_loss: Vec<f64>,
    pub train_accuracy: f64,
}

/// Per-sample record of the forward pass, kept for the backward sweep.
struct Tape {
    /// `v[t][l]`: membrane after the update at step `t`.
    v: Vec<Vec<Vec<f64>>>,
    /// `s[t][l]`: spike (or ramp) output at step `t`.
    s: Vec<Vec<Vec<f64>>>,
    input: Vec<Vec<f64>>,
    counts: Vec<f64>,
}

fn spike_out(f: SpikeFunction, v: f64, v_th: f64, window: f64) -> f64 {
    match f {
        SpikeFunction::Heaviside => (v >= v_th) as u8 as f64,
        SpikeFunction::Relaxed => (v - v_th + window).clamp(0.0, 2.0 * window),
    }
}

#[inline]
fn surrogate(v: f64, v_th: f64, window: f64) -> f64 {
    if (v - v_th).abs() <= window {
        1.0
    } else {
        0.0
    }
}

fn record(net: &FloatNetwork, sample: &LabeledSample, f: SpikeFunction, window: f64) -> Tape {
    let layers = net.layers();
    let steps = sample.input.timesteps();
    let feat = sample.input.features();
    let mut v_prev: Vec<Vec<f64>> = layers.iter().map(|l| vec![0.0; l.n_out()]).collect();
    let mut s_prev: Vec<Vec<f64>> = v_prev.clone();
    let mut tape = Tape {
        v: Vec::with_capacity(steps),
        s: Vec::with_capacity(steps),
        input: Vec::with_capacity(steps),
        counts: vec![0.0; net.num_classes()],
    };
    for t in 0..steps {
        let x: Vec<f64> = (0..feat).map(|j| sample.input.get(t, j) as u8 as f64).collect();
        let mut v_t = Vec::with_capacity(layers.len());
        let mut s_t: Vec<Vec<f64>> = Vec::with_capacity(layers.len());
        for (li, layer) in layers.iter().enumerate() {
            let inp: &[f64] = if li == 0 { &x } else { &s_t[li - 1] };
            let mut v = vec![0.0; layer.n_out()];
            let mut s = vec![0.0; layer.n_out()];
            for i in 0..layer.n_out() {
                let mut a = dot_sparse(layer.weights.row(i), inp);
                if let Some(r) = &layer.recurrent_weights {
                    a += dot_sparse(r.row(i), &s_prev[li]);
                }
                v[i] = layer.neuron.lambda * v_prev[li][i] * (1.0 - s_prev[li][i]) + a;
                s[i] = spike_out(f, v[i], layer.neuron.v_th, window);
            }
            v_t.push(v);
            s_t.push(s);
        }
        for (c, &s) in tape.counts.iter_mut().zip(s_t.last().unwrap()) {
            *c += s;
        }
        v_prev = v_t.clone();
        s_prev = s_t.clone();
        tape.v.push(v_t);
        tape.s.push(s_t);
        tape.input.push(x);
    }
    tape
}

#[inline]
fn dot_sparse(row: &[f64], x: &[f64]) -> f64 {
    row.iter().zip(x).filter(|(_, &xv)| xv != 0.0).map(|(w, xv)| w * xv).sum()
}

fn softmax_ce(counts: &[f64], label: usize) -> (f64, Vec<f64>) {
    let m = counts.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = counts.iter().map(|c| (c - m).exp()).collect();
    let z: f64 = exps.iter().sum();
    let loss = -((exps[label] / z).ln());
    let grad = exps.iter().enumerate().map(|(k, e)| e / z - (k == label) as u8 as f64).collect();
    (loss, grad)
}

fn zero_grads(net: &FloatNetwork) -> Vec<LayerGradient> {
    net.layers()
        .iter()
        .map(|l| LayerGradient {
            weights: Matrix::filled(l.n_out(), l.n_in(), 0.0),
            recurrent: l.recurrent_weights.as_ref().map(|r| Matrix::filled(r.rows(), r.cols(), 0.0)),
        })
        .collect()
}

fn sample_gradient(
    net: &FloatNetwork,
    sample: &LabeledSample,
    f: SpikeFunction,
    window: f64,
) -> (f64, Vec<LayerGradient>) {
    let layers = net.layers();
    let n_layers = layers.len();
    let tape = record(net, sample, f, window);
    let (loss, d_counts) = softmax_ce(&tape.counts, sample.label);
    let mut grads = zero_grads(net);
    // dL/dV_l(t+1), carried backwards in time.
    let mut gv_next: Vec<Vec<f64>> = layers.iter().map(|l| vec![0.0; l.n_out()]).collect();
    let steps = tape.v.len();
    for t in (0..steps).rev() {
        let mut gv_now: Vec<Vec<f64>> = layers.iter().map(|l| vec![0.0; l.n_out()]).collect();
        for l in (0..n_layers).rev() {
            let layer = &layers[l];
            let neuron = layer.neuron;
            let v = &tape.v[t][l];
            let s = &tape.s[t][l];
            let n = layer.n_out();
            // dL/ds_l(t)
            let mut gs = vec![0.0; n];
            if l == n_layers - 1 {
                gs.copy_from_slice(&d_counts);
            } else {
                let upper = &layers[l + 1].weights;
                for (k, &g) in gv_now[l + 1].iter().enumerate() {
                    if g != 0.0 {
                        for (gi, w) in gs.iter_mut().zip(upper.row(k)) {
                            *gi += g * w;
                        }
                    }
                }
            }
            if t + 1 < steps {
                if let Some(r) = &layer.recurrent_weights {
                    for (k, &g) in gv_next[l].iter().enumerate() {
                        if g != 0.0 {
                            for (gi, w) in gs.iter_mut().zip(r.row(k)) {
                                *gi += g * w;
                            }
                        }
                    }
                }
                for i in 0..n {
                    gs[i] -= gv_next[l][i] * neuron.lambda * v[i];
                }
            }
            let gv = &mut gv_now[l];
            for i in 0..n {
                let mut g = gs[i] * surrogate(v[i], neuron.v_th, window);
                if t + 1 < steps {
                    g += gv_next[l][i] * neuron.lambda * (1.0 - s[i]);
                }
                gv[i] = g;
            }
            let inp: &[f64] = if l == 0 { &tape.input[t] } else { &tape.s[t][l - 1] };
            let gw = grads[l].weights.as_mut_slice();
            let n_in = layer.n_in();
            for (i, &g) in gv.iter().enumerate() {
                if g == 0.0 {
                    continue;
                }
                let row = &mut gw[i * n_in..(i + 1) * n_in];
                for (j, &x) in inp.iter().enumerate() {
                    if x != 0.0 {
                        row[j] += g * x;
                    }
                }
            }
            if t > 0 {
                if let Some(gr) = grads[l].recurrent.as_mut() {
                    let prev = &tape.s[t - 1][l];
                    let gr = gr.as_mut_slice();
                    for (i, &g) in gv.iter().enumerate() {
                        if g == 0.0 {
                            continue;
                        }
                        let row = &mut gr[i * n..(i + 1) * n];
                        for (j, &x) in prev.iter().enumerate() {
                            if x != 0.0 {
                                row[j] += g * x;
                            }
                        }
                    }
                }
            }
        }
        gv_next = gv_now;
    }
    (loss, grads)
}

fn check_samples(net: &FloatNetwork, samples: &[LabeledSample]) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::Argument("gradient needs at least one sample".into()));
    }
    for (i, s) in samples.iter().enumerate() {
        if s.input.features() != net.n_inputs() {
            return Err(Error::Dimension(format!(
                "sample {i} has {} features, network expects {}",
                s.input.features(),
                net.n_inputs()
            )));
        }
        if s.label >= net.num_classes() {
            return Err(Error::Validation(format!("sample {i} label {} >= {} classes", s.label, net.num_classes())));
        }
    }
    Ok(())
}

/// Mean loss over `samples` and its gradient with respect to every weight.
///
/// Per-sample gradients are computed in parallel and summed in sample
/// order, so the result does not depend on the thread count.
pub fn loss_and_gradients(
    net: &FloatNetwork,
    samples: &[LabeledSample],
    window: f64,
    f: SpikeFunction,
) -> Result<(f64, Vec<LayerGradient>)> {
    check_samples(net, samples)?;
    if !(window > 0.0) {
        return Err(Error::Argument(format!("surrogate window must be positive, got {window}")));
    }
    let parts: Vec<(f64, Vec<LayerGradient>)> =
        samples.par_iter().map(|s| sample_gradient(net, s, f, window)).collect();
    let mut total = zero_grads(net);
    let mut loss = 0.0;
    for (l, g) in parts {
        loss += l;
        for (acc, part) in total.iter_mut().zip(g) {
            add_into(acc.weights.as_mut_slice(), part.weights.as_slice());
            if let (Some(a), Some(p)) = (acc.recurrent.as_mut(), part.recurrent.as_ref()) {
                add_into(a.as_mut_slice(), p.as_slice());
            }
        }
    }
    let scale = 1.0 / samples.len() as f64;
    for g in &mut total {
        g.weights.as_mut_slice().iter_mut().for_each(|x| *x *= scale);
        if let Some(r) = g.recurrent.as_mut() {
            r.as_mut_slice().iter_mut().for_each(|x| *x *= scale);
        }
    }
    Ok((loss * scale, total))
}

/// Mean loss only (no gradient), using the chosen forward spike function.
pub fn loss(net: &FloatNetwork, samples: &[LabeledSample], window: f64, f: SpikeFunction) -> Result<f64> {
    check_samples(net, samples)?;
    let total: f64 = samples
        .iter()
        .map(|s| {
            let tape = record(net, s, f, window);
            softmax_ce(&tape.counts, s.label).0
        })
        .sum();
    Ok(total / samples.len() as f64)
}

fn add_into(acc: &mut [f64], part: &[f64]) {
    for (a, p) in acc.iter_mut().zip(part) {
        *a += p;
    }
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    step: i32,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize) -> Self {
        Adam { m: vec![0.0; n], v: vec![0.0; n], step: 0 }
    }

    fn update(&mut self, params: &mut [&mut f64], grads: &[f64], lr: f64) {
        self.step += 1;
        let c1 = 1.0 - Self::B1.powi(self.step);
        let c2 = 1.0 - Self::B2.powi(self.step);
        for (k, (p, &g)) in params.iter_mut().zip(grads).enumerate() {
            self.m[k] = Self::B1 * self.m[k] + (1.0 - Self::B1) * g;
            self.v[k] = Self::B2 * self.v[k] + (1.0 - Self::B2) * g * g;
            **p -= lr * (self.m[k] / c1) / ((self.v[k] / c2).sqrt() + Self::EPS);
        }
    }
}

fn flatten_grads(g: &[LayerGradient]) -> Vec<f64> {
    let mut out = Vec::new();
    for l in g {
        out.extend_from_slice(l.weights.as_slice());
        if let Some(r) = &l.recurrent {
            out.extend_from_slice(r.as_slice());
        }
    }
    out
}

fn param_refs(net: &mut FloatNetwork) -> Vec<&mut f64> {
    let mut out = Vec::new();
    for l in net.layers_mut() {
        out.extend(l.weights.as_mut_slice().iter_mut());
        if let Some(r) = l.recurrent_weights.as_mut() {
            out.extend(r.as_mut_slice().iter_mut());
        }
    }
    out
}

/// Trains a small fully-connected / recurrent network from a seeded random
/// initialisation with Adam over shuffled mini-batches.
///
/// With `epochs == 0` the initialisation is returned untouched.
pub fn train_toy(arch: &Architecture, train: &Dataset, cfg: &TrainConfig) -> Result<(FloatNetwork, TrainReport)> {
    if arch.inputs != train.features() {
        return Err(Error::Dimension(format!(
            "architecture expects {} inputs, dataset has {} features",
            arch.inputs,
            train.features()
        )));
    }
    if arch.layers.last().map(|l| l.0) != Some(train.num_classes()) {
        return Err(Error::Dimension(format!(
            "output layer must have {} neurons for this dataset",
            train.num_classes()
        )));
    }
    if cfg.batch_size == 0 || !(cfg.learning_rate > 0.0) {
        return Err(Error::Argument("batch_size and learning_rate must be positive".into()));
    }
    cfg.neuron.validate()?;
    let mut net = FloatNetwork::random(arch, cfg.neuron, cfg.init_gain, cfg.seed)?;
    let mut report = TrainReport { epoch_loss: Vec::with_capacity(cfg.epochs), train_accuracy: 0.0 };
    if train.is_empty() {
        return Err(Error::Argument("training set is empty".into()));
    }
    let n_params: usize = param_refs(&mut net).len();
    let mut adam = Adam::new(n_params);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5EED_7EA1);
    let mut order: Vec<usize> = (0..train.len()).collect();
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let samples: Vec<LabeledSample> = batch.iter().map(|&i| train.samples()[i].clone()).collect();
            let (l, g) = loss_and_gradients(&net, &samples, cfg.window, SpikeFunction::Heaviside)?;
            epoch_loss += l * batch.len() as f64;
            let flat = flatten_grads(&g);
            let mut params = param_refs(&mut net);
            adam.update(&mut params, &flat, cfg.learning_rate);
        }
        report.epoch_loss.push(epoch_loss / train.len() as f64);
    }
    report.train_accuracy = evaluate_accuracy(&net, train.samples())?;
    Ok((net, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::snn::{FloatLayer, SpikeTrain};

    fn tiny_net(w: [f64; 3]) -> FloatNetwork {
        let p = NeuronParams::new(0.8, 1.0).unwrap();
        let hidden = FloatLayer::fully_connected(Matrix::from_vec(1, 1, vec![w[0]]).unwrap(), p);
        let out = FloatLayer::fully_connected(Matrix::from_vec(2, 1, vec![w[1], w[2]]).unwrap(), p);
        FloatNetwork::new(vec![hidden, out], 2).unwrap()
    }

    fn probe_samples() -> Vec<LabeledSample> {
        let bits = vec![1, 0, 1, 1, 0, 1];
        vec![
            LabeledSample { input: SpikeTrain::new(6, 1, bits.clone()).unwrap(), label: 0 },
            LabeledSample { input: SpikeTrain::new(6, 1, vec![1, 1, 0, 1, 1, 1]).unwrap(), label: 1 },
        ]
    }

    // Central differences on the relaxed (continuous) forward pass.
    fn finite_difference(w: [f64; 3], k: usize, h: f64) -> f64 {
        let mut plus = w;
        let mut minus = w;
        plus[k] += h;
        minus[k] -= h;
        let s = probe_samples();
        let lp = loss(&tiny_net(plus), &s, 0.5, SpikeFunction::Relaxed).unwrap();
        let lm = loss(&tiny_net(minus), &s, 0.5, SpikeFunction::Relaxed).unwrap();
        (lp - lm) / (2.0 * h)
    }

    #[test]
    fn relaxed_gradient_matches_finite_differences() {
        let probes = [[0.9, 0.7, 0.4], [0.75, 1.2, 0.55], [1.1, 0.65, 0.95]];
        let mut checked = 0;
        for w in probes {
            let (_, g) = loss_and_gradients(&tiny_net(w), &probe_samples(), 0.5, SpikeFunction::Relaxed).unwrap();
            let analytic = [g[0].weights.as_slice()[0], g[1].weights.as_slice()[0], g[1].weights.as_slice()[1]];
            for (k, &a) in analytic.iter().enumerate() {
                let fd = finite_difference(w, k, 1e-6);
                if a == 0.0 && fd.abs() < 1e-9 {
                    continue;
                }
                let rel = (a - fd).abs() / a.abs().max(fd.abs());
                assert!(rel < 1e-4, "w={w:?} k={k} analytic={} fd={fd} rel={rel}", a);
                checked += 1;
            }
        }
        assert!(checked >= 6, "too few active probes: {checked}");
    }

    #[test]
    fn recurrent_relaxed_gradient_matches_finite_differences() {
        let p = NeuronParams::new(0.7, 1.0).unwrap();
        let build = |v: &[f64]| {
            let w = Matrix::from_vec(2, 2, v[..4].to_vec()).unwrap();
            let r = Matrix::from_vec(2, 2, v[4..8].to_vec()).unwrap();
            let o = Matrix::from_vec(2, 2, v[8..].to_vec()).unwrap();
            FloatNetwork::new(vec![FloatLayer::recurrent(w, r, p), FloatLayer::fully_connected(o, p)], 2).unwrap()
        };
        let params = [0.8, 0.3, 0.2, 0.9, 0.1, 0.35, 0.3, -0.1, 0.95, 0.2, 0.25, 0.85];
        let samples = vec![
            LabeledSample { input: SpikeTrain::new(5, 2, vec![1, 0, 1, 1, 0, 1, 1, 0, 0, 1]).unwrap(), label: 0 },
            LabeledSample { input: SpikeTrain::new(5, 2, vec![0, 1, 1, 1, 1, 0, 0, 1, 1, 1]).unwrap(), label: 1 },
        ];
        let (_, g) = loss_and_gradients(&build(&params), &samples, 0.5, SpikeFunction::Relaxed).unwrap();
        let mut analytic = Vec::new();
        analytic.extend_from_slice(g[0].weights.as_slice());
        analytic.extend_from_slice(g[0].recurrent.as_ref().unwrap().as_slice());
        analytic.extend_from_slice(g[1].weights.as_slice());
        let mut checked = 0;
        for k in 0..params.len() {
            let h = 1e-6;
            let mut plus = params;
            let mut minus = params;
            plus[k] += h;
            minus[k] -= h;
            let fd = (loss(&build(&plus), &samples, 0.5, SpikeFunction::Relaxed).unwrap()
                - loss(&build(&minus), &samples, 0.5, SpikeFunction::Relaxed).unwrap())
                / (2.0 * h);
            if analytic[k] == 0.0 && fd.abs() < 1e-9 {
                continue;
            }
            let rel = (analytic[k] - fd).abs() / analytic[k].abs().max(fd.abs());
            assert!(rel < 1e-4, "param {k}: analytic={} fd={fd}", analytic[k]);
            checked += 1;
        }
        assert!(checked >= 8, "too few active probes: {checked}");
    }

    #[test]
    fn zero_epochs_returns_initialisation() {
        let arch: Architecture = "4F-3F-2F".parse().unwrap();
        let samples = probe_samples()
            .into_iter()
            .map(|s| LabeledSample { input: SpikeTrain::new(6, 4, vec![1; 24]).unwrap(), label: s.label })
            .collect();
        let data = Dataset::new(6, 4, 2, samples).unwrap();
        let cfg = TrainConfig { epochs: 0, seed: 3, ..TrainConfig::default() };
        let (net, report) = train_toy(&arch, &data, &cfg).unwrap();
        assert_eq!(net, FloatNetwork::random(&arch, cfg.neuron, cfg.init_gain, 3).unwrap());
        assert!(report.epoch_loss.is_empty());
    }
}
