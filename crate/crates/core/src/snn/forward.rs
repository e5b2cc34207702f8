use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::snn::fixed::{FixedFormat, FixedNeuron};
use crate::snn::neuron::lif_step_in_place;
use crate::snn::{FloatNetwork, LabeledSample, QuantizedLayer, QuantizedNetwork, SpikeTrain};

/// Readout of one inference: output spike counts and their argmax.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForwardOutput {
    pub prediction: usize,
    pub counts: Vec<u32>,
}

/// Integer partial sums entering one layer at one timestep.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSums {
    pub feedforward: Vec<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recurrent: Option<Vec<i64>>,
}

/// Output plus every partial sum, indexed `[timestep][layer]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ForwardTrace {
    pub output: ForwardOutput,
    pub sums: Vec<Vec<LayerSums>>,
}

/// How the membrane potential of a quantized network is represented.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum MembraneArithmetic {
    /// `f64` membrane; synaptic sums scaled by `delta` once per layer and step.
    #[default]
    Float,
    /// Saturating fixed-point membrane, matching the digital neuron.
    Fixed(FixedFormat),
}

/// Anything that maps a spike train to a class.
pub trait Classifier {
    fn classify(&self, sample: &SpikeTrain) -> Result<ForwardOutput>;
}

impl Classifier for FloatNetwork {
    fn classify(&self, sample: &SpikeTrain) -> Result<ForwardOutput> {
        self.forward(sample)
    }
}

impl Classifier for QuantizedNetwork {
    fn classify(&self, sample: &SpikeTrain) -> Result<ForwardOutput> {
        self.forward(sample)
    }
}

/// Index of the largest count; ties go to the lowest index.
pub fn argmax_lowest(counts: &[u32]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

/// Fraction of samples whose prediction equals the label.
pub fn evaluate_accuracy<N: Classifier + ?Sized>(net: &N, dataset: &[LabeledSample]) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::Argument("cannot evaluate accuracy on an empty dataset".into()));
    }
    let mut correct = 0usize;
    for s in dataset {
        if net.classify(&s.input)?.prediction == s.label {
            correct += 1;
        }
    }
    Ok(correct as f64 / dataset.len() as f64)
}

fn check_input(n_inputs: usize, sample: &SpikeTrain) -> Result<()> {
    if sample.features() != n_inputs {
        return Err(Error::Dimension(format!(
            "sample has {} features but the first layer expects {n_inputs}",
            sample.features()
        )));
    }
    Ok(())
}

impl FloatNetwork {
    /// Runs the network over every timestep; within a step, spikes travel
    /// through all layers before the next step begins.
    pub fn forward(&self, sample: &SpikeTrain) -> Result<ForwardOutput> {
        check_input(self.n_inputs(), sample)?;
        let layers = self.layers();
        let mut v: Vec<Vec<f64>> = layers.iter().map(|l| vec![0.0; l.n_out()]).collect();
        let mut spikes: Vec<Vec<u8>> = layers.iter().map(|l| vec![0; l.n_out()]).collect();
        let mut counts = vec![0u32; self.num_classes()];
        let mut current = Vec::new();
        for t in 0..sample.timesteps() {
            let mut input: Vec<usize> = active(sample.step(t));
            for (li, layer) in layers.iter().enumerate() {
                current.clear();
                current.resize(layer.n_out(), 0.0);
                for (i, c) in current.iter_mut().enumerate() {
                    let row = layer.weights.row(i);
                    *c = input.iter().map(|&j| row[j]).sum();
                }
                if let Some(rec) = &layer.recurrent_weights {
                    let own = active(&spikes[li]);
                    for (i, c) in current.iter_mut().enumerate() {
                        let row = rec.row(i);
                        *c += own.iter().map(|&j| row[j]).sum::<f64>();
                    }
                }
                lif_step_in_place(&mut v[li], &current, &mut spikes[li], &layer.neuron);
                input = active(&spikes[li]);
            }
            for &k in &input {
                counts[k] += 1;
            }
        }
        Ok(ForwardOutput { prediction: argmax_lowest(&counts), counts })
    }
}

impl QuantizedNetwork {
    pub fn forward(&self, sample: &SpikeTrain) -> Result<ForwardOutput> {
        self.forward_with(sample, MembraneArithmetic::Float)
    }

    pub fn forward_with(&self, sample: &SpikeTrain, arith: MembraneArithmetic) -> Result<ForwardOutput> {
        check_input(self.n_inputs(), sample)?;
        let layers: Vec<&QuantizedLayer> = self.layers().iter().collect();
        Ok(run_quantized(&layers, &sample.active_per_step(), arith, None).output)
    }

    /// Like [`forward_with`](Self::forward_with) but also records the integer
    /// partial sums of every layer at every timestep.
    pub fn forward_traced(&self, sample: &SpikeTrain, arith: MembraneArithmetic) -> Result<ForwardTrace> {
        check_input(self.n_inputs(), sample)?;
        let layers: Vec<&QuantizedLayer> = self.layers().iter().collect();
        let mut sums = Vec::with_capacity(sample.timesteps());
        let out = run_quantized(&layers, &sample.active_per_step(), arith, Some(&mut sums)).output;
        Ok(ForwardTrace { output: out, sums })
    }

    /// Spikes emitted by layer `upto - 1` (the input spikes when `upto == 0`),
    /// as active indices per timestep. Used to cache the unchanging prefix
    /// of a network when only later layers are being modified.
    pub fn prefix_spikes(&self, upto: usize, sample: &SpikeTrain) -> Result<Vec<Vec<usize>>> {
        check_input(self.n_inputs(), sample)?;
        let steps = sample.active_per_step();
        if upto == 0 {
            return Ok(steps);
        }
        let layers: Vec<&QuantizedLayer> = self.layers()[..upto].iter().collect();
        Ok(run_quantized(&layers, &steps, MembraneArithmetic::Float, None).final_spikes)
    }
}

pub(crate) struct QuantizedRun {
    pub output: ForwardOutput,
    pub final_spikes: Vec<Vec<usize>>,
}

/// Core integer-accumulating simulator over an arbitrary contiguous stack of
/// quantized layers. `input` lists the active input indices per timestep.
pub(crate) fn run_quantized(
    layers: &[&QuantizedLayer],
    input: &[Vec<usize>],
    arith: MembraneArithmetic,
    mut trace: Option<&mut Vec<Vec<LayerSums>>>,
) -> QuantizedRun {
    let n_last = layers.last().map_or(0, |l| l.n_out());
    let mut v: Vec<Vec<f64>> = layers.iter().map(|l| vec![0.0; l.n_out()]).collect();
    let mut v_fix: Vec<Vec<i64>> = layers.iter().map(|l| vec![0; l.n_out()]).collect();
    let fixed: Vec<Option<FixedNeuron>> = layers
        .iter()
        .map(|l| match arith {
            MembraneArithmetic::Fixed(fmt) => Some(FixedNeuron::from_params(&l.neuron, fmt)),
            MembraneArithmetic::Float => None,
        })
        .collect();
    let mut spikes: Vec<Vec<u8>> = layers.iter().map(|l| vec![0; l.n_out()]).collect();
    let mut counts = vec![0u32; n_last];
    let mut final_spikes = Vec::with_capacity(input.len());
    let mut current = Vec::new();
    for step_input in input {
        let mut x: Vec<usize> = step_input.clone();
        let mut step_sums = Vec::with_capacity(layers.len());
        for (li, layer) in layers.iter().enumerate() {
            let ff = integer_sums(&layer.weights.values, &x);
            let rec = layer
                .recurrent_weights
                .as_ref()
                .map(|r| integer_sums(&r.values, &active(&spikes[li])));
            match fixed[li] {
                None => {
                    let d = layer.weights.delta;
                    current.clear();
                    current.extend(ff.iter().map(|&s| s as f64 * d));
                    if let (Some(rs), Some(rm)) = (&rec, &layer.recurrent_weights) {
                        for (c, &s) in current.iter_mut().zip(rs) {
                            *c += s as f64 * rm.delta;
                        }
                    }
                    lif_step_in_place(&mut v[li], &current, &mut spikes[li], &layer.neuron);
                }
                Some(neuron) => {
                    let fmt = neuron.format;
                    for i in 0..layer.n_out() {
                        let mut i_ext = fmt.scale_sum(ff[i], layer.weights.delta);
                        if let (Some(rs), Some(rm)) = (&rec, &layer.recurrent_weights) {
                            i_ext = fmt.add(i_ext, fmt.scale_sum(rs[i], rm.delta));
                        }
                        neuron.step(&mut v_fix[li][i], i_ext, &mut spikes[li][i]);
                    }
                }
            }
            x = active(&spikes[li]);
            if trace.is_some() {
                step_sums.push(LayerSums { feedforward: ff, recurrent: rec });
            }
        }
        for &k in &x {
            counts[k] += 1;
        }
        final_spikes.push(x);
        if let Some(t) = trace.as_deref_mut() {
            t.push(step_sums);
        }
    }
    QuantizedRun { output: ForwardOutput { prediction: argmax_lowest(&counts), counts }, final_spikes }
}

#[inline]
fn integer_sums(values: &crate::tensor::Matrix<i32>, active_inputs: &[usize]) -> Vec<i64> {
    (0..values.rows())
        .map(|i| {
            let row = values.row(i);
            active_inputs.iter().map(|&j| row[j] as i64).sum()
        })
        .collect()
}

#[inline]
pub(crate) fn active(bits: &[u8]) -> Vec<usize> {
    bits.iter().enumerate().filter_map(|(i, &b)| (b == 1).then_some(i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::snn::{quantize, FloatLayer, NeuronParams};
    use crate::tensor::Matrix;

    fn always_on(t: usize, f: usize) -> SpikeTrain {
        SpikeTrain::new(t, f, vec![1; t * f]).unwrap()
    }

    #[test]
    fn largest_weight_wins() {
        let w = Matrix::from_vec(3, 1, vec![0.3, 1.2, 0.6]).unwrap();
        let net = FloatNetwork::new(vec![FloatLayer::fully_connected(w, NeuronParams::default())], 3).unwrap();
        let out = net.forward(&always_on(10, 1)).unwrap();
        assert_eq!(out.prediction, 1);
        assert!(out.counts[1] > out.counts[2] && out.counts[2] > out.counts[0]);
    }

    #[test]
    fn silent_input_predicts_class_zero() {
        let w = Matrix::from_vec(3, 2, vec![0.5, 0.5, 2.0, 2.0, 1.0, 1.0]).unwrap();
        let net = FloatNetwork::new(vec![FloatLayer::fully_connected(w, NeuronParams::default())], 3).unwrap();
        let out = net.forward(&SpikeTrain::zeros(5, 2).unwrap()).unwrap();
        assert_eq!(out.counts, vec![0, 0, 0]);
        assert_eq!(out.prediction, 0);
        let q = quantize(&net, 8).unwrap();
        assert_eq!(q.forward(&SpikeTrain::zeros(5, 2).unwrap()).unwrap().prediction, 0);
    }

    // Two layers, T = 3, F = 2, traced by hand:
    //
    // layer 0 (2 -> 2, lambda 0.5, th 1): W0 = [[0.6, 0.5], [-0.4, 1.2]]
    // layer 1 (2 -> 2, lambda 0.5, th 1): W1 = [[1.0, -0.5], [0.3, 0.8]]
    // input:  t0 = [1, 0], t1 = [1, 1], t2 = [0, 1]
    //
    // t0: L0 I = [0.6, -0.4]  V = [0.6, -0.4]  O = [0, 0]
    //     L1 I = [0, 0]       V = [0, 0]       O = [0, 0]
    // t1: L0 I = [1.1, 0.8]   V = [0.3+1.1, -0.2+0.8] = [1.4, 0.6]  O = [1, 0]
    //     L1 I = [1.0, 0.3]   V = [1.0, 0.3]   O = [1, 0]
    // t2: L0 I = [0.5, 1.2]   V = [0 + 0.5, 0.3 + 1.2] = [0.5, 1.5]  O = [0, 1]
    //     L1 I = [-0.5, 0.8]  V = [0 - 0.5, 0.15 + 0.8] = [-0.5, 0.95]  O = [0, 0]
    //
    // counts = [1, 0] -> class 0.
    #[test]
    fn two_layer_network_matches_hand_trace() {
        let p = NeuronParams::new(0.5, 1.0).unwrap();
        let l0 = FloatLayer::fully_connected(Matrix::from_vec(2, 2, vec![0.6, 0.5, -0.4, 1.2]).unwrap(), p);
        let l1 = FloatLayer::fully_connected(Matrix::from_vec(2, 2, vec![1.0, -0.5, 0.3, 0.8]).unwrap(), p);
        let net = FloatNetwork::new(vec![l0, l1], 2).unwrap();
        let x = SpikeTrain::new(3, 2, vec![1, 0, 1, 1, 0, 1]).unwrap();
        let out = net.forward(&x).unwrap();
        assert_eq!(out.counts, vec![1, 0]);
        assert_eq!(out.prediction, 0);
    }

    // Recurrent layer, T = 3, F = 1, lambda 0.5, th 1:
    // W = [[0.6], [0.2]], R = [[0, 0.9], [0.7, 0]] (neuron 0 excited by neuron 1 and vice versa).
    // input all ones.
    // t0: I = [0.6, 0.2] (no recurrent input)  V = [0.6, 0.2]  O = [0, 0]
    // t1: I = [0.6, 0.2]  V = [0.9, 0.3]  O = [0, 0]
    // t2: I = [0.6, 0.2]  V = [1.05, 0.35] O = [1, 0]
    // counts [1, 0]; with T = 4:
    // t3: I = [0.6, 0.2 + 0.7] V = [0 + 0.6, 0.175 + 0.9] = [0.6, 1.075]  O = [0, 1]
    #[test]
    fn recurrent_layer_matches_hand_trace() {
        let p = NeuronParams::new(0.5, 1.0).unwrap();
        let w = Matrix::from_vec(2, 1, vec![0.6, 0.2]).unwrap();
        let r = Matrix::from_vec(2, 2, vec![0.0, 0.9, 0.7, 0.0]).unwrap();
        let net = FloatNetwork::new(vec![FloatLayer::recurrent(w, r, p)], 2).unwrap();
        assert_eq!(net.forward(&always_on(3, 1)).unwrap().counts, vec![1, 0]);
        assert_eq!(net.forward(&always_on(4, 1)).unwrap().counts, vec![1, 1]);
    }

    #[test]
    fn feature_mismatch_is_rejected() {
        let w = Matrix::from_vec(2, 3, vec![0.1; 6]).unwrap();
        let net = FloatNetwork::new(vec![FloatLayer::fully_connected(w, NeuronParams::default())], 2).unwrap();
        assert!(matches!(net.forward(&always_on(2, 4)), Err(Error::Dimension(_))));
    }

    #[test]
    fn accuracy_counts_correct_predictions() {
        let w = Matrix::from_vec(2, 1, vec![0.1, 2.0]).unwrap();
        let net = FloatNetwork::new(vec![FloatLayer::fully_connected(w, NeuronParams::default())], 2).unwrap();
        let s = |label| LabeledSample { input: always_on(4, 1), label };
        assert_eq!(evaluate_accuracy(&net, &[s(1)]).unwrap(), 1.0);
        assert_eq!(evaluate_accuracy(&net, &[s(0), s(0)]).unwrap(), 0.0);
        assert!(evaluate_accuracy(&net, &[]).is_err());
    }

    #[test]
    fn quantized_trace_sums_are_integer_dot_products() {
        let w = Matrix::from_vec(2, 3, vec![0.5, -1.0, 0.25, 0.75, 0.1, -0.6]).unwrap();
        let net = FloatNetwork::new(vec![FloatLayer::fully_connected(w, NeuronParams::default())], 2).unwrap();
        let q = quantize(&net, 8).unwrap();
        let x = SpikeTrain::new(2, 3, vec![1, 0, 1, 1, 1, 1]).unwrap();
        let trace = q.forward_traced(&x, MembraneArithmetic::Float).unwrap();
        let vals = &q.layers()[0].weights.values;
        let expect0: Vec<i64> = (0..2).map(|i| (*vals.get(i, 0) + *vals.get(i, 2)) as i64).collect();
        assert_eq!(trace.sums[0][0].feedforward, expect0);
        let expect1: Vec<i64> = (0..2).map(|i| vals.row(i).iter().map(|&v| v as i64).sum()).collect();
        assert_eq!(trace.sums[1][0].feedforward, expect1);
    }
}
