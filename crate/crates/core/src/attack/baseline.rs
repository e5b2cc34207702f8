use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genetic::rng::{stream, Op};
use crate::genetic::{KeyedEvaluator, SecretKey};
use crate::snn::train::loss_and_gradients;
use crate::snn::{evaluate_accuracy, flip_bit, FloatNetwork, LabeledSample, QuantizedNetwork, SpikeFunction};

/// Which bits a random baseline may flip.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "scope", content = "layer")]
pub enum BitScope {
    /// Sign bits of one layer's feed-forward matrix.
    SignBitsOfLayer(usize),
    /// Every bit of every matrix in the model.
    AllBitsOfModel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub trial: usize,
    pub accuracy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomBaselineReport {
    pub scope: BitScope,
    pub bit_budget: usize,
    pub baseline_accuracy: f64,
    pub trials: Vec<TrialRow>,
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Encrypts by flipping `bit_budget` uniformly chosen bits of `scope`, once
/// per trial, and records the resulting accuracy. Trial `i` draws from its
/// own stream, so results do not depend on thread scheduling.
pub fn random_bit_baseline(
    net: &QuantizedNetwork,
    d_eval: &[LabeledSample],
    bit_budget: usize,
    scope: BitScope,
    trials: usize,
    seed: u64,
) -> Result<RandomBaselineReport> {
    if trials == 0 {
        return Err(Error::Argument("need at least one trial".into()));
    }
    let baseline_accuracy = evaluate_accuracy(net, d_eval)?;
    let accuracies: Vec<f64> = match scope {
        BitScope::SignBitsOfLayer(layer) => {
            let eval = KeyedEvaluator::new(net, layer, d_eval)?;
            let available = eval.raw().len();
            check_budget(bit_budget, available)?;
            (0..trials)
                .into_par_iter()
                .map(|t| {
                    let mut rng = stream(seed, 0, t as u32, Op::Baseline);
                    let mut pos: Vec<u32> = sample(&mut rng, available, bit_budget).into_iter().map(|p| p as u32).collect();
                    pos.sort_unstable();
                    eval.accuracy_with_positions(&pos)
                })
                .collect()
        }
        BitScope::AllBitsOfModel => {
            let available = usize::try_from(net.total_bits())
                .map_err(|_| Error::Argument("model too large for bit indexing".into()))?;
            check_budget(bit_budget, available)?;
            (0..trials)
                .into_par_iter()
                .map(|t| {
                    let mut rng = stream(seed, 0, t as u32, Op::Baseline);
                    let bits: Vec<usize> = sample(&mut rng, available, bit_budget).into_vec();
                    evaluate_accuracy(&flip_model_bits(net, &bits), d_eval)
                })
                .collect::<Result<_>>()?
        }
    };
    let trials: Vec<TrialRow> =
        accuracies.iter().enumerate().map(|(trial, &accuracy)| TrialRow { trial, accuracy }).collect();
    Ok(RandomBaselineReport {
        scope,
        bit_budget,
        baseline_accuracy,
        min: accuracies.iter().copied().fold(f64::INFINITY, f64::min),
        median: median(&accuracies),
        max: accuracies.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        trials,
    })
}

fn check_budget(budget: usize, available: usize) -> Result<()> {
    if budget > available {
        return Err(Error::Argument(format!("bit budget {budget} exceeds the {available} bits in scope")));
    }
    Ok(())
}

/// Flips model-wide bit indices. Bit `b` of the model is bit `b % n_bit` of
/// weight `b / n_bit`, with weights numbered layer by layer, feed-forward
/// matrix first, then the recurrent one.
pub fn flip_model_bits(net: &QuantizedNetwork, bits: &[usize]) -> QuantizedNetwork {
    let n_bit = net.n_bit() as usize;
    let mut out = net.clone();
    let mut offsets = Vec::new();
    let mut acc = 0usize;
    for (li, l) in net.layers().iter().enumerate() {
        offsets.push((acc, li, false));
        acc += l.weights.values.len();
        if let Some(r) = &l.recurrent_weights {
            offsets.push((acc, li, true));
            acc += r.values.len();
        }
    }
    for &b in bits {
        let (w, bit) = (b / n_bit, (b % n_bit) as u32);
        let &(start, li, rec) = offsets.iter().rev().find(|(s, _, _)| *s <= w).expect("offset table starts at 0");
        let m = if rec { out.recurrent_mut(li).expect("recurrent matrix present") } else { out.weights_mut(li) };
        let v = &mut m.as_mut_slice()[w - start];
        *v = flip_bit(*v, bit, n_bit as u32);
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradientBaseline {
    pub key: SecretKey,
    /// Selected positions in rank order (largest |gradient| first).
    pub ranking: Vec<u32>,
    /// True when every gradient of the layer was zero, so the ranking is
    /// just index order.
    pub degenerate: bool,
}

/// First-order baseline: ranks the target layer's weights by the magnitude
/// of the surrogate-gradient of the loss on `d_enc` (ties broken by lower
/// index) and keys the top `bit_budget` sign bits.
pub fn gradient_baseline(
    net: &FloatNetwork,
    d_enc: &[LabeledSample],
    layer: usize,
    bit_budget: usize,
    n_bit: u32,
    window: f64,
) -> Result<GradientBaseline> {
    let n_layers = net.layers().len();
    let target = net.layers().get(layer).ok_or(Error::LayerOutOfRange { index: layer, len: n_layers })?;
    let len = target.weights.len();
    check_budget(bit_budget, len)?;
    let (_, grads) = loss_and_gradients(net, d_enc, window, SpikeFunction::Heaviside)?;
    let g = grads[layer].weights.as_slice();
    let degenerate = g.iter().all(|&x| x == 0.0);
    let mut order: Vec<u32> = (0..len as u32).collect();
    order.sort_by(|&a, &b| g[b as usize].abs().total_cmp(&g[a as usize].abs()).then(a.cmp(&b)));
    order.truncate(bit_budget);
    let key = SecretKey::from_unsorted(layer, n_bit, len, order.clone())?;
    Ok(GradientBaseline { key, ranking: order, degenerate })
}
