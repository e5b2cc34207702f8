use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genetic::{KeyedEvaluator, SecretKey};
use crate::snn::{LabeledSample, QuantizedNetwork};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecoveryMode {
    /// Every size-k subset of the key.
    Exhaustive,
    /// Grow one subset a bit at a time, always adding the best next bit.
    Greedy,
}

/// One point of the recovery curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryPoint {
    pub k: usize,
    /// Best accuracy over all subsets tried with at most `k` bits.
    pub best_accuracy: f64,
    /// Key positions decrypted by the subset achieving `best_accuracy`.
    pub subset: Vec<u32>,
    /// Best accuracy among subsets of exactly `k` bits.
    pub exact_k_accuracy: f64,
    pub subsets_evaluated: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartialRecoveryCurve {
    pub mode: RecoveryMode,
    pub key_len: usize,
    pub points: Vec<RecoveryPoint>,
    /// First `k` that was skipped because the evaluation budget ran out.
    pub truncated_at: Option<usize>,
}

impl PartialRecoveryCurve {
    /// Rows for CSV export; subsets are `;`-separated positions.
    pub fn csv_rows(&self) -> Vec<RecoveryCsvRow> {
        self.points
            .iter()
            .map(|p| RecoveryCsvRow {
                k: p.k,
                best_accuracy: p.best_accuracy,
                subset: p.subset.iter().map(u32::to_string).collect::<Vec<_>>().join(";"),
                exact_k_accuracy: p.exact_k_accuracy,
                subsets_evaluated: p.subsets_evaluated,
                mode: self.mode,
                truncated: false,
            })
            .chain(self.truncated_at.map(|k| RecoveryCsvRow {
                k,
                best_accuracy: f64::NAN,
                subset: String::new(),
                exact_k_accuracy: f64::NAN,
                subsets_evaluated: 0,
                mode: self.mode,
                truncated: true,
            }))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryCsvRow {
    pub k: usize,
    pub best_accuracy: f64,
    pub subset: String,
    pub exact_k_accuracy: f64,
    pub subsets_evaluated: u64,
    pub mode: RecoveryMode,
    pub truncated: bool,
}

/// Lexicographic k-combinations of `0..n`.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + n - k) else { return out };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn n_choose_k(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    (0..k).fold(1u128, |c, i| c.saturating_mul((n - i) as u128) / (i as u128 + 1))
}

/// Best of `(accuracy, candidate)` with ties going to the earliest candidate.
fn best_of(scored: Vec<(f64, Vec<u32>)>) -> (f64, Vec<u32>) {
    scored.into_iter().reduce(|a, b| if b.0 > a.0 { b } else { a }).expect("at least one candidate")
}

/// Accuracy of `encrypted` after decrypting growing subsets of `key`.
///
/// An attacker who has learned `k` of the key bits (but not which ones are
/// the important ones) is modelled by the best subset of size `k`.
/// Exhaustive mode stops before any `k` whose subsets would push the total
/// evaluation count past `max_evaluations`.
pub fn partial_key_recovery(
    encrypted: &QuantizedNetwork,
    key: &SecretKey,
    d_eval: &[LabeledSample],
    k_max: usize,
    mode: RecoveryMode,
    max_evaluations: u64,
) -> Result<PartialRecoveryCurve> {
    if k_max > key.len() {
        return Err(Error::Argument(format!("k_max = {k_max} exceeds key length {}", key.len())));
    }
    let eval = KeyedEvaluator::new(encrypted, key.layer(), d_eval)?;
    if eval.raw().len() != key.genome_length() {
        return Err(Error::KeyLength { layer: key.layer(), key: key.genome_length(), expected: eval.raw().len() });
    }
    let positions = key.positions();
    let mut points = Vec::with_capacity(k_max + 1);
    let mut truncated_at = None;
    let mut spent = 0u64;
    let mut cumulative = (f64::NEG_INFINITY, Vec::new());
    let mut greedy_chosen: Vec<usize> = Vec::new();

    for k in 0..=k_max {
        let candidates: Vec<Vec<usize>> = match mode {
            RecoveryMode::Exhaustive => {
                let count = n_choose_k(positions.len(), k);
                if u128::from(spent) + count > u128::from(max_evaluations) {
                    truncated_at = Some(k);
                    break;
                }
                combinations(positions.len(), k)
            }
            RecoveryMode::Greedy if k == 0 => vec![Vec::new()],
            RecoveryMode::Greedy => (0..positions.len())
                .filter(|i| !greedy_chosen.contains(i))
                .map(|i| {
                    let mut s = greedy_chosen.clone();
                    s.push(i);
                    s
                })
                .collect(),
        };
        spent += candidates.len() as u64;
        let scored: Vec<(f64, Vec<u32>)> = candidates
            .par_iter()
            .map(|c| {
                let mut subset: Vec<u32> = c.iter().map(|&i| positions[i]).collect();
                subset.sort_unstable();
                (eval.accuracy_with_positions(&subset), subset)
            })
            .collect();
        let (acc, subset) = best_of(scored);
        if mode == RecoveryMode::Greedy && k > 0 {
            let added = subset.iter().find_map(|p| {
                positions.iter().position(|q| q == p).filter(|i| !greedy_chosen.contains(i))
            });
            greedy_chosen.push(added.expect("greedy step adds one position"));
        }
        if acc > cumulative.0 {
            cumulative = (acc, subset);
        }
        points.push(RecoveryPoint {
            k,
            best_accuracy: cumulative.0,
            subset: cumulative.1.clone(),
            exact_k_accuracy: acc,
            subsets_evaluated: spent,
        });
    }
    Ok(PartialRecoveryCurve { mode, key_len: positions.len(), points, truncated_at })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combinations_are_lexicographic() {
        assert_eq!(combinations(4, 2), vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]);
        assert_eq!(combinations(3, 0), vec![Vec::<usize>::new()]);
        assert!(combinations(2, 3).is_empty());
        for n in 0..8 {
            for k in 0..=n {
                assert_eq!(combinations(n, k).len() as u128, n_choose_k(n, k));
            }
        }
    }
}
