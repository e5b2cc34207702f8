use std::cmp::Ordering;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genetic::ops::{crossover, elite_count, estimate_generations, fitness, recovery_mutation};
use crate::genetic::rng::{stream, Op};
use crate::genetic::{apply_key, extract_sign_bits, SecretKey, SignBitVector};
use crate::snn::{
    evaluate_accuracy, flip_msb, run_quantized, LabeledSample, MembraneArithmetic, QuantizedLayer, QuantizedNetwork,
};

/// Search hyper-parameters. Defaults follow the published NMNIST setting
/// (epsilon 50, population 100, p_m 0.05, retain 0.6) with the number of
/// generations estimated from the budget.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaConfig {
    /// Distance budget in bits.
    pub epsilon: usize,
    /// `None` means "use [`estimate_generations`]".
    pub generations: Option<u32>,
    pub population: usize,
    pub mutation_rate: f64,
    pub retain: f64,
    pub target_layer: usize,
    pub enc_samples: usize,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            epsilon: 50,
            generations: None,
            population: 100,
            mutation_rate: 0.05,
            retain: 0.6,
            target_layer: 0,
            enc_samples: 8,
            seed: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epsilon < 1 {
            return Err(Error::Validation("epsilon must be >= 1".into()));
        }
        if !(self.retain > 0.0 && self.retain < 1.0) {
            return Err(Error::Validation(format!("retain must be in (0, 1), got {}", self.retain)));
        }
        if !(self.mutation_rate > 0.0 && self.mutation_rate < 1.0) {
            return Err(Error::Validation(format!("mutation_rate must be in (0, 1), got {}", self.mutation_rate)));
        }
        if self.population < 4 || self.population % 2 != 0 {
            return Err(Error::Validation(format!("population must be even and >= 4, got {}", self.population)));
        }
        if self.enc_samples < 1 {
            return Err(Error::Validation("enc_samples must be >= 1".into()));
        }
        if self.generations == Some(0) {
            return Err(Error::Validation("generations must be >= 1".into()));
        }
        elite_count(self.population, self.retain).map_err(|e| Error::Validation(e.to_string()))?;
        Ok(())
    }

    /// Explicit generation count, or the estimate for this genome length.
    /// A budget at or above the genome length needs no shrinking, so one
    /// generation suffices.
    pub fn resolved_generations(&self, genome_length: usize) -> Result<u32> {
        match self.generations {
            Some(g) => Ok(g),
            None if self.epsilon >= genome_length => Ok(1),
            None => estimate_generations(genome_length, self.epsilon, self.mutation_rate),
        }
    }
}

/// A candidate sign vector with its cached score.
#[derive(Clone, Debug, PartialEq)]
pub struct Individual {
    pub genome: SignBitVector,
    pub distance: usize,
    pub accuracy: f64,
    pub fitness: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: u32,
    pub best_fitness: f64,
    pub best_distance: usize,
    pub best_accuracy: f64,
    pub mean_distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub baseline_accuracy: f64,
    pub final_accuracy: f64,
    pub final_distance: usize,
    pub genome_length: usize,
    pub generations_run: u32,
    pub trace: Vec<GenerationStats>,
}

/// Result of a successful search.
#[derive(Clone, Debug)]
pub struct Encryption {
    pub encrypted: QuantizedNetwork,
    pub key: SecretKey,
    pub report: SearchReport,
}

/// Scores sign vectors of one layer against a fixed encryption set.
///
/// Layers before the target are unaffected by the key, so their output
/// spikes are computed once and reused for every candidate.
pub struct KeyedEvaluator<'a> {
    net: &'a QuantizedNetwork,
    layer: usize,
    raw: SignBitVector,
    prefix: Vec<Vec<Vec<usize>>>,
    labels: Vec<usize>,
}

impl<'a> KeyedEvaluator<'a> {
    pub fn new(net: &'a QuantizedNetwork, layer: usize, d_enc: &[LabeledSample]) -> Result<Self> {
        if d_enc.is_empty() {
            return Err(Error::Argument("encryption set is empty".into()));
        }
        let raw = extract_sign_bits(net, layer)?;
        let prefix = d_enc.iter().map(|s| net.prefix_spikes(layer, &s.input)).collect::<Result<Vec<_>>>()?;
        Ok(KeyedEvaluator { net, layer, raw, prefix, labels: d_enc.iter().map(|s| s.label).collect() })
    }

    pub fn raw(&self) -> &SignBitVector {
        &self.raw
    }

    /// Accuracy of the network with the sign bits at `positions` flipped.
    pub fn accuracy_with_positions(&self, positions: &[u32]) -> f64 {
        let n_bit = self.net.n_bit();
        let mut keyed: QuantizedLayer = self.net.layers()[self.layer].clone();
        let values = keyed.weights.values.as_mut_slice();
        for &p in positions {
            values[p as usize] = flip_msb(values[p as usize], n_bit);
        }
        let mut stack: Vec<&QuantizedLayer> = Vec::with_capacity(self.net.layers().len() - self.layer);
        stack.push(&keyed);
        stack.extend(self.net.layers()[self.layer + 1..].iter());
        let correct = self
            .prefix
            .iter()
            .zip(&self.labels)
            .filter(|(input, &label)| {
                run_quantized(&stack, input, MembraneArithmetic::Float, None).output.prediction == label
            })
            .count();
        correct as f64 / self.labels.len() as f64
    }

    pub fn accuracy(&self, genome: &SignBitVector) -> f64 {
        self.accuracy_with_positions(&genome.differing_positions(&self.raw))
    }
}

/// Accuracy on `d_enc` of the network keyed by `genome XOR raw`. This is
/// the direct (uncached) form; the search itself uses [`KeyedEvaluator`].
pub fn evaluate(
    genome: &SignBitVector,
    net: &QuantizedNetwork,
    layer: usize,
    raw: &SignBitVector,
    d_enc: &[LabeledSample],
) -> Result<f64> {
    let key = SecretKey::from_genomes(layer, net.n_bit(), genome, raw)?;
    evaluate_accuracy(&apply_key(net, &key)?, d_enc)
}

/// Initial population: every individual starts fully flipped and then gets
/// one recovery-mutation draw. Fitness is not yet computed.
pub fn init_population(raw: &SignBitVector, cfg: &GaConfig) -> Result<Vec<SignBitVector>> {
    let flipped = raw.negated();
    (0..cfg.population)
        .map(|i| recovery_mutation(&flipped, raw, cfg.mutation_rate, &mut stream(cfg.seed, 0, i as u32, Op::Init)))
        .collect()
}

fn score(genomes: Vec<SignBitVector>, eval: &KeyedEvaluator<'_>, epsilon: usize) -> Vec<Individual> {
    genomes
        .into_par_iter()
        .map(|genome| {
            let distance = genome.hamming(eval.raw());
            let accuracy = eval.accuracy(&genome);
            Individual { fitness: fitness(accuracy, distance, epsilon), genome, distance, accuracy }
        })
        .collect()
}

fn by_fitness(a: &Individual, b: &Individual) -> Ordering {
    a.fitness.partial_cmp(&b.fitness).unwrap_or(Ordering::Equal)
}

fn stats(generation: u32, sorted: &[Individual]) -> GenerationStats {
    let best = &sorted[0];
    GenerationStats {
        generation,
        best_fitness: best.fitness,
        best_distance: best.distance,
        best_accuracy: best.accuracy,
        mean_distance: sorted.iter().map(|i| i.distance as f64).sum::<f64>() / sorted.len() as f64,
    }
}

/// Runs the genetic bit search on one layer and returns the encrypted
/// network, its key and a per-generation trace.
///
/// Each generation keeps the best `round(retain * N)` individuals
/// unchanged, splits them at random into two halves, and refills the
/// population with uniform-crossover children of one parent from each
/// half, each child passed through recovery mutation. Individual
/// evaluations run on up to `workers` threads; the result is the same for
/// any thread count.
pub fn run(net: &QuantizedNetwork, d_enc: &[LabeledSample], cfg: &GaConfig, workers: usize) -> Result<Encryption> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Argument(format!("cannot build worker pool: {e}")))?;
    pool.install(|| run_inner(net, d_enc, cfg))
}

fn run_inner(net: &QuantizedNetwork, d_enc: &[LabeledSample], cfg: &GaConfig) -> Result<Encryption> {
    let eval = KeyedEvaluator::new(net, cfg.target_layer, d_enc)?;
    let raw = eval.raw().clone();
    let genome_length = raw.len();
    let generations = cfg.resolved_generations(genome_length)?;
    let n_elite = elite_count(cfg.population, cfg.retain)?;
    let baseline_accuracy = eval.accuracy_with_positions(&[]);

    let mut pop = score(init_population(&raw, cfg)?, &eval, cfg.epsilon);
    pop.sort_by(by_fitness);
    let mut trace = vec![stats(0, &pop)];

    for g in 1..=generations {
        pop.truncate(n_elite);
        let mut order: Vec<usize> = (0..n_elite).collect();
        order.shuffle(&mut stream(cfg.seed, g, 0, Op::Split));
        let (males, females) = order.split_at(n_elite / 2);

        let n_children = cfg.population - n_elite;
        let mut children = Vec::with_capacity(n_children + 1);
        let mut pair = 0usize;
        while children.len() < n_children {
            let p1 = &pop[males[pair % males.len()]].genome;
            let p2 = &pop[females[pair % females.len()]].genome;
            let (c1, c2) = crossover(p1, p2, &mut stream(cfg.seed, g, pair as u32, Op::Crossover))?;
            for (k, c) in [c1, c2].into_iter().enumerate() {
                if children.len() < n_children {
                    let idx = (2 * pair + k) as u32;
                    children.push(recovery_mutation(&c, &raw, cfg.mutation_rate, &mut stream(cfg.seed, g, idx, Op::Mutate))?);
                }
            }
            pair += 1;
        }
        pop.extend(score(children, &eval, cfg.epsilon));
        // Stable: ties keep elites ahead of children and earlier children ahead of later ones.
        pop.sort_by(by_fitness);
        trace.push(stats(g, &pop));
    }

    let best = &pop[0];
    if best.distance > cfg.epsilon {
        return Err(Error::BudgetNotReached { achieved: best.distance, epsilon: cfg.epsilon });
    }
    let key = SecretKey::from_genomes(cfg.target_layer, net.n_bit(), &best.genome, &raw)?;
    let encrypted = apply_key(net, &key)?;
    Ok(Encryption {
        encrypted,
        report: SearchReport {
            baseline_accuracy,
            final_accuracy: best.accuracy,
            final_distance: best.distance,
            genome_length,
            generations_run: generations,
            trace,
        },
        key,
    })
}
