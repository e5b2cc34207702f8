use std::path::Path;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::attack::{
    complexity_bound, complexity_exact, gradient_baseline, median, partial_key_recovery, random_bit_baseline, BitScope,
    RecoveryMode,
};
use crate::error::Result;
use crate::genetic::{apply_key, fitness, recovery_mutation, stratified_indices, GaConfig, SecretKey, SignBitVector};
use crate::hwsim::{decrypt_mac_bit, published_cost_table, Accelerator, CostModel, PUBLISHED_FACTORS};
use crate::io::{read_csv, write_csv};
use crate::pipeline::{encrypt, run_encrypt_job, EncryptJob};
use crate::repro::fixture::ToyFixture;
use crate::repro::golden::check_golden;
use crate::repro::{CriterionResult, Outcome};
use crate::snn::{
    evaluate_accuracy, quantize, Architecture, FixedFormat, FloatNetwork, LayerKind, MembraneArithmetic, NeuronParams,
    QuantizedNetwork, SpikeTrain,
};

fn finish(id: u32, name: &'static str, start: Instant, limit: Duration, outcome: Outcome, detail: String) -> CriterionResult {
    let elapsed = start.elapsed();
    let (outcome, detail) = if elapsed > limit && outcome != Outcome::Fail {
        (Outcome::Fail, format!("{detail}; took {elapsed:.2?}, limit {limit:?}"))
    } else {
        (outcome, detail)
    };
    CriterionResult { id, name, outcome, detail, elapsed }
}

fn pass_if(ok: bool) -> Outcome {
    if ok {
        Outcome::Pass
    } else {
        Outcome::Fail
    }
}

fn errored(id: u32, name: &'static str, start: Instant, e: crate::Error) -> CriterionResult {
    CriterionResult { id, name, outcome: Outcome::Fail, detail: format!("error: {e}"), elapsed: start.elapsed() }
}

/// Decryptor truth table: all 8 cases and the four encrypted rows.
pub fn decryptor_equivalence() -> CriterionResult {
    let start = Instant::now();
    let mut bad = Vec::new();
    for w in [false, true] {
        for key in [false, true] {
            for x in [false, true] {
                if decrypt_mac_bit(x, w ^ key, key) != (x & w) {
                    bad.push(format!("w={w} key={key} x={x}"));
                }
            }
        }
    }
    // (weight, key, stored w_e, x) -> OUT
    let rows = [(1, 1, 0, 1, 1), (1, 1, 0, 0, 0), (0, 1, 1, 1, 0), (0, 1, 1, 0, 0)];
    for (i, &(w, k, we, x, out)) in rows.iter().enumerate() {
        if (w ^ k) != we || decrypt_mac_bit(x == 1, we == 1, k == 1) != (out == 1) {
            bad.push(format!("encrypted row {}", i + 1));
        }
    }
    let detail = if bad.is_empty() { "8/8 cases and 4/4 encrypted rows".into() } else { bad.join(", ") };
    finish(1, "decryptor equivalence", start, Duration::from_secs(1), pass_if(bad.is_empty()), detail)
}

fn random_toy_network(rng: &mut ChaCha8Rng, seed: u64) -> Result<QuantizedNetwork> {
    let inputs = rng.gen_range(1..=128);
    let depth = rng.gen_range(1..=3);
    let mut layers = Vec::with_capacity(depth);
    for d in 0..depth {
        let width = if d + 1 == depth { rng.gen_range(2..=16) } else { rng.gen_range(1..=128) };
        let kind = if d + 1 < depth && rng.gen_bool(0.3) { LayerKind::Recurrent } else { LayerKind::FullyConnected };
        layers.push((width, kind));
    }
    let arch = Architecture { inputs, layers };
    let neuron = NeuronParams::new(rng.gen_range(0.5..0.95), rng.gen_range(0.5..1.5))?;
    quantize(&FloatNetwork::random(&arch, neuron, rng.gen_range(1.0..6.0), seed)?, 8)
}

/// Hardware inference on encrypted weights plus key against software
/// inference on the plaintext network, 100 random networks.
pub fn end_to_end_bit_exactness() -> CriterionResult {
    let start = Instant::now();
    let name = "end-to-end bit-exactness";
    let fmt = FixedFormat::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0xB17E);
    let mut matched = 0;
    let mut first_bad = None;
    for trial in 0..100u64 {
        let r: Result<bool> = (|| {
            let net = random_toy_network(&mut rng, trial)?;
            let layer = rng.gen_range(0..net.layers().len());
            let len = net.layers()[layer].weights.values.len();
            let pos: Vec<u32> = (0..len as u32).filter(|_| rng.gen_bool(0.1)).collect();
            let key = SecretKey::new(layer, 8, len, pos)?;
            let encrypted = apply_key(&net, &key)?;
            let acc = Accelerator::program(&encrypted, &key, fmt)?;
            let t = rng.gen_range(1..=16);
            let p = rng.gen_range(0.05..0.6);
            let bits = (0..t * net.n_inputs()).map(|_| u8::from(rng.gen_bool(p))).collect();
            let sample = SpikeTrain::new(t, net.n_inputs(), bits)?;
            let hw = acc.infer(&sample, None)?;
            let sw = net.forward_traced(&sample, MembraneArithmetic::Fixed(fmt))?;
            Ok(hw.output == sw.output && hw.sums == sw.sums)
        })();
        match r {
            Ok(true) => matched += 1,
            Ok(false) => {
                first_bad.get_or_insert(format!("mismatch in trial {trial}"));
            }
            Err(e) => {
                first_bad.get_or_insert(format!("trial {trial}: {e}"));
            }
        }
    }
    let detail = match first_bad {
        None => format!("{matched}/100 predictions and partial sums identical"),
        Some(b) => format!("{matched}/100 identical; {b}"),
    };
    finish(2, name, start, Duration::from_secs(60), pass_if(matched == 100), detail)
}

/// Exact brute-force counts and the geometric bound.
pub fn complexity_oracle() -> CriterionResult {
    let start = Instant::now();
    let name = "complexity oracle";
    let r: Result<(bool, String)> = (|| {
        let c5 = complexity_exact(150, 5)?;
        let full = complexity_exact(150, 150)?;
        let two_150 = BigUint::from(1u32) << 150usize;
        let full_f = full.to_f64().unwrap_or(f64::INFINITY);
        let mut violations = 0usize;
        for n in 1..=200u64 {
            for k in 1..=n {
                if 2 * k > n {
                    break;
                }
                if !complexity_bound(n, k)?.dominates(&complexity_exact(n, k)?) {
                    violations += 1;
                }
            }
        }
        let b5 = complexity_bound(150, 5)?.to_f64();
        let ok = c5 == BigUint::from(612_422_930u64)
            && full == &two_150 - 1u32
            && (full_f / 1e45 * 100.0).floor() == 142.0
            && violations == 0;
        Ok((ok, format!("C(150,<=5) = {c5}, bound {b5:.4e}, full traversal {full_f:.3e}, bound violations {violations}")))
    })();
    match r {
        Ok((ok, d)) => finish(3, name, start, Duration::from_secs(10), pass_if(ok), d),
        Err(e) => errored(3, name, start, e),
    }
}

/// Energy and latency reduction factors from the published bit counts.
pub fn cost_model_reproduction() -> CriterionResult {
    let start = Instant::now();
    let name = "cost-model reproduction";
    match published_cost_table(&CostModel::default()) {
        Ok(rows) => {
            let mut ok = true;
            let mut parts = Vec::new();
            for (r, &(e_pub, t_pub)) in rows.iter().zip(&PUBLISHED_FACTORS) {
                let e_err = (r.energy_factor - e_pub).abs() / e_pub;
                let t_err = (r.latency_factor - t_pub).abs() / t_pub;
                ok &= e_err <= 0.01 && t_err <= 0.05;
                parts.push(format!("{} E x{:.1} ({:+.2}%) T x{:.1} ({:+.2}%)", r.dataset_label, r.energy_factor,
                    100.0 * (r.energy_factor - e_pub) / e_pub, r.latency_factor, 100.0 * (r.latency_factor - t_pub) / t_pub));
            }
            finish(4, name, start, Duration::from_secs(1), pass_if(ok), parts.join("; "))
        }
        Err(e) => errored(4, name, start, e),
    }
}

/// Per-seed accuracies of the GA and gradient baselines on the toy task,
/// shared by the protection and gradient-ordering checks.
#[derive(Clone, Debug)]
pub struct ToyProtection {
    pub epsilon: usize,
    pub baseline_test_accuracy: f64,
    pub ga_accuracy: Vec<f64>,
    pub ga_distance: Vec<usize>,
    pub ga_failures: Vec<String>,
    pub gradient_accuracy: Vec<f64>,
    pub random_median: f64,
}

pub const TOY_SEEDS: u64 = 5;
pub const TOY_ENC_SAMPLES: usize = 32;

/// Budget for the toy output layer: `max(30, round(0.5% of its sign bits))`.
pub fn toy_epsilon(sign_bits: usize) -> usize {
    30usize.max((sign_bits as f64 * 0.005).round() as usize)
}

pub fn toy_protection(fx: &ToyFixture, workers: usize) -> Result<ToyProtection> {
    let out = fx.output_layer();
    let len = fx.quantized.layers()[out].weights.values.len();
    let epsilon = toy_epsilon(len);
    let test = fx.test.samples();
    let baseline_test_accuracy = evaluate_accuracy(&fx.quantized, test)?;
    let mut p = ToyProtection {
        epsilon,
        baseline_test_accuracy,
        ga_accuracy: Vec::new(),
        ga_distance: Vec::new(),
        ga_failures: Vec::new(),
        gradient_accuracy: Vec::new(),
        random_median: f64::NAN,
    };
    for seed in 0..TOY_SEEDS {
        let ga = GaConfig { epsilon, target_layer: out, enc_samples: TOY_ENC_SAMPLES, seed, ..GaConfig::default() };
        match encrypt(&fx.quantized, &fx.train, &ga, workers) {
            Ok(enc) => {
                p.ga_accuracy.push(evaluate_accuracy(&enc.encrypted, test)?);
                p.ga_distance.push(enc.report.final_distance);
            }
            Err(e @ crate::Error::BudgetNotReached { .. }) => p.ga_failures.push(format!("seed {seed}: {e}")),
            Err(e) => return Err(e),
        }
        let d_enc = fx.train.subset(&stratified_indices(&fx.train, TOY_ENC_SAMPLES, seed)?);
        let window = crate::snn::TrainConfig::default().window;
        let g = gradient_baseline(&fx.float, d_enc.samples(), out, epsilon, 8, window)?;
        p.gradient_accuracy.push(evaluate_accuracy(&apply_key(&fx.quantized, &g.key)?, test)?);
    }
    p.random_median = random_bit_baseline(&fx.quantized, test, epsilon, BitScope::SignBitsOfLayer(out), 100, 0)?.median;
    Ok(p)
}

/// Training reaches 90%, GA drives accuracy to chance + 10 pp within the
/// budget, random flips at the same budget stay within 10 pp.
pub fn protection_behavior(fx: &ToyFixture, p: &ToyProtection, start: Instant) -> CriterionResult {
    let chance = 1.0 / fx.train.num_classes() as f64;
    let train_acc = fx.report.train_accuracy;
    // A seed whose search missed the budget counts as unprotected.
    let mut ga = p.ga_accuracy.clone();
    ga.extend(std::iter::repeat(p.baseline_test_accuracy).take(p.ga_failures.len()));
    let ga_median = median(&ga);
    let within_budget = p.ga_distance.iter().all(|&d| d <= p.epsilon);
    let ok = train_acc >= 0.90
        && ga_median <= chance + 0.10
        && within_budget
        && (p.random_median - p.baseline_test_accuracy).abs() <= 0.10;
    let mut detail = format!(
        "train acc {train_acc:.3}, test acc {:.3}, epsilon {}, GA median {ga_median:.3} (d = {:?}), random median {:.3}",
        p.baseline_test_accuracy, p.epsilon, p.ga_distance, p.random_median
    );
    if !p.ga_failures.is_empty() {
        detail.push_str(&format!("; {}", p.ga_failures.join("; ")));
    }
    finish(5, "protection behavior", start, Duration::from_secs(600), pass_if(ok), detail)
}

/// In-budget individuals always outrank out-of-budget ones.
pub fn fitness_dominance() -> CriterionResult {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xF17);
    let mut violations = 0;
    for _ in 0..10_000 {
        let eps = rng.gen_range(1..=200usize);
        let (l_in, d_in) = (rng.gen_range(0.0..=1.0), rng.gen_range(0..=eps));
        let (l_out, d_out) = (rng.gen_range(0.0..=1.0), rng.gen_range(eps + 1..=eps + 5000));
        if fitness(l_in, d_in, eps) >= fitness(l_out, d_out, eps) {
            violations += 1;
        }
    }
    finish(6, "fitness dominance", start, Duration::from_secs(10), pass_if(violations == 0),
        format!("10000 pairs, {violations} violations"))
}

/// Recovered-bit count at d = 1000, p_m = 0.05 over 1000 trials.
pub fn recovery_mutation_statistics() -> CriterionResult {
    let start = Instant::now();
    let name = "recovery-mutation statistics";
    let r: Result<(bool, String)> = (|| {
        let len = 2000;
        let raw = SignBitVector::new((0..len).map(|i| if i % 3 == 0 { -1 } else { 1 }).collect())?;
        let mut bits = raw.as_slice().to_vec();
        for b in bits.iter_mut().take(1000) {
            *b = -*b;
        }
        let x = SignBitVector::new(bits)?;
        let mut rng = ChaCha8Rng::seed_from_u64(0x7E57);
        let (mut total, mut wrong_flips) = (0usize, 0usize);
        for _ in 0..1000 {
            let y = recovery_mutation(&x, &raw, 0.05, &mut rng)?;
            for i in 0..len {
                let before = x.as_slice()[i];
                let after = y.as_slice()[i];
                if before == raw.as_slice()[i] && after != before {
                    wrong_flips += 1;
                }
                if before != raw.as_slice()[i] && after == raw.as_slice()[i] {
                    total += 1;
                }
            }
        }
        let mean = total as f64 / 1000.0;
        let sigma = (1000.0 * 0.05 * 0.95 / 1000.0f64).sqrt();
        let ok = (mean - 50.0).abs() <= 3.0 * sigma && wrong_flips == 0;
        Ok((ok, format!("mean recovered {mean:.3} (3 sigma of the mean = {:.3}), wrong flips {wrong_flips}", 3.0 * sigma)))
    })();
    match r {
        Ok((ok, d)) => finish(7, name, start, Duration::from_secs(30), pass_if(ok), d),
        Err(e) => errored(7, name, start, e),
    }
}

/// `apply_key` is an involution; golden files roundtrip bit-exactly.
pub fn involution_and_roundtrips() -> CriterionResult {
    let start = Instant::now();
    let name = "involution and roundtrips";
    let r: Result<(bool, String)> = (|| {
        let mut rng = ChaCha8Rng::seed_from_u64(0x1A70);
        let mut broken = 0;
        for trial in 0..1000u64 {
            let arch = Architecture {
                inputs: rng.gen_range(1..=24),
                layers: (0..rng.gen_range(1..=3))
                    .map(|_| (rng.gen_range(1..=24), if rng.gen_bool(0.3) { LayerKind::Recurrent } else { LayerKind::FullyConnected }))
                    .collect(),
            };
            let n_bit = rng.gen_range(2..=16);
            let net = quantize(&FloatNetwork::random(&arch, NeuronParams::default(), 2.0, trial)?, n_bit)?;
            let layer = rng.gen_range(0..net.layers().len());
            let len = net.layers()[layer].weights.values.len();
            let pos = (0..len as u32).filter(|_| rng.gen_bool(0.4)).collect();
            let key = SecretKey::new(layer, n_bit, len, pos)?;
            if apply_key(&apply_key(&net, &key)?, &key)? != net {
                broken += 1;
            }
        }
        let golden = check_golden()?;
        let bad: Vec<String> =
            golden.iter().filter_map(|(n, r)| r.as_ref().err().map(|e| format!("{n}: {e}"))).collect();
        let ok = broken == 0 && bad.is_empty();
        let mut d = format!("1000 involution trials, {broken} broken; {}/{} golden files exact", golden.len() - bad.len(), golden.len());
        if !bad.is_empty() {
            d.push_str(&format!(" ({})", bad.join("; ")));
        }
        Ok((ok, d))
    })();
    match r {
        Ok((ok, d)) => finish(8, name, start, Duration::from_secs(60), pass_if(ok), d),
        Err(e) => errored(8, name, start, e),
    }
}

/// Bits in the partial-recovery key.
pub const RECOVERY_KEY_BITS: usize = 10;

/// Exhaustive partial-key recovery on a 10-bit key of the toy model.
pub fn partial_key_recovery_curve(fx: &ToyFixture, out_dir: Option<&Path>, workers: usize) -> CriterionResult {
    let start = Instant::now();
    let name = "partial-key recovery";
    let r: Result<(bool, String)> = (|| {
        let out = fx.output_layer();
        let test = fx.test.samples();
        let ga = GaConfig { epsilon: RECOVERY_KEY_BITS, target_layer: out, enc_samples: TOY_ENC_SAMPLES, seed: 0, ..GaConfig::default() };
        let (key, source) = match encrypt(&fx.quantized, &fx.train, &ga, workers) {
            Ok(e) if e.key.len() == RECOVERY_KEY_BITS => (e.key, "genetic search"),
            _ => {
                let d_enc = fx.train.subset(&stratified_indices(&fx.train, TOY_ENC_SAMPLES, 0)?);
                let window = crate::snn::TrainConfig::default().window;
                (gradient_baseline(&fx.float, d_enc.samples(), out, RECOVERY_KEY_BITS, 8, window)?.key, "gradient ranking")
            }
        };
        let encrypted = apply_key(&fx.quantized, &key)?;
        let plain = evaluate_accuracy(&fx.quantized, test)?;
        let curve = partial_key_recovery(&encrypted, &key, test, RECOVERY_KEY_BITS, RecoveryMode::Exhaustive, 1 << 20)?;
        let rows = curve.csv_rows();
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf)?;
        let reread: Vec<crate::attack::RecoveryCsvRow> = read_csv(buf.as_slice())?;
        if let Some(dir) = out_dir {
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join("recovery.csv"), &buf)?;
        }
        let acc: Vec<f64> = curve.points.iter().map(|p| p.best_accuracy).collect();
        let monotone = acc.windows(2).all(|w| w[1] >= w[0]);
        let last = curve.points.last().expect("k = 0 is always present");
        let complete = curve.truncated_at.is_none()
            && last.k == RECOVERY_KEY_BITS
            && last.exact_k_accuracy == plain
            && last.best_accuracy >= plain;
        let ok = monotone && complete && reread.len() == rows.len();
        let curve_txt: Vec<String> = acc.iter().map(|a| format!("{a:.3}")).collect();
        Ok((ok, format!("key from {source}; curve [{}]; plaintext {plain:.3}", curve_txt.join(", "))))
    })();
    match r {
        Ok((ok, d)) => finish(9, name, start, Duration::from_secs(120), pass_if(ok), d),
        Err(e) => errored(9, name, start, e),
    }
}

/// GA-encrypted accuracy at most the gradient-baseline accuracy in median.
/// A miss is reported as a warning.
pub fn gradient_baseline_ordering(p: &ToyProtection, start: Instant) -> CriterionResult {
    let mut ga = p.ga_accuracy.clone();
    ga.extend(std::iter::repeat(p.baseline_test_accuracy).take(p.ga_failures.len()));
    let (g, b) = (median(&ga), median(&p.gradient_accuracy));
    let outcome = if g <= b { Outcome::Pass } else { Outcome::Warn };
    finish(10, "gradient-baseline ordering", start, Duration::from_secs(600), outcome,
        format!("GA median {g:.3}, gradient median {b:.3} at {} bits", p.epsilon))
}

/// `encrypt` jobs with the same config write byte-identical key files at
/// 1 and 4 workers.
pub fn determinism(fx: &ToyFixture, scratch: &Path) -> CriterionResult {
    let start = Instant::now();
    let name = "determinism";
    let r: Result<(bool, String)> = (|| {
        std::fs::create_dir_all(scratch)?;
        let net_path = scratch.join("toy_q8.json");
        let data_path = scratch.join("toy_train.sngx");
        crate::io::save_quantized_network(&fx.quantized, &net_path)?;
        crate::io::save_dataset(&fx.train, &data_path)?;
        let ga = GaConfig {
            epsilon: toy_epsilon(fx.quantized.layers()[fx.output_layer()].weights.values.len()),
            target_layer: fx.output_layer(),
            enc_samples: TOY_ENC_SAMPLES,
            seed: 7,
            ..GaConfig::default()
        };
        let mut keys = Vec::new();
        for (run, workers) in [1usize, 1, 4, 4].into_iter().enumerate() {
            let job = EncryptJob { network: net_path.clone(), dataset: data_path.clone(), ga: ga.clone(), max_workers: workers };
            let dir = scratch.join(format!("run{run}-w{workers}"));
            let s = run_encrypt_job(&job, &dir)?;
            keys.push(std::fs::read(s.key_path)?);
        }
        let same = keys.windows(2).all(|w| w[0] == w[1]);
        Ok((same, format!("4 runs (workers 1, 1, 4, 4), key files {}", if same { "identical" } else { "differ" })))
    })();
    match r {
        Ok((ok, d)) => finish(11, name, start, Duration::from_secs(120), pass_if(ok), d),
        Err(e) => errored(11, name, start, e),
    }
}
