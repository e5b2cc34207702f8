use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use snngx::attack::{
    feasibility_report, gradient_baseline, partial_key_recovery, random_bit_baseline, BitScope, RecoveryMode,
};
use snngx::genetic::{apply_key, epsilon_from_fraction, stratified_indices};
use snngx::hwsim::{estimate_cost, published_cost_table, Accelerator, CostModel};
use snngx::io::{
    generate_synthetic, import_dataset_csv, load_config, load_dataset, load_float_network, load_key, load_network,
    load_quantized_network, save_dataset, save_float_network, save_key, save_quantized_network, write_csv,
    AnyNetwork, KeyMeta, SyntheticTaskSpec,
};
use snngx::pipeline::{run_encrypt_job, EncryptJob};
use snngx::repro::{run_all, Outcome};
use snngx::snn::{evaluate_accuracy, quantize, Architecture, FixedFormat, MembraneArithmetic, TrainConfig};
use snngx::{Error, Result};

use crate::{
    Command, ComplexityArgs, CostArgs, DecryptArgs, EncryptArgs, EvalArgs, GenDataArgs, GradientArgs, HwsimArgs,
    ModeArg, QuantizeArgs, RandomArgs, RecoverArgs, ReproArgs, TrainArgs,
};

pub fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::GenData(a) => gen_data(a),
        Command::Train(a) => train(a),
        Command::Quantize(a) => quantize_cmd(a),
        Command::Encrypt(a) => encrypt(a),
        Command::Decrypt(a) => decrypt(a),
        Command::Eval(a) => eval(a),
        Command::AttackComplexity(a) => attack_complexity(a),
        Command::AttackRecover(a) => attack_recover(a),
        Command::BaselineRandom(a) => baseline_random(a),
        Command::BaselineGradient(a) => baseline_gradient(a),
        Command::Hwsim(a) => hwsim(a),
        Command::Cost(a) => cost(a),
        Command::Repro(a) => repro(a),
    }
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Refuses to write over any of the command's inputs.
fn guard(out: &Path, inputs: &[&Path]) -> Result<()> {
    let Ok(out_c) = out.canonicalize() else { return Ok(()) };
    for i in inputs {
        if i.canonicalize().is_ok_and(|c| c == out_c) {
            return Err(Error::Validation(format!("output {} would overwrite an input file", out.display())));
        }
    }
    Ok(())
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Argument(format!("cannot build worker pool: {e}")))
}

fn write_rows<T: serde::Serialize>(rows: &[T], out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => write_csv(rows, File::create(p)?),
        None => write_csv(rows, std::io::stdout().lock()),
    }
}

fn gen_data(a: GenDataArgs) -> Result<()> {
    let inputs: Vec<&Path> = a.config.iter().chain(a.from_csv.iter()).map(PathBuf::as_path).collect();
    guard(&a.out, &inputs)?;
    let d = if let Some(csv) = &a.from_csv {
        let (t, f, c) = (a.timesteps.unwrap_or(0), a.features.unwrap_or(0), a.classes.unwrap_or(0));
        import_dataset_csv(BufReader::new(File::open(csv)?), t, f, c)?
    } else {
        let mut spec: SyntheticTaskSpec = match &a.config {
            Some(p) => load_config(p)?,
            None => SyntheticTaskSpec::default(),
        };
        set(&mut spec.num_classes, a.classes);
        set(&mut spec.features, a.features);
        set(&mut spec.timesteps, a.timesteps);
        set(&mut spec.samples_per_class, a.samples_per_class);
        set(&mut spec.p_on, a.p_on);
        set(&mut spec.p_off, a.p_off);
        set(&mut spec.noise, a.noise);
        set(&mut spec.seed, a.seed);
        generate_synthetic(&spec)?
    };
    save_dataset(&d, &a.out)?;
    println!("wrote {} samples ({} classes, T={}, F={}) to {}", d.len(), d.num_classes(), d.timesteps(), d.features(), a.out.display());
    Ok(())
}

fn train(a: TrainArgs) -> Result<()> {
    let mut inputs = vec![a.data.as_path()];
    inputs.extend(a.config.as_deref());
    guard(&a.out, &inputs)?;
    let mut cfg: TrainConfig = match &a.config {
        Some(p) => load_config(p)?,
        None => TrainConfig::default(),
    };
    set(&mut cfg.epochs, a.epochs);
    set(&mut cfg.learning_rate, a.lr);
    set(&mut cfg.batch_size, a.batch_size);
    set(&mut cfg.window, a.window);
    set(&mut cfg.init_gain, a.init_gain);
    set(&mut cfg.neuron.lambda, a.lambda);
    set(&mut cfg.neuron.v_th, a.v_th);
    set(&mut cfg.seed, a.seed);
    let arch: Architecture = a.arch.parse()?;
    let data = load_dataset(&a.data)?;
    let (net, report) = snngx::snn::train_toy(&arch, &data, &cfg)?;
    save_float_network(&net, &a.out)?;
    let last = report.epoch_loss.last().copied().unwrap_or(f64::NAN);
    println!("train accuracy {:.4}, final loss {last:.6}, network {}", report.train_accuracy, a.out.display());
    Ok(())
}

fn quantize_cmd(a: QuantizeArgs) -> Result<()> {
    guard(&a.out, &[&a.network])?;
    let q = quantize(&load_float_network(&a.network)?, a.bits)?;
    save_quantized_network(&q, &a.out)?;
    println!("quantized to {} bits ({} weight bits), network {}", a.bits, q.total_bits(), a.out.display());
    Ok(())
}

fn encrypt(a: EncryptArgs) -> Result<()> {
    let mut job = match &a.config {
        Some(p) => load_config::<EncryptJob>(p)?,
        None => {
            let (Some(network), Some(dataset)) = (a.network.clone(), a.data.clone()) else {
                return Err(Error::Validation("encrypt needs --config or both --network and --data".into()));
            };
            EncryptJob { network, dataset, ga: Default::default(), max_workers: default_workers() }
        }
    };
    set(&mut job.network, a.network);
    set(&mut job.dataset, a.data);
    set(&mut job.ga.epsilon, a.epsilon);
    if a.generations.is_some() {
        job.ga.generations = a.generations;
    }
    set(&mut job.ga.population, a.population);
    set(&mut job.ga.mutation_rate, a.mutation_rate);
    set(&mut job.ga.retain, a.retain);
    set(&mut job.ga.target_layer, a.layer);
    set(&mut job.ga.enc_samples, a.enc_samples);
    set(&mut job.ga.seed, a.seed);
    set(&mut job.max_workers, a.max_workers);
    if let Some(frac) = a.epsilon_fraction {
        if !(frac > 0.0 && frac <= 1.0) {
            return Err(Error::Validation(format!("epsilon fraction must be in (0, 1], got {frac}")));
        }
        let net = load_quantized_network(&job.network)?;
        let len = net.layer(job.ga.target_layer)?.weights.values.len();
        job.ga.epsilon = epsilon_from_fraction(len, frac);
    }
    let s = run_encrypt_job(&job, &a.out_dir)?;
    println!("final accuracy {:.4}", s.final_accuracy);
    println!("distance {}", s.distance);
    println!("genome length {}", s.genome_length);
    println!("key {}", s.key_path.display());
    Ok(())
}

fn decrypt(a: DecryptArgs) -> Result<()> {
    guard(&a.out, &[&a.network, &a.key])?;
    let net = load_quantized_network(&a.network)?;
    let (key, _) = load_key(&a.key)?;
    save_quantized_network(&apply_key(&net, &key)?, &a.out)?;
    println!("decrypted {} sign bits of layer {}, network {}", key.len(), key.layer(), a.out.display());
    Ok(())
}

fn eval(a: EvalArgs) -> Result<()> {
    let data = load_dataset(&a.data)?;
    let acc = match load_network(&a.network)? {
        AnyNetwork::Float(n) => {
            if a.key.is_some() || a.fixed {
                return Err(Error::Validation("--key and --fixed need a quantized network".into()));
            }
            evaluate_accuracy(&n, data.samples())?
        }
        AnyNetwork::Quantized(mut n) => {
            if let Some(k) = &a.key {
                n = apply_key(&n, &load_key(k)?.0)?;
            }
            if a.fixed {
                let arith = MembraneArithmetic::Fixed(FixedFormat::default());
                let mut correct = 0usize;
                for s in data.samples() {
                    correct += usize::from(n.forward_with(&s.input, arith)?.prediction == s.label);
                }
                correct as f64 / data.len().max(1) as f64
            } else {
                evaluate_accuracy(&n, data.samples())?
            }
        }
    };
    println!("accuracy {acc:.4} on {} samples", data.len());
    Ok(())
}

fn attack_complexity(a: ComplexityArgs) -> Result<()> {
    let rows = feasibility_report(a.n, a.k_max, a.rate)?;
    write_rows(&rows, a.out.as_deref())
}

fn attack_recover(a: RecoverArgs) -> Result<()> {
    let net = load_quantized_network(&a.network)?;
    let (key, _) = load_key(&a.key)?;
    let data = load_dataset(&a.data)?;
    let mode = match a.mode {
        ModeArg::Exhaustive => RecoveryMode::Exhaustive,
        ModeArg::Greedy => RecoveryMode::Greedy,
    };
    let k_max = a.k_max.unwrap_or(key.len());
    let curve = pool(a.max_workers.unwrap_or_else(default_workers))?
        .install(|| partial_key_recovery(&net, &key, data.samples(), k_max, mode, a.max_evaluations))?;
    if let Some(k) = curve.truncated_at {
        eprintln!("warning: evaluation budget exhausted, curve truncated at k = {k}");
    }
    write_rows(&curve.csv_rows(), a.out.as_deref())
}

fn baseline_random(a: RandomArgs) -> Result<()> {
    let net = load_quantized_network(&a.network)?;
    let data = load_dataset(&a.data)?;
    let scope = a.layer.map_or(BitScope::AllBitsOfModel, BitScope::SignBitsOfLayer);
    let r = pool(a.max_workers.unwrap_or_else(default_workers))?
        .install(|| random_bit_baseline(&net, data.samples(), a.budget, scope, a.trials, a.seed))?;
    eprintln!(
        "baseline {:.4}; over {} trials: min {:.4} median {:.4} max {:.4}",
        r.baseline_accuracy,
        r.trials.len(),
        r.min,
        r.median,
        r.max
    );
    write_rows(&r.trials, a.out.as_deref())
}

fn baseline_gradient(a: GradientArgs) -> Result<()> {
    guard(&a.out, &[&a.network, &a.data])?;
    let net = load_float_network(&a.network)?;
    let data = load_dataset(&a.data)?;
    let d_enc = data.subset(&stratified_indices(&data, a.enc_samples, a.seed)?);
    let g = gradient_baseline(&net, d_enc.samples(), a.layer, a.budget, a.bits, a.window)?;
    if g.degenerate {
        eprintln!("warning: all gradients of layer {} are zero; ranking falls back to index order", a.layer);
    }
    let meta = KeyMeta { epsilon: a.budget, seed: a.seed, generations_run: 0, final_accuracy: f64::NAN };
    save_key(&g.key, &KeyMeta { final_accuracy: 0.0, ..meta }, &a.out)?;
    println!("key with {} positions, {}", g.key.len(), a.out.display());
    Ok(())
}

fn hwsim(a: HwsimArgs) -> Result<()> {
    let net = load_quantized_network(&a.network)?;
    let (key, _) = load_key(&a.key)?;
    let data = load_dataset(&a.data)?;
    let fmt = FixedFormat::new(a.membrane_bits, a.frac_bits)?;
    let acc = Accelerator::program(&net, &key, fmt)?;
    let indices: Vec<usize> = match a.sample {
        Some(i) if i < data.len() => vec![i],
        Some(i) => return Err(Error::Argument(format!("sample {i} out of range ({} samples)", data.len()))),
        None => (0..data.len()).collect(),
    };
    let mut trace = a.trace.as_ref().map(File::create).transpose()?.map(std::io::BufWriter::new);
    let (mut correct, mut cycles) = (0usize, 0u64);
    for &i in &indices {
        let s = &data.samples()[i];
        let out = acc.infer(&s.input, trace.as_mut().map(|w| w as &mut dyn std::io::Write))?;
        correct += usize::from(out.output.prediction == s.label);
        cycles += out.stats.pe_cycles;
        if indices.len() == 1 {
            println!("sample {i}: prediction {} label {} counts {:?}", out.output.prediction, s.label, out.output.counts);
        }
    }
    if let Some(mut w) = trace {
        std::io::Write::flush(&mut w)?;
    }
    println!(
        "accuracy {:.4} on {} samples, {} PEs on {} tiles, {cycles} PE cycles",
        correct as f64 / indices.len().max(1) as f64,
        indices.len(),
        acc.pe_count(),
        acc.tile_count()
    );
    Ok(())
}

fn cost(a: CostArgs) -> Result<()> {
    let model: CostModel = match &a.config {
        Some(p) => load_config(p)?,
        None => CostModel::default(),
    };
    let rows = match (a.bits_random, a.bits_snngx) {
        (Some(r), Some(s)) => vec![estimate_cost(&a.label, r, s, a.decryptions, &model)?],
        _ => published_cost_table(&model)?,
    };
    write_rows(&rows, a.out.as_deref())
}

fn repro(a: ReproArgs) -> Result<()> {
    let workers = a.max_workers.unwrap_or_else(default_workers);
    let results = run_all(&a.out_dir, workers, |r| println!("{r}"));
    let failed = results.iter().filter(|r| r.outcome == Outcome::Fail).count();
    if failed > 0 {
        return Err(Error::Io(std::io::Error::other(format!("{failed} acceptance check(s) failed"))));
    }
    Ok(())
}
