//! `snngx` command-line driver.
//!
//! Exit codes: 0 on success, 2 for invalid input (bad flags, configs or
//! files), 1 for runtime failures (I/O, search missed its budget, a failed
//! acceptance check).

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "snngx", version, about = "Sign-bit XOR encryption of quantized spiking networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic spike dataset, or import one from CSV events.
    GenData(GenDataArgs),
    /// Train a float network on a dataset with surrogate gradients.
    Train(TrainArgs),
    /// Quantize a float network to n-bit integers.
    Quantize(QuantizeArgs),
    /// Search a sign-bit key for one layer and encrypt the network.
    Encrypt(EncryptArgs),
    /// Apply a key to an encrypted network (XOR is its own inverse).
    Decrypt(DecryptArgs),
    /// Classification accuracy of a network on a dataset.
    Eval(EvalArgs),
    /// Brute-force key-recovery cost table.
    AttackComplexity(ComplexityArgs),
    /// Accuracy regained by decrypting subsets of the key.
    AttackRecover(RecoverArgs),
    /// Accuracy after flipping random bits.
    BaselineRandom(RandomArgs),
    /// Key made of the sign bits with the largest loss gradients.
    BaselineGradient(GradientArgs),
    /// Run inference on the simulated RRAM accelerator.
    Hwsim(HwsimArgs),
    /// Energy and latency of rewrite vs decrypt-on-read.
    Cost(CostArgs),
    /// Run every acceptance check and print one line per check.
    Repro(ReproArgs),
}

#[derive(Args)]
struct GenDataArgs {
    /// Generator settings (JSON or TOML); flags override them.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Import `sample,label,t,feature` events instead of generating.
    #[arg(long, requires_all = ["classes", "features", "timesteps"])]
    from_csv: Option<PathBuf>,
    #[arg(long)]
    classes: Option<usize>,
    #[arg(long)]
    features: Option<usize>,
    #[arg(long)]
    timesteps: Option<usize>,
    #[arg(long)]
    samples_per_class: Option<usize>,
    #[arg(long)]
    p_on: Option<f64>,
    #[arg(long)]
    p_off: Option<f64>,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    /// Layer widths, e.g. `64F-128F-4F`; the first number is the input width.
    #[arg(long)]
    arch: String,
    /// Training settings (JSON or TOML); flags override them.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    window: Option<f64>,
    #[arg(long)]
    init_gain: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    v_th: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct QuantizeArgs {
    #[arg(long)]
    network: PathBuf,
    #[arg(long, default_value_t = 8)]
    bits: u32,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct EncryptArgs {
    /// Job file (JSON or TOML) with `network`, `dataset`, `ga` and
    /// `max_workers`; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    network: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    /// Distance budget in bits.
    #[arg(long, conflicts_with = "epsilon_fraction")]
    epsilon: Option<usize>,
    /// Distance budget as a fraction of the layer's sign bits.
    #[arg(long)]
    epsilon_fraction: Option<f64>,
    #[arg(long)]
    generations: Option<u32>,
    #[arg(long)]
    population: Option<usize>,
    #[arg(long)]
    mutation_rate: Option<f64>,
    #[arg(long)]
    retain: Option<f64>,
    /// Layer to encrypt (0-based).
    #[arg(long)]
    layer: Option<usize>,
    /// Size of the class-stratified encryption set.
    #[arg(long)]
    enc_samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_workers: Option<usize>,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct DecryptArgs {
    #[arg(long)]
    network: PathBuf,
    #[arg(long)]
    key: PathBuf,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    network: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Decrypt with this key before evaluating.
    #[arg(long)]
    key: Option<PathBuf>,
    /// Use fixed-point membranes (quantized networks only).
    #[arg(long)]
    fixed: bool,
}

#[derive(Args)]
struct ComplexityArgs {
    /// Candidate bit count (weights in the layer).
    #[arg(long)]
    n: u64,
    #[arg(long)]
    k_max: u64,
    /// Attacker inference rate, per second.
    #[arg(long, default_value_t = 6900.0)]
    rate: f64,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Exhaustive,
    Greedy,
}

#[derive(Args)]
struct RecoverArgs {
    /// Encrypted network.
    #[arg(long)]
    network: PathBuf,
    #[arg(long)]
    key: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Largest subset size; defaults to the key length.
    #[arg(long)]
    k_max: Option<usize>,
    #[arg(long, value_enum, default_value_t = ModeArg::Exhaustive)]
    mode: ModeArg,
    /// Exhaustive mode stops before exceeding this many subset evaluations.
    #[arg(long, default_value_t = 1_000_000)]
    max_evaluations: u64,
    #[arg(long)]
    max_workers: Option<usize>,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RandomArgs {
    #[arg(long)]
    network: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    budget: usize,
    /// Flip sign bits of this layer; without it, any bit of the model.
    #[arg(long)]
    layer: Option<usize>,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    max_workers: Option<usize>,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GradientArgs {
    /// Float (pre-quantization) network.
    #[arg(long)]
    network: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    layer: usize,
    #[arg(long)]
    budget: usize,
    #[arg(long, default_value_t = 8)]
    bits: u32,
    #[arg(long, default_value_t = 8)]
    enc_samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.5)]
    window: f64,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct HwsimArgs {
    /// Encrypted 8-bit network.
    #[arg(long)]
    network: PathBuf,
    #[arg(long)]
    key: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Only run this sample.
    #[arg(long)]
    sample: Option<usize>,
    #[arg(long, default_value_t = 16)]
    membrane_bits: u32,
    #[arg(long, default_value_t = 8)]
    frac_bits: u32,
    /// Write a JSON-lines cycle trace here.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct CostArgs {
    /// Cost-model overrides (JSON or TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Use the five published workloads instead of explicit counts.
    #[arg(long, conflicts_with_all = ["bits_random", "bits_snngx"])]
    published: bool,
    #[arg(long, requires = "bits_snngx")]
    bits_random: Option<u64>,
    #[arg(long, requires = "bits_random")]
    bits_snngx: Option<u64>,
    #[arg(long, default_value_t = 1)]
    decryptions: u64,
    #[arg(long, default_value = "custom")]
    label: String,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReproArgs {
    #[arg(long, default_value = "repro-out")]
    out_dir: PathBuf,
    #[arg(long)]
    max_workers: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            ExitCode::from(if e.is_validation() { 2 } else { 1 })
        }
    }
}
