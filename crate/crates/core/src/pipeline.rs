//! File-level jobs shared by the command-line driver and the acceptance
//! checks.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::genetic::{run, stratified_indices, Encryption, GaConfig};
use crate::io::{
    config_hash, load_dataset, load_quantized_network, report_to_csv, report_to_json, save_key,
    save_quantized_network, ExperimentReport, KeyMeta,
};
use crate::snn::{Dataset, QuantizedNetwork};

/// Everything `encrypt` needs. Stored verbatim as `config.json` in the
/// output directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncryptJob {
    /// Quantized network to protect.
    pub network: PathBuf,
    /// Dataset the encryption subset is drawn from.
    pub dataset: PathBuf,
    #[serde(default)]
    pub ga: GaConfig,
    /// Threads for fitness evaluation.
    #[serde(default = "default_workers")]
    pub max_workers: usize,
}

fn default_workers() -> usize {
    1
}

/// What `encrypt` reports back.
#[derive(Clone, Debug, PartialEq)]
pub struct EncryptSummary {
    pub final_accuracy: f64,
    pub distance: usize,
    pub genome_length: usize,
    pub key_path: PathBuf,
    pub encrypted_path: PathBuf,
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

/// Runs the search on in-memory objects. The encryption set is a
/// class-stratified draw of `ga.enc_samples` samples from `dataset`.
pub fn encrypt(net: &QuantizedNetwork, dataset: &Dataset, ga: &GaConfig, workers: usize) -> Result<Encryption> {
    ga.validate()?;
    let idx = stratified_indices(dataset, ga.enc_samples, ga.seed)?;
    let d_enc = dataset.subset(&idx);
    run(net, d_enc.samples(), ga, workers)
}

/// Loads the job's inputs, runs the search and writes `config.json`,
/// `key.json`, `encrypted.json`, `report.json`, `report.csv` and `log.txt`
/// into `out_dir`. Inputs are never modified.
pub fn run_encrypt_job(job: &EncryptJob, out_dir: &Path) -> Result<EncryptSummary> {
    job.ga.validate()?;
    let net = load_quantized_network(&job.network)?;
    let dataset = load_dataset(&job.dataset)?;
    std::fs::create_dir_all(out_dir)?;
    let hash = config_hash(job);
    std::fs::write(out_dir.join("config.json"), serde_json::to_string_pretty(job).expect("job serializes") + "\n")?;

    let started = unix_now();
    let enc = encrypt(&net, &dataset, &job.ga, job.max_workers)?;
    let finished = unix_now();

    let meta = KeyMeta {
        epsilon: job.ga.epsilon,
        seed: job.ga.seed,
        generations_run: enc.report.generations_run,
        final_accuracy: enc.report.final_accuracy,
    };
    let key_path = out_dir.join("key.json");
    let encrypted_path = out_dir.join("encrypted.json");
    save_key(&enc.key, &meta, &key_path)?;
    save_quantized_network(&enc.encrypted, &encrypted_path)?;
    let report = ExperimentReport::from_search(&enc.report, hash.clone(), job.ga.seed, started, finished);
    std::fs::write(out_dir.join("report.json"), report_to_json(&report))?;
    std::fs::write(out_dir.join("report.csv"), report_to_csv(&report)?)?;

    let mut log = String::new();
    let _ = writeln!(log, "config_hash {hash}");
    let _ = writeln!(log, "genome_length {} epsilon {}", enc.report.genome_length, job.ga.epsilon);
    let _ = writeln!(log, "baseline_accuracy {}", enc.report.baseline_accuracy);
    for r in &enc.report.trace {
        let _ = writeln!(
            log,
            "gen {} best_fitness {} best_distance {} best_accuracy {} mean_distance {}",
            r.generation, r.best_fitness, r.best_distance, r.best_accuracy, r.mean_distance
        );
    }
    let _ = writeln!(log, "final_accuracy {} distance {}", enc.report.final_accuracy, enc.report.final_distance);
    std::fs::write(out_dir.join("log.txt"), log)?;

    Ok(EncryptSummary {
        final_accuracy: enc.report.final_accuracy,
        distance: enc.report.final_distance,
        genome_length: enc.report.genome_length,
        key_path,
        encrypted_path,
    })
}
