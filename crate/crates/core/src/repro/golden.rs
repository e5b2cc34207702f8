//! Reference files for every serialized format. The bytes are committed
//! under `golden/`; [`golden_files`] rebuilds them from fixed inputs.

use crate::error::Result;
use crate::genetic::{GenerationStats, SecretKey};
use crate::io::{
    decode_dataset, encode_dataset, export_dataset_csv, float_from_json, float_to_json, generate_synthetic,
    import_dataset_csv, key_from_json, key_to_json, quantized_from_json, quantized_to_json, report_from_json,
    report_rows_from_csv, report_to_csv, report_to_json, ExperimentReport, KeyMeta, ReportSummary, SyntheticTaskSpec,
    REPORT_VERSION,
};
use crate::snn::{quantize, Architecture, Dataset, FloatNetwork, NeuronParams};

pub const GOLDEN_NAMES: [&str; 7] =
    ["dataset.sngx", "events.csv", "network_float.json", "network_q8.json", "key.json", "report.json", "report.csv"];

const COMMITTED: [&[u8]; 7] = [
    include_bytes!("../../golden/dataset.sngx"),
    include_bytes!("../../golden/events.csv"),
    include_bytes!("../../golden/network_float.json"),
    include_bytes!("../../golden/network_q8.json"),
    include_bytes!("../../golden/key.json"),
    include_bytes!("../../golden/report.json"),
    include_bytes!("../../golden/report.csv"),
];

fn dataset() -> Result<Dataset> {
    // 5 x 7 = 35 bits per sample, so the last byte carries padding.
    generate_synthetic(&SyntheticTaskSpec {
        num_classes: 3,
        features: 7,
        timesteps: 5,
        samples_per_class: 2,
        p_on: 0.7,
        p_off: 0.2,
        noise: 0.05,
        seed: 11,
    })
}

fn float_network() -> Result<FloatNetwork> {
    let arch: Architecture = "7F-5R-3F".parse()?;
    FloatNetwork::random(&arch, NeuronParams::new(0.875, 1.25)?, 1.5, 3)
}

fn key() -> Result<(SecretKey, KeyMeta)> {
    let key = SecretKey::new(1, 8, 15, vec![0, 4, 9, 14])?;
    Ok((key, KeyMeta { epsilon: 4, seed: 42, generations_run: 17, final_accuracy: 0.3333333333333333 }))
}

fn report() -> ExperimentReport {
    let rows = (0..4)
        .map(|g| GenerationStats {
            generation: g,
            best_fitness: 12.5 / f64::from(g + 1),
            best_distance: 20 - g as usize * 3,
            best_accuracy: 0.1 * f64::from(g),
            mean_distance: 21.75 - f64::from(g) * 2.5,
        })
        .collect();
    ExperimentReport {
        version: REPORT_VERSION,
        config_hash: "0".repeat(64),
        seed: 42,
        started: 1_700_000_000,
        finished: 1_700_000_017,
        rows,
        summary: ReportSummary {
            baseline_accuracy: 0.9,
            final_accuracy: 0.3,
            final_distance: 11,
            genome_length: 15,
            generations_run: 3,
        },
    }
}

/// Freshly built bytes of every golden file, in [`GOLDEN_NAMES`] order.
pub fn golden_files() -> Result<Vec<(&'static str, Vec<u8>)>> {
    let d = dataset()?;
    let mut events = Vec::new();
    export_dataset_csv(&d, &mut events)?;
    let f = float_network()?;
    let q = quantize(&f, 8)?;
    let (k, meta) = key()?;
    let r = report();
    let files = vec![
        encode_dataset(&d)?,
        events,
        float_to_json(&f).into_bytes(),
        quantized_to_json(&q).into_bytes(),
        key_to_json(&k, &meta).into_bytes(),
        report_to_json(&r).into_bytes(),
        report_to_csv(&r)?.into_bytes(),
    ];
    Ok(GOLDEN_NAMES.into_iter().zip(files).collect())
}

fn text(bytes: &[u8]) -> std::result::Result<&str, String> {
    std::str::from_utf8(bytes).map_err(|e| e.to_string())
}

/// Re-encodes a committed file after decoding it.
fn reencode(name: &str, bytes: &[u8]) -> std::result::Result<Vec<u8>, String> {
    let e = |err: crate::Error| err.to_string();
    Ok(match name {
        "dataset.sngx" => encode_dataset(&decode_dataset(bytes).map_err(e)?).map_err(e)?,
        "events.csv" => {
            let reference = dataset().map_err(e)?;
            let d = import_dataset_csv(bytes, reference.timesteps(), reference.features(), reference.num_classes())
                .map_err(e)?;
            if d != reference {
                return Err("imported events differ from the golden dataset".into());
            }
            let mut out = Vec::new();
            export_dataset_csv(&d, &mut out).map_err(e)?;
            out
        }
        "network_float.json" => float_to_json(&float_from_json(text(bytes)?).map_err(e)?).into_bytes(),
        "network_q8.json" => quantized_to_json(&quantized_from_json(text(bytes)?).map_err(e)?).into_bytes(),
        "key.json" => {
            let (k, m) = key_from_json(text(bytes)?).map_err(e)?;
            key_to_json(&k, &m).into_bytes()
        }
        "report.json" => report_to_json(&report_from_json(text(bytes)?).map_err(e)?).into_bytes(),
        "report.csv" => {
            let rows = report_rows_from_csv(text(bytes)?).map_err(e)?;
            report_to_csv(&ExperimentReport { rows, ..report() }).map_err(e)?.into_bytes()
        }
        other => return Err(format!("unknown golden file {other}")),
    })
}

/// For each golden file: the committed bytes equal a fresh build, and
/// decoding then re-encoding them reproduces them exactly.
pub fn check_golden() -> Result<Vec<(&'static str, std::result::Result<(), String>)>> {
    let fresh = golden_files()?;
    Ok(fresh
        .into_iter()
        .zip(COMMITTED)
        .map(|((name, built), committed)| {
            let outcome = if built != committed {
                Err("committed bytes differ from a fresh build".to_string())
            } else {
                reencode(name, committed).and_then(|again| {
                    if again == committed {
                        Ok(())
                    } else {
                        Err("decode then encode changed the bytes".to_string())
                    }
                })
            };
            (name, outcome)
        })
        .collect())
}
