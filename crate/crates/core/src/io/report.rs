use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genetic::{GenerationStats, SearchReport};

pub const REPORT_VERSION: u32 = 1;

/// Run metadata plus one row per generation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentReport {
    pub version: u32,
    pub config_hash: String,
    pub seed: u64,
    /// Unix seconds.
    pub started: u64,
    pub finished: u64,
    pub rows: Vec<GenerationStats>,
    pub summary: ReportSummary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportSummary {
    pub baseline_accuracy: f64,
    pub final_accuracy: f64,
    pub final_distance: usize,
    pub genome_length: usize,
    pub generations_run: u32,
}

impl ExperimentReport {
    pub fn from_search(search: &SearchReport, config_hash: String, seed: u64, started: u64, finished: u64) -> Self {
        ExperimentReport {
            version: REPORT_VERSION,
            config_hash,
            seed,
            started,
            finished,
            rows: search.trace.clone(),
            summary: ReportSummary {
                baseline_accuracy: search.baseline_accuracy,
                final_accuracy: search.final_accuracy,
                final_distance: search.final_distance,
                genome_length: search.genome_length,
                generations_run: search.generations_run,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(w) = self.rows.windows(2).find(|w| w[1].generation <= w[0].generation) {
            return Err(Error::Validation(format!(
                "report rows not ordered by generation: {} after {}",
                w[1].generation, w[0].generation
            )));
        }
        Ok(())
    }
}

pub fn report_to_json(r: &ExperimentReport) -> String {
    serde_json::to_string_pretty(r).expect("report serializes") + "\n"
}

pub fn report_from_json(text: &str) -> Result<ExperimentReport> {
    #[derive(Deserialize)]
    struct Probe {
        version: u32,
    }
    let probe: Probe = serde_json::from_str(text)?;
    if probe.version != REPORT_VERSION {
        return Err(Error::UnsupportedVersion { found: probe.version, supported: REPORT_VERSION });
    }
    let r: ExperimentReport = serde_json::from_str(text)?;
    r.validate()?;
    Ok(r)
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        other => Error::Parse(format!("{other:?}")),
    }
}

/// Writes rows of any serializable record type with a header line.
pub fn write_csv<T: Serialize>(rows: &[T], w: impl Write) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for r in rows {
        wtr.serialize(r).map_err(csv_err)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_csv<T: serde::de::DeserializeOwned>(r: impl std::io::Read) -> Result<Vec<T>> {
    csv::Reader::from_reader(r).deserialize().map(|row| row.map_err(csv_err)).collect()
}

pub fn report_to_csv(r: &ExperimentReport) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(&r.rows, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv is utf-8"))
}

pub fn report_rows_from_csv(text: &str) -> Result<Vec<GenerationStats>> {
    read_csv(text.as_bytes())
}

pub fn save_report(r: &ExperimentReport, json: &Path, csv: &Path) -> Result<()> {
    std::fs::write(json, report_to_json(r))?;
    std::fs::write(csv, report_to_csv(r)?)?;
    Ok(())
}

pub fn load_report(path: &Path) -> Result<ExperimentReport> {
    report_from_json(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn sample() -> ExperimentReport {
        let rows = (0..3)
            .map(|g| GenerationStats {
                generation: g,
                best_fitness: 10.0 - g as f64 * 0.1,
                best_distance: 40 - g as usize,
                best_accuracy: 0.25,
                mean_distance: 41.5 - g as f64,
            })
            .collect();
        ExperimentReport {
            version: REPORT_VERSION,
            config_hash: "ab".into(),
            seed: 3,
            started: 10,
            finished: 20,
            rows,
            summary: ReportSummary {
                baseline_accuracy: 0.9,
                final_accuracy: 0.25,
                final_distance: 38,
                genome_length: 512,
                generations_run: 2,
            },
        }
    }

    #[test]
    fn json_and_csv_roundtrip() {
        let r = sample();
        assert_eq!(report_from_json(&report_to_json(&r)).unwrap(), r);
        let csv = report_to_csv(&r).unwrap();
        assert!(csv.starts_with("generation,best_fitness,best_distance,best_accuracy,mean_distance\n"));
        assert_eq!(report_rows_from_csv(&csv).unwrap(), r.rows);
    }

    #[test]
    fn unordered_rows_rejected() {
        let mut r = sample();
        r.rows.swap(0, 1);
        assert_eq!(report_from_json(&report_to_json(&r)).unwrap_err().code(), "E_VALIDATION");
    }
}
