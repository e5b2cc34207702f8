use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Energy and latency constants for rewrite-based decryption (RD) and
/// decrypt-on-read (GD).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CostModel {
    /// Energy to rewrite one RRAM cell, pJ.
    pub e_write_pj: f64,
    /// Duration of one parallel write, ns.
    pub t_write_ns: f64,
    /// Cells rewritten simultaneously.
    pub parallel_writes: u64,
    /// Energy per decrypted bit per decryption, pJ.
    pub e_decrypt_pj: f64,
    /// Clock of the decrypt-on-read datapath, MHz.
    pub f_gd_mhz: f64,
    /// Clock of the rewrite controller, MHz. Informational; the write time
    /// is given directly by `t_write_ns`.
    pub f_rd_mhz: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel {
            e_write_pj: 1.0,
            t_write_ns: 100.43,
            parallel_writes: 1024,
            e_decrypt_pj: 14.75,
            f_gd_mhz: 25.0,
            f_rd_mhz: 10.0,
        }
    }
}

impl CostModel {
    pub fn validate(&self) -> Result<()> {
        let reals = [
            ("e_write_pj", self.e_write_pj),
            ("t_write_ns", self.t_write_ns),
            ("e_decrypt_pj", self.e_decrypt_pj),
            ("f_gd_mhz", self.f_gd_mhz),
            ("f_rd_mhz", self.f_rd_mhz),
        ];
        for (name, v) in reals {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Validation(format!("{name} must be positive, got {v}")));
            }
        }
        if self.parallel_writes == 0 {
            return Err(Error::Validation("parallel_writes must be positive".into()));
        }
        Ok(())
    }

    /// One decrypt-on-read clock period, ns.
    pub fn gd_cycle_ns(&self) -> f64 {
        1e3 / self.f_gd_mhz
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostEstimate {
    pub dataset_label: String,
    pub bits_random: u64,
    pub bits_snngx: u64,
    pub e_rd_pj: f64,
    pub e_gd_pj: f64,
    pub energy_factor: f64,
    pub t_rd_ns: f64,
    pub t_gd_ns: f64,
    pub latency_factor: f64,
}

/// RD rewrites `bits_random` cells `parallel_writes` at a time; GD decrypts
/// `bits_snngx` bits per decryption while the PE computes, costing one GD
/// clock cycle of latency.
pub fn estimate_cost(
    label: &str,
    bits_random: u64,
    bits_snngx: u64,
    decryptions_per_inference: u64,
    model: &CostModel,
) -> Result<CostEstimate> {
    model.validate()?;
    if bits_random == 0 || bits_snngx == 0 || decryptions_per_inference == 0 {
        return Err(Error::Validation("bit counts and decryptions per inference must be positive".into()));
    }
    let e_rd = bits_random as f64 * model.e_write_pj;
    let e_gd = bits_snngx as f64 * model.e_decrypt_pj * decryptions_per_inference as f64;
    let t_rd = bits_random.div_ceil(model.parallel_writes) as f64 * model.t_write_ns;
    let t_gd = model.gd_cycle_ns();
    Ok(CostEstimate {
        dataset_label: label.to_string(),
        bits_random,
        bits_snngx,
        e_rd_pj: e_rd,
        e_gd_pj: e_gd,
        energy_factor: e_rd / e_gd,
        t_rd_ns: t_rd,
        t_gd_ns: t_gd,
        latency_factor: t_rd / t_gd,
    })
}

/// Published encrypted-bit counts: (label, random-bit encryption, SNNGX).
pub const PUBLISHED_WORKLOADS: [(&str, u64, u64); 5] = [
    ("NMNIST", 820_000, 37),
    ("DVSGesture", 1_700_000, 17),
    ("EEGMMIDB", 1_700_000, 77),
    ("Braille", 70_000, 10),
    ("SHD", 200_000, 230),
];

/// Published reduction factors, same order as [`PUBLISHED_WORKLOADS`]:
/// (energy, latency).
pub const PUBLISHED_FACTORS: [(f64, f64); 5] =
    [(1503.0, 2050.0), (6780.0, 4250.0), (1497.0, 4250.0), (474.0, 175.0), (59.0, 500.0)];

pub fn published_cost_table(model: &CostModel) -> Result<Vec<CostEstimate>> {
    PUBLISHED_WORKLOADS.iter().map(|&(label, r, s)| estimate_cost(label, r, s, 1, model)).collect()
}
