//! File formats and the synthetic dataset generator.
//!
//! | file     | format                                              |
//! |----------|-----------------------------------------------------|
//! | dataset  | `SNGX` binary, bit-packed spikes; CSV event import  |
//! | network  | JSON, float or quantized                            |
//! | key      | JSON, ascending sign-bit positions plus metadata    |
//! | report   | JSON plus one CSV row per generation                |
//! | config   | JSON or TOML, unknown keys rejected                 |
//!
//! Every format carries a version number and loaders refuse versions they
//! do not know.

mod config;
mod dataset;
mod key;
mod network;
mod report;
mod synthetic;

pub use config::{config_hash, load_config, parse_config};
pub use dataset::{
    decode_dataset, encode_dataset, export_dataset_csv, import_dataset_csv, import_events_csv, load_dataset, pack_spikes, packed_len,
    read_dataset, save_dataset, unpack_spikes, write_dataset, DATASET_MAGIC, DATASET_VERSION,
};
pub use key::{key_from_json, key_to_json, load_key, save_key, KeyMeta, KEY_VERSION};
pub use network::{
    float_from_json, float_to_json, load_float_network, load_network, load_quantized_network, network_from_json,
    quantized_from_json, quantized_to_json, save_float_network, save_quantized_network, AnyNetwork, NETWORK_VERSION,
};
pub use report::{
    load_report, read_csv, report_from_json, report_rows_from_csv, report_to_csv, report_to_json, save_report,
    write_csv, ExperimentReport, ReportSummary, REPORT_VERSION,
};
pub use synthetic::{generate_synthetic, SyntheticTaskSpec};
