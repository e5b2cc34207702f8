//! Logic-level model of the RRAM processing-element datapath: encrypted
//! weight storage, per-column decryptors, adder tree and fixed-point LIF
//! neurons, plus the RD/GD energy and latency model.

mod accel;
mod cell;
mod cost;
mod neuron;
mod pe;

pub use accel::{simulate_inference, Accelerator, HwInference, HwStats, MatrixRole, NEURONS_PER_TILE, PES_PER_TILE};
pub use cell::{decrypt_mac_bit, RramCell};
pub use cost::{estimate_cost, published_cost_table, CostEstimate, CostModel, PUBLISHED_FACTORS, PUBLISHED_WORKLOADS};
pub use neuron::{lif_fixed_step, FixedPointLif};
pub use pe::{pe_cycle, PeArray, PeCycle, ADDER_PASSES_PER_ROW, CELLS_PER_WEIGHT, PE_COLS, PE_ROWS, WEIGHTS_PER_ROW};
