//! Key-recovery cost, partial-key recovery, and the random-bit and
//! gradient-ranked encryption baselines.

mod baseline;
mod complexity;
mod recovery;

pub use baseline::{
    flip_model_bits, gradient_baseline, median, random_bit_baseline, BitScope, GradientBaseline, RandomBaselineReport,
    TrialRow,
};
pub use complexity::{
    binomial, complexity_bound, complexity_exact, feasibility_report, ComplexityBound, ComplexityEstimate,
};
pub use recovery::{partial_key_recovery, PartialRecoveryCurve, RecoveryCsvRow, RecoveryMode, RecoveryPoint};
