//! The acceptance checks as library functions, so that the test suite and
//! the `repro` subcommand run the same code.

mod criteria;
mod fixture;
pub mod golden;

use std::fmt;
use std::path::Path;
use std::time::{Duration, Instant};

pub use criteria::{
    complexity_oracle, cost_model_reproduction, decryptor_equivalence, determinism, end_to_end_bit_exactness,
    fitness_dominance, gradient_baseline_ordering, involution_and_roundtrips, partial_key_recovery_curve,
    protection_behavior, recovery_mutation_statistics, toy_epsilon, toy_protection, ToyProtection,
    RECOVERY_KEY_BITS, TOY_ENC_SAMPLES, TOY_SEEDS,
};
pub use fixture::{toy_datasets, toy_test_spec, toy_train_config, toy_train_spec, ToyFixture, TOY_ARCHITECTURE};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
    /// Soft criterion missed.
    Warn,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Pass => "PASS",
            Outcome::Fail => "FAIL",
            Outcome::Warn => "WARN",
        })
    }
}

#[derive(Clone, Debug)]
pub struct CriterionResult {
    pub id: u32,
    pub name: &'static str,
    pub outcome: Outcome,
    pub detail: String,
    pub elapsed: Duration,
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{:>2}] {}: {} ({:.2?})", self.outcome, self.id, self.name, self.detail, self.elapsed)
    }
}

/// Runs every check in order, calling `report` as each one finishes.
/// `out_dir` receives the recovery CSV and the scratch files of the
/// determinism check.
pub fn run_all(out_dir: &Path, workers: usize, mut report: impl FnMut(&CriterionResult)) -> Vec<CriterionResult> {
    let mut results = Vec::new();
    let mut push = |r: CriterionResult| {
        report(&r);
        results.push(r);
    };
    push(decryptor_equivalence());
    push(end_to_end_bit_exactness());
    push(complexity_oracle());
    push(cost_model_reproduction());

    let toy_start = Instant::now();
    let toy = ToyFixture::build().and_then(|fx| toy_protection(&fx, workers).map(|p| (fx, p)));
    match &toy {
        Ok((fx, p)) => push(protection_behavior(fx, p, toy_start)),
        Err(e) => push(failed(5, "protection behavior", e, toy_start)),
    }
    push(fitness_dominance());
    push(recovery_mutation_statistics());
    push(involution_and_roundtrips());
    match &toy {
        Ok((fx, p)) => {
            push(partial_key_recovery_curve(fx, Some(out_dir), workers));
            push(gradient_baseline_ordering(p, Instant::now()));
            push(determinism(fx, &out_dir.join("determinism")));
        }
        Err(e) => {
            push(failed(9, "partial-key recovery", e, Instant::now()));
            push(failed(10, "gradient-baseline ordering", e, Instant::now()));
            push(failed(11, "determinism", e, Instant::now()));
        }
    }
    results
}

fn failed(id: u32, name: &'static str, e: &crate::Error, start: Instant) -> CriterionResult {
    CriterionResult { id, name, outcome: Outcome::Fail, detail: format!("toy fixture: {e}"), elapsed: start.elapsed() }
}
