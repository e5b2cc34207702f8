//! Rewrites `golden/` and `fixtures/` from their generators.
//!
//! Run with `cargo run -p snngx --example regen_golden` after an intended
//! format change, then review the diff.

use std::path::Path;

use snngx::io::{encode_dataset, generate_synthetic};
use snngx::repro::golden::golden_files;
use snngx::repro::{toy_test_spec, toy_train_spec};

fn main() -> snngx::Result<()> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    for (name, bytes) in golden_files()? {
        std::fs::write(root.join("golden").join(name), bytes)?;
    }
    let fixtures = root.join("fixtures");
    std::fs::write(fixtures.join("toy_train.sngx"), encode_dataset(&generate_synthetic(&toy_train_spec())?)?)?;
    std::fs::write(fixtures.join("toy_test.sngx"), encode_dataset(&generate_synthetic(&toy_test_spec())?)?)?;
    Ok(())
}
