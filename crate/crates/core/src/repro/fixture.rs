use crate::error::{Error, Result};
use crate::io::{decode_dataset, generate_synthetic, SyntheticTaskSpec};
use crate::snn::{quantize, train_toy, Architecture, Dataset, FloatNetwork, QuantizedNetwork, TrainConfig, TrainReport};

const TOY_TRAIN: &[u8] = include_bytes!("../../fixtures/toy_train.sngx");
const TOY_TEST: &[u8] = include_bytes!("../../fixtures/toy_test.sngx");

/// Layer widths of the toy model.
pub const TOY_ARCHITECTURE: &str = "64F-128F-4F";

/// Generator settings of the committed toy training split.
pub fn toy_train_spec() -> SyntheticTaskSpec {
    SyntheticTaskSpec { samples_per_class: 100, seed: 1, ..SyntheticTaskSpec::default() }
}

/// Generator settings of the committed toy test split.
pub fn toy_test_spec() -> SyntheticTaskSpec {
    SyntheticTaskSpec { samples_per_class: 50, seed: 2, ..SyntheticTaskSpec::default() }
}

pub fn toy_train_config() -> TrainConfig {
    TrainConfig { epochs: 20, learning_rate: 0.003, init_gain: 2.0, seed: 0, ..TrainConfig::default() }
}

/// The committed toy splits, checked against their generator settings.
pub fn toy_datasets() -> Result<(Dataset, Dataset)> {
    let train = decode_dataset(TOY_TRAIN)?;
    let test = decode_dataset(TOY_TEST)?;
    if train != generate_synthetic(&toy_train_spec())? || test != generate_synthetic(&toy_test_spec())? {
        return Err(Error::Validation("committed toy dataset differs from its generator settings".into()));
    }
    Ok((train, test))
}

/// Trained and 8-bit quantized toy model with its data.
#[derive(Clone, Debug)]
pub struct ToyFixture {
    pub train: Dataset,
    pub test: Dataset,
    pub float: FloatNetwork,
    pub quantized: QuantizedNetwork,
    pub report: TrainReport,
}

impl ToyFixture {
    pub fn build() -> Result<Self> {
        let (train, test) = toy_datasets()?;
        let arch: Architecture = TOY_ARCHITECTURE.parse()?;
        let (float, report) = train_toy(&arch, &train, &toy_train_config())?;
        let quantized = quantize(&float, 8)?;
        Ok(ToyFixture { train, test, float, quantized, report })
    }

    pub fn output_layer(&self) -> usize {
        self.quantized.layers().len() - 1
    }
}
