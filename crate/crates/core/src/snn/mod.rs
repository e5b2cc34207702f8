//! Spiking network representation, discrete LIF simulation, quantization,
//! and a small surrogate-gradient trainer.

pub mod fixed;
mod forward;
mod network;
mod neuron;
mod quant;
mod spike;
pub mod train;

pub use fixed::{FixedFormat, FixedNeuron};
pub use forward::{
    argmax_lowest, evaluate_accuracy, Classifier, ForwardOutput, ForwardTrace, LayerSums, MembraneArithmetic,
};
pub(crate) use forward::run_quantized;
pub use network::{Architecture, FloatLayer, FloatNetwork, LayerKind};
pub use neuron::{lif_step, NeuronParams};
pub use quant::{
    flip_bit, flip_msb, int_range, quantize, quantize_matrix, QuantizedLayer, QuantizedMatrix, QuantizedNetwork,
};
pub use spike::{Dataset, LabeledSample, SpikeTrain};
pub use train::{train_toy, SpikeFunction, TrainConfig, TrainReport};
