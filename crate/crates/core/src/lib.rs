//! Protection of quantized spiking neural networks by sparse sign-bit XOR
//! encryption.
//!
//! A genetic search picks a small set of sign bits in one layer whose
//! flipping destroys classification accuracy; the set of positions is the
//! secret key. The crate also covers what surrounds that search:
//!
//! * [`snn`]: LIF networks, quantization, inference, a toy trainer.
//! * [`genetic`]: the bit search and XOR key handling.
//! * [`attack`]: brute-force complexity, partial-key recovery, and the
//!   random-bit and gradient baselines.
//! * [`hwsim`]: a bit-exact model of an RRAM processing element that
//!   decrypts while it multiplies, with an energy/latency cost model.
//! * [`io`]: file formats and a synthetic spike dataset generator.
//! * [`repro`]: the acceptance checks, runnable from code or the CLI.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attack;
pub mod error;
pub mod genetic;
pub mod hwsim;
pub mod io;
pub mod pipeline;
pub mod repro;
pub mod snn;
pub mod tensor;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/lif.md")]
    mod lif {}
    #[doc = include_str!("../../../book/src/quantization.md")]
    mod quantization {}
    #[doc = include_str!("../../../book/src/genetic-search.md")]
    mod genetic_search {}
    #[doc = include_str!("../../../book/src/hardware.md")]
    mod hardware {}
    #[doc = include_str!("../../../book/src/attacks.md")]
    mod attacks {}
    #[doc = include_str!("../../../book/src/cost-model.md")]
    mod cost_model {}
    #[doc = include_str!("../../../book/src/formats.md")]
    mod formats {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
