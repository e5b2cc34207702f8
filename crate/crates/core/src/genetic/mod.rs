//! Genetic search for a sparse sign-bit XOR key.

mod key;
pub mod ops;
pub mod rng;
mod sampling;
mod search;
mod sign;

pub use key::{apply_key, SecretKey};
pub use ops::{crossover, elite_count, epsilon_from_fraction, estimate_generations, fitness, recovery_mutation};
pub use sampling::stratified_indices;
pub use search::{
    evaluate, init_population, run, Encryption, GaConfig, GenerationStats, Individual, KeyedEvaluator, SearchReport,
};
pub use sign::{extract_sign_bits, SignBitVector};
