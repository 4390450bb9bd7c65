//! Derivative-free optimization over discrete hyperparameter grids.
//!
//! The main entry point is [`optimizer::run_rghl`], a generational driver that
//! fills each population half from rapid genetic exploration (multi-point
//! crossover, multi-gene mutation under an adaptive mutation probability) and
//! half from a ridge-regularized linear surrogate searched by random-direction
//! hill-climbing. Baselines (random search, constant-probability GA, pure rapid
//! GA), synthetic objectives and the repeated-run experiment harness live in
//! [`optimizer`] and [`bench`].

pub mod bench;
pub mod error;
pub mod genetic;
pub mod memory;
pub mod optimizer;
pub mod regression;
pub mod search_space;
pub mod surrogate;

pub use error::{Error, Result};
pub use memory::{ExperienceMemory, Origin, Record};
pub use optimizer::{
    run_ga_eg, run_random_search, run_rapid_ga, run_rghl, Objective, RghlConfig, RunOutcome,
    Strategy,
};
pub use search_space::{Chromosome, Dimension, ParamValue, SearchSpace};
pub use surrogate::{LinearSurrogate, RhcConfig, SurrogateKind};

/// Deterministic RNG used for every seeded run.
pub type Rng = rand_chacha::ChaCha8Rng;

/// Builds the crate RNG from a `u64` seed.
pub fn seeded_rng(seed: u64) -> Rng {
    use rand::SeedableRng;
    Rng::seed_from_u64(seed)
}
