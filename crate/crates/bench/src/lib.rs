//! Shared fixtures for the criterion benches.

use rghl_core::bench::objectives::{SyntheticKind, SyntheticObjective};
use rghl_core::memory::{ExperienceMemory, Origin};
use rghl_core::optimizer::Objective;
use rghl_core::{seeded_rng, SearchSpace};

/// 9 genes of cardinality 16, the default benchmark grid.
pub fn default_space() -> SearchSpace {
    SearchSpace::indexed(&[16; 9]).expect("valid space")
}

pub fn bowl(space: &SearchSpace, seed: u64) -> SyntheticObjective {
    SyntheticObjective::new(SyntheticKind::QuadraticBowl, space.clone(), 0.0, seed).expect("valid objective")
}

/// `n` uniformly sampled evaluations of the bowl.
pub fn filled_memory(space: &SearchSpace, n: usize, seed: u64) -> ExperienceMemory {
    let f = bowl(space, seed);
    let mut rng = seeded_rng(seed);
    let mut memory = ExperienceMemory::new();
    for i in 0..n {
        let c = space.sample(&mut rng);
        let y = f.evaluate(&c, i as u64);
        memory.push(c, y, Origin::Random);
    }
    memory
}
