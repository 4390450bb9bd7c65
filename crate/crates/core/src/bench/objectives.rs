//! Synthetic grid objectives with known optima.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimizer::Objective;
use crate::search_space::{Chromosome, SearchSpace};
use crate::{seeded_rng, Rng as CrateRng};

const RASTRIGIN_A: f64 = 10.0;
const RASTRIGIN_BOUND: f64 = 5.12;
/// Fitness everywhere on the plateau except the optimum cell.
const PLATEAU_LEVEL: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticKind {
    SeparableLinear,
    QuadraticBowl,
    RastriginGrid,
    DeceptivePlateau,
    NoisyBowl,
}

impl SyntheticKind {
    pub const ALL: [SyntheticKind; 5] = [
        SyntheticKind::SeparableLinear,
        SyntheticKind::QuadraticBowl,
        SyntheticKind::RastriginGrid,
        SyntheticKind::DeceptivePlateau,
        SyntheticKind::NoisyBowl,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SyntheticKind::SeparableLinear => "separable_linear",
            SyntheticKind::QuadraticBowl => "quadratic_bowl",
            SyntheticKind::RastriginGrid => "rastrigin_grid",
            SyntheticKind::DeceptivePlateau => "deceptive_plateau",
            SyntheticKind::NoisyBowl => "noisy_bowl",
        }
    }
}

impl fmt::Display for SyntheticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SyntheticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::UnsupportedKind(s.to_owned()))
    }
}

/// A deterministic (or seeded-noisy) objective over a search space.
#[derive(Debug, Clone)]
pub struct SyntheticObjective {
    kind: SyntheticKind,
    space: SearchSpace,
    noise_sd: f64,
    seed: u64,
    /// Planted target in normalized coordinates (bowls only).
    target: Vec<f64>,
    optimum: Chromosome,
    optimum_value: f64,
}

impl SyntheticObjective {
    pub fn new(kind: SyntheticKind, space: SearchSpace, noise_sd: f64, seed: u64) -> Result<Self> {
        if !noise_sd.is_finite() || noise_sd < 0.0 {
            return Err(Error::InvalidConfig(format!("noise_sd must be >= 0, got {noise_sd}")));
        }
        let mut rng: CrateRng = seeded_rng(seed);
        let n = space.n_genes();
        let (target, optimum, optimum_value) = match kind {
            SyntheticKind::SeparableLinear => (Vec::new(), Chromosome::zeros(n), 0.0),
            SyntheticKind::QuadraticBowl | SyntheticKind::NoisyBowl => {
                let cell = space.sample(&mut rng);
                (space.normalize_unchecked(&cell), cell, 0.0)
            }
            SyntheticKind::RastriginGrid => {
                let genes: Vec<u8> = space
                    .cardinalities()
                    .map(|card| {
                        (0..card)
                            .min_by(|&a, &b| {
                                rastrigin_term(grid_x(a, card))
                                    .total_cmp(&rastrigin_term(grid_x(b, card)))
                            })
                            .unwrap() as u8
                    })
                    .collect();
                let value = genes
                    .iter()
                    .zip(space.cardinalities())
                    .map(|(&g, card)| rastrigin_term(grid_x(g as usize, card)))
                    .sum();
                (Vec::new(), Chromosome::new(genes), value)
            }
            SyntheticKind::DeceptivePlateau => (Vec::new(), space.sample(&mut rng), 0.0),
        };
        Ok(Self {
            kind,
            space,
            noise_sd,
            seed,
            target,
            optimum,
            optimum_value,
        })
    }

    pub fn kind(&self) -> SyntheticKind {
        self.kind
    }

    pub fn space(&self) -> &SearchSpace {
        &self.space
    }

    pub fn noise_sd(&self) -> f64 {
        self.noise_sd
    }

    /// Global minimizer at zero noise.
    pub fn optimum(&self) -> &Chromosome {
        &self.optimum
    }

    pub fn optimum_value(&self) -> f64 {
        self.optimum_value
    }

    /// Noise-free value.
    pub fn clean_value(&self, c: &Chromosome) -> f64 {
        let x = self.space.normalize_unchecked(c);
        match self.kind {
            SyntheticKind::SeparableLinear => x.iter().sum(),
            SyntheticKind::QuadraticBowl | SyntheticKind::NoisyBowl => x
                .iter()
                .zip(&self.target)
                .map(|(a, t)| (a - t).powi(2))
                .sum(),
            SyntheticKind::RastriginGrid => c
                .genes()
                .iter()
                .zip(self.space.cardinalities())
                .map(|(&g, card)| rastrigin_term(grid_x(g as usize, card)))
                .sum(),
            SyntheticKind::DeceptivePlateau => {
                if *c == self.optimum {
                    0.0
                } else {
                    PLATEAU_LEVEL
                }
            }
        }
    }

    fn noise(&self, c: &Chromosome, draw: u64) -> f64 {
        let mut h = splitmix(self.seed ^ 0xA076_1D64_78BD_642F);
        h = splitmix(h ^ draw);
        for &g in c.genes() {
            h = splitmix(h ^ g as u64);
        }
        let mut rng = CrateRng::seed_from_u64(h);
        let z: f64 = rng.sample(StandardNormal);
        self.noise_sd * z
    }
}

impl Objective for SyntheticObjective {
    fn evaluate(&self, chromosome: &Chromosome, draw: u64) -> f64 {
        let clean = self.clean_value(chromosome);
        if self.noise_sd > 0.0 {
            clean + self.noise(chromosome, draw)
        } else {
            clean
        }
    }
}

/// Normalized gene mapped onto [-5.12, 5.12].
fn grid_x(gene: usize, cardinality: usize) -> f64 {
    let u = gene as f64 / (cardinality.max(2) - 1) as f64;
    -RASTRIGIN_BOUND + 2.0 * RASTRIGIN_BOUND * u
}

/// One coordinate of `A n + sum(x^2 - A cos(2 pi x))`.
fn rastrigin_term(x: f64) -> f64 {
    RASTRIGIN_A + x * x - RASTRIGIN_A * (2.0 * std::f64::consts::PI * x).cos()
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_linear_optimum() {
        let space = SearchSpace::indexed(&[4, 5, 1]).unwrap();
        let f = SyntheticObjective::new(SyntheticKind::SeparableLinear, space, 0.0, 0).unwrap();
        assert_eq!(f.evaluate(&Chromosome::zeros(3), 0), 0.0);
        assert_eq!(f.evaluate(&Chromosome::new(vec![3, 2, 0]), 0), 1.5);
        assert_eq!(f.optimum_value(), 0.0);
    }

    #[test]
    fn bowl_is_zero_at_target() {
        let space = SearchSpace::indexed(&[16; 9]).unwrap();
        let f = SyntheticObjective::new(SyntheticKind::QuadraticBowl, space.clone(), 0.0, 42).unwrap();
        assert_eq!(f.evaluate(f.optimum(), 0), 0.0);
        let mut rng = seeded_rng(1);
        for _ in 0..200 {
            assert!(f.evaluate(&space.sample(&mut rng), 0) >= 0.0);
        }
    }

    #[test]
    fn rastrigin_zero_at_centre() {
        // odd cardinality puts a grid point at x = 0
        let space = SearchSpace::indexed(&[11; 4]).unwrap();
        let f = SyntheticObjective::new(SyntheticKind::RastriginGrid, space, 0.0, 0).unwrap();
        let centre = Chromosome::new(vec![5; 4]);
        assert!(f.evaluate(&centre, 0).abs() < 1e-12);
        assert_eq!(f.optimum(), &centre);
        // at a corner x = -5.12: 10 + 5.12^2 - 10 cos(2 pi 5.12) per coordinate
        let corner = f.evaluate(&Chromosome::zeros(4), 0);
        let term = 10.0 + 5.12f64.powi(2) - 10.0 * (2.0 * std::f64::consts::PI * 5.12).cos();
        assert!((corner - 4.0 * term).abs() < 1e-9);
    }

    #[test]
    fn rastrigin_optimum_on_even_grid_is_exhaustive_min() {
        let space = SearchSpace::indexed(&[6, 6]).unwrap();
        let f = SyntheticObjective::new(SyntheticKind::RastriginGrid, space, 0.0, 0).unwrap();
        let mut best = f64::INFINITY;
        for a in 0..6u8 {
            for b in 0..6u8 {
                best = best.min(f.evaluate(&Chromosome::new(vec![a, b]), 0));
            }
        }
        assert_eq!(best, f.optimum_value());
    }

    #[test]
    fn plateau_has_single_optimum() {
        let space = SearchSpace::indexed(&[3, 3]).unwrap();
        let f = SyntheticObjective::new(SyntheticKind::DeceptivePlateau, space, 0.0, 9).unwrap();
        let mut zeros = 0;
        for a in 0..3u8 {
            for b in 0..3u8 {
                let v = f.evaluate(&Chromosome::new(vec![a, b]), 0);
                if v == 0.0 {
                    zeros += 1;
                } else {
                    assert_eq!(v, 1.0);
                }
            }
        }
        assert_eq!(zeros, 1);
    }

    #[test]
    fn noise_is_reproducible_and_centered() {
        let space = SearchSpace::indexed(&[8; 3]).unwrap();
        let f = SyntheticObjective::new(SyntheticKind::NoisyBowl, space, 0.1, 5).unwrap();
        let c = Chromosome::new(vec![1, 2, 3]);
        assert_eq!(f.evaluate(&c, 7), f.evaluate(&c, 7));
        assert_ne!(f.evaluate(&c, 7), f.evaluate(&c, 8));
        let clean = f.clean_value(&c);
        let n = 20_000;
        let devs: Vec<f64> = (0..n).map(|d| f.evaluate(&c, d) - clean).collect();
        let m = devs.iter().sum::<f64>() / n as f64;
        let sd = (devs.iter().map(|d| (d - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        assert!(m.abs() < 0.005, "mean {m}");
        assert!((sd - 0.1).abs() < 0.005, "sd {sd}");
    }

    #[test]
    fn kind_parsing() {
        for k in SyntheticKind::ALL {
            assert_eq!(k.as_str().parse::<SyntheticKind>().unwrap(), k);
        }
        assert!(matches!(
            "sphere".parse::<SyntheticKind>(),
            Err(Error::UnsupportedKind(_))
        ));
        let space = SearchSpace::indexed(&[2]).unwrap();
        assert!(SyntheticObjective::new(SyntheticKind::NoisyBowl, space, -1.0, 0).is_err());
    }
}
