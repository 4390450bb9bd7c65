//! Rapid genetic exploration.
//!
//! Parents are drawn from the top-N pool, recombined by multi-point crossover
//! and, with a probability driven by the recent fitness trend, hit by
//! multi-gene mutation. Fitness is lower-is-better throughout.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::memory::{ExperienceMemory, Origin};
use crate::search_space::{Chromosome, SearchSpace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub chromosome: Chromosome,
    pub fitness: f64,
}

impl Individual {
    pub fn new(chromosome: Chromosome, fitness: f64) -> Self {
        Self {
            chromosome,
            fitness,
        }
    }
}

/// Parameters of the adaptive mutation probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmpfConfig {
    /// Intensity factor, `>= 1`.
    pub alpha: f64,
    /// Number of most recent fitness records fed to the slope fit, `>= 2`.
    pub window: usize,
}

impl Default for AmpfConfig {
    fn default() -> Self {
        Self {
            alpha: 2.0,
            window: 40,
        }
    }
}

impl AmpfConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.alpha.is_finite() || self.alpha < 1.0 {
            return Err(Error::InvalidConfig(format!(
                "ampf alpha must be a finite value >= 1, got {}",
                self.alpha
            )));
        }
        if self.window < 2 {
            return Err(Error::InvalidConfig(format!(
                "ampf window must be >= 2, got {}",
                self.window
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub intercept: f64,
    pub slope: f64,
}

/// Least-squares line through the last `min(window, len)` scores, placed on
/// equally spaced abscissae from 0 to 1.
pub fn fit_slope(scores: &[f64], window: usize) -> Result<SlopeFit> {
    let take = scores.len().min(window);
    if take < 2 {
        return Err(Error::InsufficientHistory(take));
    }
    let ys = &scores[scores.len() - take..];
    let step = 1.0 / (take - 1) as f64;
    let x_mean = 0.5;
    let y_mean = ys.iter().sum::<f64>() / take as f64;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, &y) in ys.iter().enumerate() {
        let dx = i as f64 * step - x_mean;
        sxy += dx * (y - y_mean);
        sxx += dx * dx;
    }
    let slope = sxy / sxx;
    Ok(SlopeFit {
        intercept: y_mean - slope * x_mean,
        slope,
    })
}

/// Mutation probability `1.5 - 1 / (1 + exp(-alpha * |slope|))`.
///
/// Evaluated as `0.5 + 1 / (1 + exp(alpha * |slope|))`, which is the same
/// function but keeps resolution near the 0.5 floor. Values of
/// `alpha * |slope|` above roughly 37 round to exactly 0.5 in `f64`.
pub fn ampf(slope: f64, alpha: f64) -> f64 {
    0.5 + 1.0 / (1.0 + (alpha * slope.abs()).exp())
}

/// How the per-pair mutation probability is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MutationSchedule {
    /// Adaptive probability from the slope of the recent fitness history.
    Adaptive(AmpfConfig),
    /// Fixed probability (the epsilon-greedy baseline).
    Constant(f64),
}

impl MutationSchedule {
    /// With fewer than two scores the trend is read as flat, giving 1.0.
    pub fn probability(&self, history: &[f64]) -> f64 {
        match *self {
            MutationSchedule::Constant(p) => p,
            MutationSchedule::Adaptive(cfg) => match fit_slope(history, cfg.window) {
                Ok(fit) => ampf(fit.slope, cfg.alpha),
                Err(_) => 1.0,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            MutationSchedule::Adaptive(cfg) => cfg.validate(),
            MutationSchedule::Constant(p) if (0.0..=1.0).contains(&p) => Ok(()),
            MutationSchedule::Constant(p) => Err(Error::InvalidConfig(format!(
                "mutation probability must lie in [0, 1], got {p}"
            ))),
        }
    }
}

/// Default parent pool: the best quarter of the population, at least 2.
pub fn default_top_n(population: usize) -> usize {
    population.div_ceil(4).max(2)
}

/// Two distinct parents drawn uniformly from the `top_n` fittest individuals.
///
/// Ties in fitness keep population order. `top_n` larger than the population
/// is clamped to it.
pub fn select_parents<R: Rng + ?Sized>(
    population: &[Individual],
    top_n: usize,
    rng: &mut R,
) -> Result<(Chromosome, Chromosome)> {
    if population.len() < 2 {
        return Err(Error::PopulationTooSmall {
            size: population.len(),
        });
    }
    if top_n < 2 {
        return Err(Error::InvalidConfig(format!("top_n must be >= 2, got {top_n}")));
    }
    let pool = top_n.min(population.len());
    let mut order: Vec<usize> = (0..population.len()).collect();
    order.sort_by(|&a, &b| population[a].fitness.total_cmp(&population[b].fitness));
    let picks = index::sample(rng, pool, 2);
    let first = &population[order[picks.index(0)]];
    let second = &population[order[picks.index(1)]];
    Ok((first.chromosome.clone(), second.chromosome.clone()))
}

/// Swaps genes of two parents at a uniformly drawn set of `m ~ U{1..n}`
/// positions.
pub fn multi_crossover<R: Rng + ?Sized>(
    p1: &Chromosome,
    p2: &Chromosome,
    rng: &mut R,
) -> Result<(Chromosome, Chromosome)> {
    if p1.len() != p2.len() {
        return Err(Error::LengthMismatch {
            expected: p1.len(),
            actual: p2.len(),
        });
    }
    let n = p1.len();
    if n == 0 {
        return Ok((p1.clone(), p2.clone()));
    }
    let m = rng.random_range(1..=n);
    let positions = index::sample(rng, n, m).into_vec();
    crossover_at(p1, p2, &positions)
}

/// Exchanges genes of `p1` and `p2` at exactly the given positions.
pub fn crossover_at(
    p1: &Chromosome,
    p2: &Chromosome,
    positions: &[usize],
) -> Result<(Chromosome, Chromosome)> {
    if p1.len() != p2.len() {
        return Err(Error::LengthMismatch {
            expected: p1.len(),
            actual: p2.len(),
        });
    }
    let (mut o1, mut o2) = (p1.clone(), p2.clone());
    for &i in positions {
        if i >= p1.len() {
            return Err(Error::GeneOutOfRange {
                index: i,
                gene: i,
                cardinality: p1.len(),
            });
        }
        std::mem::swap(&mut o1.genes_mut()[i], &mut o2.genes_mut()[i]);
    }
    Ok((o1, o2))
}

/// Resamples `k ~ U{1..n}` distinct genes uniformly over their full grids.
pub fn mutate<R: Rng + ?Sized>(c: &Chromosome, space: &SearchSpace, rng: &mut R) -> Chromosome {
    let mut out = c.clone();
    let n = c.len();
    if n == 0 {
        return out;
    }
    let k = rng.random_range(1..=n);
    for i in index::sample(rng, n, k) {
        let card = space.dimensions()[i].cardinality();
        out.genes_mut()[i] = rng.random_range(0..card) as u8;
    }
    out
}

/// Mutates each offspring independently.
pub fn multi_mutate<R: Rng + ?Sized>(
    o1: &Chromosome,
    o2: &Chromosome,
    space: &SearchSpace,
    rng: &mut R,
) -> (Chromosome, Chromosome) {
    let a = mutate(o1, space, rng);
    let b = mutate(o2, space, rng);
    (a, b)
}

/// Settings shared by every breeding step of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Breeding {
    pub schedule: MutationSchedule,
    pub top_n: usize,
}

/// Result of one genetic generation.
#[derive(Debug, Clone, Default)]
pub struct StepOutcome {
    pub population: Vec<Individual>,
    /// Mutation probability used for each offspring pair, in order.
    pub probabilities: Vec<f64>,
    /// Whether each offspring pair was mutated.
    pub mutated: Vec<bool>,
}

/// Breeds and evaluates `count` offspring from `population`.
///
/// Offspring come in pairs; every evaluation is appended to `memory` before
/// the next pair is bred, so the mutation probability of each pair sees the
/// scores of all earlier pairs. An odd `count` drops the second child of the
/// last pair unevaluated. If `evaluate` fails, the records stored so far stay
/// in `memory` and the error is returned.
pub fn rapid_ga_step<R, F>(
    population: &[Individual],
    count: usize,
    memory: &mut ExperienceMemory,
    space: &SearchSpace,
    breeding: &Breeding,
    rng: &mut R,
    mut evaluate: F,
) -> Result<StepOutcome>
where
    R: Rng + ?Sized,
    F: FnMut(&Chromosome) -> Result<f64>,
{
    let mut out = StepOutcome::default();
    let mut history: Vec<f64> = memory.fitness_history().collect();
    while out.population.len() < count {
        let (p1, p2) = select_parents(population, breeding.top_n, rng)?;
        let (mut o1, mut o2) = multi_crossover(&p1, &p2, rng)?;
        let delta = breeding.schedule.probability(&history);
        // r in (0, 1]: delta = 0 never mutates, delta = 1 always does.
        let r = 1.0 - rng.random::<f64>();
        let mutated = delta >= r;
        if mutated {
            (o1, o2) = multi_mutate(&o1, &o2, space, rng);
        }
        out.probabilities.push(delta);
        out.mutated.push(mutated);
        for child in [o1, o2] {
            if out.population.len() == count {
                break;
            }
            let fitness = evaluate(&child)?;
            memory.push(child.clone(), fitness, Origin::Genetic);
            history.push(fitness);
            out.population.push(Individual::new(child, fitness));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeded_rng;

    /// Coarse-to-fine grid search over (intercept, slope) minimizing the SSE.
    fn sse_grid_oracle(ys: &[f64]) -> (f64, f64) {
        let n = ys.len();
        let xs: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let sse = |b0: f64, b1: f64| -> f64 {
            xs.iter()
                .zip(ys)
                .map(|(x, y)| (y - b0 - b1 * x).powi(2))
                .sum()
        };
        let (mut c0, mut c1, mut half) = (0.0, 0.0, 16.0);
        while half > 1e-10 {
            let mut best = (f64::INFINITY, c0, c1);
            for i in -10..=10 {
                for j in -10..=10 {
                    let b0 = c0 + half * i as f64 / 10.0;
                    let b1 = c1 + half * j as f64 / 10.0;
                    let v = sse(b0, b1);
                    if v < best.0 {
                        best = (v, b0, b1);
                    }
                }
            }
            c0 = best.1;
            c1 = best.2;
            half *= 0.3;
        }
        (c0, c1)
    }

    #[test]
    fn slope_of_collinear_points() {
        let fit = fit_slope(&[1.0, 2.0, 3.0], 10).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12);
        assert!((fit.intercept - 1.0).abs() < 1e-12);
    }

    #[test]
    fn slope_of_constant_scores_is_zero() {
        let fit = fit_slope(&[0.7; 4], 10).unwrap();
        assert_eq!(fit.slope, 0.0);
    }

    #[test]
    fn slope_matches_grid_oracle() {
        let ys = [0.9, 0.5, 0.6, 0.2];
        let fit = fit_slope(&ys, 10).unwrap();
        let (b0, b1) = sse_grid_oracle(&ys);
        assert!((fit.intercept - b0).abs() < 1e-6, "{} vs {b0}", fit.intercept);
        assert!((fit.slope - b1).abs() < 1e-6, "{} vs {b1}", fit.slope);
    }

    #[test]
    fn slope_uses_trailing_window() {
        let fit = fit_slope(&[100.0, -50.0, 1.0, 2.0, 3.0], 3).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12);
    }

    #[test]
    fn slope_needs_two_scores() {
        assert!(matches!(
            fit_slope(&[1.0], 5),
            Err(Error::InsufficientHistory(1))
        ));
        assert!(matches!(
            fit_slope(&[1.0, 2.0, 3.0], 1),
            Err(Error::InsufficientHistory(1))
        ));
    }

    #[test]
    fn ampf_reference_values() {
        assert_eq!(ampf(0.0, 2.0), 1.0);
        assert_eq!(ampf(0.0, 7.5), 1.0);
        // 1.5 - 1/(1 + e^-2)
        assert!((ampf(1.0, 2.0) - 0.619_202_922_022_117_6).abs() < 1e-12);
        assert!((ampf(-1.0, 2.0) - 0.619_202_922_022_117_6).abs() < 1e-12);
        assert!((ampf(1000.0, 2.0) - 0.5).abs() < 1e-6);
    }

    #[test]
    fn constant_schedule_ignores_history() {
        let s = MutationSchedule::Constant(0.5);
        assert_eq!(s.probability(&[3.0, 2.0, 1.0]), 0.5);
        let a = MutationSchedule::Adaptive(AmpfConfig::default());
        assert_eq!(a.probability(&[]), 1.0);
        assert!(MutationSchedule::Constant(1.5).validate().is_err());
        assert!(MutationSchedule::Adaptive(AmpfConfig {
            alpha: 0.5,
            window: 4
        })
        .validate()
        .is_err());
    }

    fn pop(fitness: &[f64]) -> Vec<Individual> {
        fitness
            .iter()
            .enumerate()
            .map(|(i, &f)| Individual::new(Chromosome::new(vec![i as u8]), f))
            .collect()
    }

    #[test]
    fn pair_population_returns_both() {
        let mut rng = seeded_rng(1);
        let p = pop(&[0.3, 0.1]);
        let mut orders = [0usize; 2];
        for _ in 0..200 {
            let (a, b) = select_parents(&p, 2, &mut rng).unwrap();
            assert_ne!(a, b);
            orders[(a.genes()[0] == 0) as usize] += 1;
        }
        assert!(orders[0] > 0 && orders[1] > 0);
    }

    #[test]
    fn pool_restriction() {
        let mut rng = seeded_rng(2);
        let p = pop(&[0.5, 0.1, 0.9, 0.2, 0.7]);
        for _ in 0..500 {
            let (a, b) = select_parents(&p, 2, &mut rng).unwrap();
            for c in [a, b] {
                assert!(c.genes()[0] == 1 || c.genes()[0] == 3);
            }
        }
    }

    #[test]
    fn selection_errors() {
        let mut rng = seeded_rng(3);
        assert!(matches!(
            select_parents(&pop(&[1.0]), 2, &mut rng),
            Err(Error::PopulationTooSmall { size: 1 })
        ));
        assert!(select_parents(&pop(&[1.0, 2.0]), 1, &mut rng).is_err());
    }

    #[test]
    fn full_pool_selection_is_uniform() {
        // Chi-square goodness of fit on 10000 draws over 8 individuals.
        let mut rng = seeded_rng(4);
        let p = pop(&[0.8, 0.1, 0.5, 0.3, 0.9, 0.2, 0.6, 0.4]);
        let mut counts = [0f64; 8];
        let draws = 10_000;
        for _ in 0..draws {
            let (a, b) = select_parents(&p, 8, &mut rng).unwrap();
            counts[a.genes()[0] as usize] += 1.0;
            counts[b.genes()[0] as usize] += 1.0;
        }
        let expected = 2.0 * draws as f64 / 8.0;
        let chi2: f64 = counts.iter().map(|c| (c - expected).powi(2) / expected).sum();
        // chi-square 0.999 quantile at 7 degrees of freedom
        assert!(chi2 < 24.32, "chi2 = {chi2}");
    }

    #[test]
    fn full_swap_and_identical_parents() {
        let p1 = Chromosome::new(vec![1, 2, 3]);
        let p2 = Chromosome::new(vec![4, 5, 6]);
        let (o1, o2) = crossover_at(&p1, &p2, &[0, 1, 2]).unwrap();
        assert_eq!((o1, o2), (p2.clone(), p1.clone()));

        let mut rng = seeded_rng(5);
        for _ in 0..50 {
            let (a, b) = multi_crossover(&p1, &p1, &mut rng).unwrap();
            assert_eq!(a, p1);
            assert_eq!(b, p1);
        }
    }

    #[test]
    fn crossover_length_mismatch() {
        let mut rng = seeded_rng(6);
        let err = multi_crossover(
            &Chromosome::zeros(3),
            &Chromosome::zeros(4),
            &mut rng,
        )
        .unwrap_err();
        assert!(matches!(err, Error::LengthMismatch { .. }));
    }

    #[test]
    fn crossover_preserves_positional_multisets() {
        let space = SearchSpace::indexed(&[16; 9]).unwrap();
        let mut rng = seeded_rng(7);
        for _ in 0..1000 {
            let p1 = space.sample(&mut rng);
            let p2 = space.sample(&mut rng);
            let (o1, o2) = multi_crossover(&p1, &p2, &mut rng).unwrap();
            for i in 0..9 {
                let mut before = [p1.genes()[i], p2.genes()[i]];
                let mut after = [o1.genes()[i], o2.genes()[i]];
                before.sort();
                after.sort();
                assert_eq!(before, after);
            }
        }
    }

    #[test]
    fn mutation_on_singleton_grids_is_identity() {
        let space = SearchSpace::new(vec![
            crate::search_space::Dimension::indexed("a", 1).unwrap(),
            crate::search_space::Dimension::indexed("b", 1).unwrap(),
            crate::search_space::Dimension::indexed("c", 2).unwrap(),
        ])
        .unwrap();
        // only the singleton positions are guaranteed fixed
        let mut rng = seeded_rng(8);
        for _ in 0..100 {
            let c = Chromosome::zeros(3);
            let (a, b) = multi_mutate(&c, &c, &space, &mut rng);
            assert_eq!(&a.genes()[..2], &[0, 0]);
            assert_eq!(&b.genes()[..2], &[0, 0]);
        }
    }

    #[test]
    fn mutation_stays_on_grid() {
        let space = SearchSpace::indexed(&[2, 3, 5, 7, 256]).unwrap();
        let mut rng = seeded_rng(9);
        for _ in 0..1000 {
            let a = space.sample(&mut rng);
            let b = space.sample(&mut rng);
            let (x, y) = multi_mutate(&a, &b, &space, &mut rng);
            assert!(space.contains(&x) && space.contains(&y));
        }
    }

    #[test]
    fn mutation_count_follows_uniform_k() {
        // With cardinality 256 a resample almost always changes the gene, so
        // the changed-gene count tracks k ~ U{1..n}. A resample keeps its
        // value with probability 1/256, giving E[changed] = (n+1)/2 * 255/256.
        let n = 6;
        let space = SearchSpace::indexed(&[256; 6]).unwrap();
        let mut rng = seeded_rng(10);
        let trials = 10_000;
        let mut total = 0usize;
        let mut hist = [0usize; 7];
        for _ in 0..trials {
            let c = space.sample(&mut rng);
            let m = mutate(&c, &space, &mut rng);
            let changed = c
                .genes()
                .iter()
                .zip(m.genes())
                .filter(|(a, b)| a != b)
                .count();
            total += changed;
            hist[changed] += 1;
        }
        let mean = total as f64 / trials as f64;
        let expected = (n as f64 + 1.0) / 2.0 * 255.0 / 256.0;
        assert!((mean - expected).abs() < 0.06, "mean {mean} vs {expected}");
        for (k, &h) in hist.iter().enumerate().skip(1) {
            let freq = h as f64 / trials as f64;
            assert!((freq - 1.0 / n as f64).abs() < 0.03, "k={k} freq={freq}");
        }
    }

    fn sum_objective(c: &Chromosome) -> Result<f64> {
        Ok(c.genes().iter().map(|&g| g as f64).sum())
    }

    fn seeded_population(space: &SearchSpace, size: usize, seed: u64) -> Vec<Individual> {
        let mut rng = seeded_rng(seed);
        (0..size)
            .map(|_| {
                let c = space.sample(&mut rng);
                let f = sum_objective(&c).unwrap();
                Individual::new(c, f)
            })
            .collect()
    }

    #[test]
    fn step_produces_requested_count() {
        let space = SearchSpace::indexed(&[8; 5]).unwrap();
        let population = seeded_population(&space, 10, 11);
        let breeding = Breeding {
            schedule: MutationSchedule::Adaptive(AmpfConfig::default()),
            top_n: 3,
        };
        for count in [1, 7, 10] {
            let mut memory = ExperienceMemory::new();
            let mut rng = seeded_rng(12);
            let out = rapid_ga_step(
                &population,
                count,
                &mut memory,
                &space,
                &breeding,
                &mut rng,
                sum_objective,
            )
            .unwrap();
            assert_eq!(out.population.len(), count);
            assert_eq!(memory.len(), count);
            assert!(memory.records().iter().all(|r| r.origin == Origin::Genetic));
        }
    }

    #[test]
    fn zero_probability_is_pure_crossover() {
        let space = SearchSpace::indexed(&[16; 6]).unwrap();
        let population = seeded_population(&space, 8, 13);
        let breeding = Breeding {
            schedule: MutationSchedule::Constant(0.0),
            top_n: 8,
        };
        let mut memory = ExperienceMemory::new();
        let mut rng = seeded_rng(14);
        let out = rapid_ga_step(
            &population,
            8,
            &mut memory,
            &space,
            &breeding,
            &mut rng,
            sum_objective,
        )
        .unwrap();
        assert!(out.mutated.iter().all(|m| !m));
        // every offspring gene comes from some parent at that position
        for child in &out.population {
            for (i, g) in child.chromosome.genes().iter().enumerate() {
                assert!(population.iter().any(|p| p.chromosome.genes()[i] == *g));
            }
        }
    }

    #[test]
    fn flat_history_always_mutates() {
        let space = SearchSpace::indexed(&[4; 4]).unwrap();
        let population: Vec<_> = (0..4)
            .map(|i| Individual::new(Chromosome::new(vec![i; 4]), 1.0))
            .collect();
        let breeding = Breeding {
            schedule: MutationSchedule::Adaptive(AmpfConfig::default()),
            top_n: 4,
        };
        let mut memory = ExperienceMemory::new();
        for _ in 0..10 {
            memory.push(Chromosome::zeros(4), 1.0, Origin::Random);
        }
        let mut rng = seeded_rng(15);
        let out = rapid_ga_step(
            &population,
            2000,
            &mut memory,
            &space,
            &breeding,
            &mut rng,
            |_| Ok(1.0),
        )
        .unwrap();
        assert_eq!(out.mutated.len(), 1000);
        assert!(out.probabilities.iter().all(|&p| p == 1.0));
        assert!(out.mutated.iter().all(|&m| m));
    }

    #[test]
    fn evaluation_error_keeps_partial_memory() {
        let space = SearchSpace::indexed(&[4; 3]).unwrap();
        let population = seeded_population(&space, 4, 16);
        let breeding = Breeding {
            schedule: MutationSchedule::Constant(0.5),
            top_n: 2,
        };
        let mut memory = ExperienceMemory::new();
        let mut rng = seeded_rng(17);
        let mut calls = 0;
        let err = rapid_ga_step(
            &population,
            4,
            &mut memory,
            &space,
            &breeding,
            &mut rng,
            |c| {
                calls += 1;
                if calls > 3 {
                    Err(Error::BudgetExhausted { budget: 3 })
                } else {
                    sum_objective(c)
                }
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::BudgetExhausted { budget: 3 }));
        assert_eq!(memory.len(), 3);
    }
}
