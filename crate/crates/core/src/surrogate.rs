//! Exploitation: surrogate models of the fitness landscape and the
//! random-direction hill-climbing acquisition that searches them.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::memory::ExperienceMemory;
use crate::regression::{dot, fit_affine, matrix_rank, AffineMap};
use crate::search_space::{Chromosome, SearchSpace};

/// Default ridge regularizer for surrogate training.
pub const DEFAULT_RIDGE: f64 = 1e-8;
/// Redraws allowed when a random direction comes out all-zero.
pub const DIRECTION_REDRAWS: usize = 8;

/// Anything that predicts fitness from normalized genes.
pub trait Predictor {
    fn predict_features(&self, x: &[f64]) -> f64;

    fn predict(&self, space: &SearchSpace, c: &Chromosome) -> f64 {
        self.predict_features(&space.normalize_unchecked(c))
    }
}

/// Affine fitness model on normalized chromosomes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSurrogate {
    pub weights: Vec<f64>,
    pub intercept: f64,
    /// Regularizer used in training (after any singularity fallback).
    pub ridge: f64,
    pub n_train: usize,
}

impl LinearSurrogate {
    pub fn new(weights: Vec<f64>, intercept: f64) -> Self {
        Self {
            weights,
            intercept,
            ridge: 0.0,
            n_train: 0,
        }
    }

    /// JSON dump for inspection.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("surrogate serializes")
    }
}

impl Predictor for LinearSurrogate {
    fn predict_features(&self, x: &[f64]) -> f64 {
        self.intercept + dot(&self.weights, x)
    }
}

fn forward_design(memory: &ExperienceMemory, space: &SearchSpace) -> Design {
    memory
        .records()
        .iter()
        .map(|r| (space.normalize_unchecked(&r.chromosome), vec![r.fitness]))
        .unzip()
}

/// Ridge least-squares fit of fitness on normalized genes, with intercept.
pub fn train_linear(
    memory: &ExperienceMemory,
    space: &SearchSpace,
    ridge: f64,
) -> Result<LinearSurrogate> {
    if memory.is_empty() {
        return Err(Error::EmptyMemory);
    }
    for r in memory.records() {
        space.validate(&r.chromosome)?;
    }
    let (inputs, outputs) = forward_design(memory, space);
    let fit = fit_affine(&inputs, &outputs, ridge)?;
    let AffineMap {
        mut weights,
        intercepts,
    } = fit.map;
    Ok(LinearSurrogate {
        weights: weights.swap_remove(0),
        intercept: intercepts[0],
        ridge: fit.ridge,
        n_train: memory.len(),
    })
}

/// k-nearest-neighbour regressor on normalized genes; the nonlinear
/// alternative to [`LinearSurrogate`].
#[derive(Debug, Clone, PartialEq)]
pub struct KnnSurrogate {
    k: usize,
    points: Vec<Vec<f64>>,
    targets: Vec<f64>,
}

impl KnnSurrogate {
    pub fn train(memory: &ExperienceMemory, space: &SearchSpace, k: usize) -> Result<Self> {
        if memory.is_empty() {
            return Err(Error::EmptyMemory);
        }
        if k == 0 {
            return Err(Error::InvalidConfig("knn k must be >= 1".into()));
        }
        let (points, targets) = memory
            .records()
            .iter()
            .map(|r| (space.normalize_unchecked(&r.chromosome), r.fitness))
            .unzip();
        Ok(Self { k, points, targets })
    }
}

impl Predictor for KnnSurrogate {
    fn predict_features(&self, x: &[f64]) -> f64 {
        let mut dist: Vec<(f64, usize)> = self
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| (p.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum(), i))
            .collect();
        dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let k = self.k.min(dist.len());
        dist[..k].iter().map(|&(_, i)| self.targets[i]).sum::<f64>() / k as f64
    }
}

/// Regressor backing the exploitation step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SurrogateKind {
    #[default]
    Linear,
    Knn { k: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrainedSurrogate {
    Linear(LinearSurrogate),
    Knn(KnnSurrogate),
}

impl TrainedSurrogate {
    pub fn train(
        kind: SurrogateKind,
        memory: &ExperienceMemory,
        space: &SearchSpace,
        ridge: f64,
    ) -> Result<Self> {
        Ok(match kind {
            SurrogateKind::Linear => Self::Linear(train_linear(memory, space, ridge)?),
            SurrogateKind::Knn { k } => Self::Knn(KnnSurrogate::train(memory, space, k)?),
        })
    }
}

impl Predictor for TrainedSurrogate {
    fn predict_features(&self, x: &[f64]) -> f64 {
        match self {
            Self::Linear(s) => s.predict_features(x),
            Self::Knn(s) => s.predict_features(x),
        }
    }
}

/// Random-direction hill-climbing parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RhcConfig {
    /// Random directions tried per seed.
    pub steps: usize,
    /// Elite individuals used as starting points.
    pub seeds: usize,
    /// Cap on accepted moves along one direction.
    pub max_climb: usize,
}

impl Default for RhcConfig {
    fn default() -> Self {
        Self {
            steps: 8,
            seeds: 10,
            max_climb: 64,
        }
    }
}

impl RhcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 || self.seeds == 0 || self.max_climb == 0 {
            return Err(Error::InvalidConfig(format!(
                "rhc steps, seeds and max_climb must all be >= 1, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Direction in `{-1, 0, 1}^n`, redrawn up to [`DIRECTION_REDRAWS`] times
/// while it is all zero.
pub fn draw_direction<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<i8> {
    let mut d: Vec<i8> = (0..n).map(|_| rng.random_range(-1..=1)).collect();
    for _ in 0..DIRECTION_REDRAWS {
        if d.iter().any(|&x| x != 0) {
            break;
        }
        d.iter_mut().for_each(|x| *x = rng.random_range(-1..=1));
    }
    d
}

/// `u - d` with every gene clamped into its grid.
pub fn step(space: &SearchSpace, u: &Chromosome, d: &[i8]) -> Chromosome {
    let genes = u
        .genes()
        .iter()
        .zip(d)
        .zip(space.cardinalities())
        .map(|((&g, &di), card)| (g as i32 - di as i32).clamp(0, card as i32 - 1) as u8)
        .collect();
    Chromosome::new(genes)
}

/// One climb along a fixed direction.
#[derive(Debug, Clone, PartialEq)]
pub struct Walk {
    pub seed_index: usize,
    pub start: Chromosome,
    pub start_score: f64,
    pub direction: Vec<i8>,
    /// Accepted points with their predicted scores, in order.
    pub accepted: Vec<(Chromosome, f64)>,
    /// Surrogate evaluations of trial points along this direction.
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RhcOutcome {
    pub candidates: Vec<Chromosome>,
    pub walks: Vec<Walk>,
}

/// Climbs along `direction` from `start` while the prediction strictly
/// improves, at most `max_climb` accepted moves.
pub fn climb<P: Predictor + ?Sized>(
    predictor: &P,
    space: &SearchSpace,
    start: &Chromosome,
    start_score: f64,
    direction: &[i8],
    max_climb: usize,
) -> (Vec<(Chromosome, f64)>, usize) {
    let mut accepted = Vec::new();
    let mut trials = 0;
    let mut u = start.clone();
    let mut best = start_score;
    while accepted.len() < max_climb {
        let h = step(space, &u, direction);
        if h == u {
            break;
        }
        let r = predictor.predict(space, &h);
        trials += 1;
        if r < best {
            best = r;
            u = h.clone();
            accepted.push((h, r));
        } else {
            break;
        }
    }
    (accepted, trials)
}

/// Random-direction hill-climbing over a surrogate.
///
/// Each seed carries its position across its `steps` directions; the
/// incumbent score restarts at the prediction of the current position for
/// every new direction. All accepted waypoints are candidates; the
/// `seeds.len()` best distinct ones are returned, topped up with the seeds
/// themselves when too few moves were accepted.
pub fn rhc_traced<P, R>(
    predictor: &P,
    space: &SearchSpace,
    seeds: &[Chromosome],
    cfg: &RhcConfig,
    rng: &mut R,
) -> RhcOutcome
where
    P: Predictor + ?Sized,
    R: Rng + ?Sized,
{
    let n = space.n_genes();
    let mut walks = Vec::new();
    let mut collected: Vec<(Chromosome, f64)> = Vec::new();
    for (seed_index, seed) in seeds.iter().enumerate() {
        let mut u = seed.clone();
        let mut score = predictor.predict(space, &u);
        for _ in 0..cfg.steps {
            let direction = draw_direction(n, rng);
            let (accepted, trials) = climb(predictor, space, &u, score, &direction, cfg.max_climb);
            let start = u.clone();
            let start_score = score;
            if let Some((last, s)) = accepted.last() {
                u = last.clone();
                score = *s;
            }
            collected.extend(accepted.iter().cloned());
            walks.push(Walk {
                seed_index,
                start,
                start_score,
                direction,
                accepted,
                trials,
            });
        }
    }
    let candidates = select_candidates(collected, seeds);
    RhcOutcome { candidates, walks }
}

fn select_candidates(mut collected: Vec<(Chromosome, f64)>, seeds: &[Chromosome]) -> Vec<Chromosome> {
    let want = seeds.len();
    collected.sort_by(|a, b| a.1.total_cmp(&b.1));
    let mut out: Vec<Chromosome> = Vec::with_capacity(want);
    for (c, _) in collected {
        if out.len() == want {
            return out;
        }
        if !out.contains(&c) {
            out.push(c);
        }
    }
    for s in seeds {
        if out.len() == want {
            return out;
        }
        if !out.contains(s) {
            out.push(s.clone());
        }
    }
    out.extend(seeds.iter().cycle().take(want - out.len()).cloned());
    out
}

pub fn rhc<P, R>(
    predictor: &P,
    space: &SearchSpace,
    seeds: &[Chromosome],
    cfg: &RhcConfig,
    rng: &mut R,
) -> Vec<Chromosome>
where
    P: Predictor + ?Sized,
    R: Rng + ?Sized,
{
    rhc_traced(predictor, space, seeds, cfg, rng).candidates
}

/// Train a linear surrogate on `memory`, seed hill-climbing with the
/// `cfg.seeds` best distinct chromosomes, and return the best estimates.
pub fn rhclm<R: Rng + ?Sized>(
    memory: &ExperienceMemory,
    space: &SearchSpace,
    cfg: &RhcConfig,
    ridge: f64,
    rng: &mut R,
) -> Result<Vec<Chromosome>> {
    rhclm_with(SurrogateKind::Linear, memory, space, cfg, ridge, rng)
}

pub fn rhclm_with<R: Rng + ?Sized>(
    kind: SurrogateKind,
    memory: &ExperienceMemory,
    space: &SearchSpace,
    cfg: &RhcConfig,
    ridge: f64,
    rng: &mut R,
) -> Result<Vec<Chromosome>> {
    let surrogate = TrainedSurrogate::train(kind, memory, space, ridge)?;
    let seeds = memory.elite_distinct(cfg.seeds);
    Ok(rhc(&surrogate, space, &seeds, cfg, rng))
}

/// Arity of a score/configuration surrogate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReversedMode {
    /// Forward model: genes to score.
    Miso,
    /// Reversed model: score to genes.
    Simo,
    /// Reversed model with identifier: (score, tau) to (genes, tau).
    Mimo,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReversedSurrogate {
    pub mode: ReversedMode,
    pub map: AffineMap,
    /// Per-record identifiers drawn from U(0, 1); empty unless MIMO.
    pub identifiers: Vec<f64>,
    pub ridge: f64,
}

/// Row-major inputs and outputs of a regression.
pub type Design = (Vec<Vec<f64>>, Vec<Vec<f64>>);

/// Inputs and outputs of the regression for `mode`. MIMO needs one
/// identifier per record.
pub fn reversed_design(
    memory: &ExperienceMemory,
    space: &SearchSpace,
    mode: ReversedMode,
    identifiers: &[f64],
) -> Result<Design> {
    if memory.is_empty() {
        return Err(Error::EmptyMemory);
    }
    if mode == ReversedMode::Mimo && identifiers.len() != memory.len() {
        return Err(Error::LengthMismatch {
            expected: memory.len(),
            actual: identifiers.len(),
        });
    }
    let genes = |c: &Chromosome| c.genes().iter().map(|&g| g as f64).collect::<Vec<_>>();
    Ok(match mode {
        ReversedMode::Miso => forward_design(memory, space),
        ReversedMode::Simo => memory
            .records()
            .iter()
            .map(|r| (vec![r.fitness], genes(&r.chromosome)))
            .unzip(),
        ReversedMode::Mimo => memory
            .records()
            .iter()
            .zip(identifiers)
            .map(|(r, &tau)| {
                let mut out = genes(&r.chromosome);
                out.push(tau);
                (vec![r.fitness, tau], out)
            })
            .unzip(),
    })
}

/// Rank of the design matrix `[1 | inputs]` for `mode`.
pub fn design_rank(
    memory: &ExperienceMemory,
    space: &SearchSpace,
    mode: ReversedMode,
    identifiers: &[f64],
) -> Result<usize> {
    let (inputs, _) = reversed_design(memory, space, mode, identifiers)?;
    let rows: Vec<Vec<f64>> = inputs
        .into_iter()
        .map(|x| std::iter::once(1.0).chain(x).collect())
        .collect();
    Ok(matrix_rank(&rows))
}

pub fn train_reversed<R: Rng + ?Sized>(
    memory: &ExperienceMemory,
    space: &SearchSpace,
    mode: ReversedMode,
    ridge: f64,
    rng: &mut R,
) -> Result<ReversedSurrogate> {
    let identifiers: Vec<f64> = match mode {
        ReversedMode::Mimo => (0..memory.len()).map(|_| rng.random::<f64>()).collect(),
        _ => Vec::new(),
    };
    train_reversed_with(memory, space, mode, identifiers, ridge)
}

/// As [`train_reversed`] with caller-supplied identifiers.
pub fn train_reversed_with(
    memory: &ExperienceMemory,
    space: &SearchSpace,
    mode: ReversedMode,
    identifiers: Vec<f64>,
    ridge: f64,
) -> Result<ReversedSurrogate> {
    for r in memory.records() {
        space.validate(&r.chromosome)?;
    }
    let (inputs, outputs) = reversed_design(memory, space, mode, &identifiers)?;
    let fit = fit_affine(&inputs, &outputs, ridge)?;
    Ok(ReversedSurrogate {
        mode,
        map: fit.map,
        identifiers,
        ridge: fit.ridge,
    })
}

/// Rounds half away from zero and clamps into the grid.
fn to_gene(x: f64, cardinality: usize) -> u8 {
    if x.is_nan() {
        return 0;
    }
    x.round().clamp(0.0, (cardinality - 1) as f64) as u8
}

/// Configuration the surrogate associates with `target_score`.
///
/// Reversed modes evaluate the map directly (MIMO with a fresh identifier).
/// The forward MISO model is inverted by coordinate descent on
/// `|prediction - target|` starting from the all-zero chromosome.
pub fn query_reversed<R: Rng + ?Sized>(
    model: &ReversedSurrogate,
    space: &SearchSpace,
    target_score: f64,
    rng: &mut R,
) -> Chromosome {
    let cards: Vec<usize> = space.cardinalities().collect();
    match model.mode {
        ReversedMode::Simo | ReversedMode::Mimo => {
            let input = if model.mode == ReversedMode::Mimo {
                vec![target_score, rng.random::<f64>()]
            } else {
                vec![target_score]
            };
            let out = model.map.apply(&input);
            Chromosome::new(
                cards
                    .iter()
                    .zip(&out)
                    .map(|(&card, &x)| to_gene(x, card))
                    .collect(),
            )
        }
        ReversedMode::Miso => {
            let forward = LinearSurrogate::new(model.map.weights[0].clone(), model.map.intercepts[0]);
            let gap = |c: &Chromosome| (forward.predict(space, c) - target_score).abs();
            let mut c = Chromosome::zeros(cards.len());
            for _ in 0..4 {
                let mut changed = false;
                for (i, &card) in cards.iter().enumerate() {
                    let mut best = (gap(&c), c.genes()[i]);
                    for g in 0..card as u8 {
                        c.genes_mut()[i] = g;
                        let v = gap(&c);
                        if v < best.0 {
                            best = (v, g);
                        }
                    }
                    changed |= best.1 != c.genes()[i];
                    c.genes_mut()[i] = best.1;
                }
                if !changed {
                    break;
                }
            }
            c
        }
    }
}
