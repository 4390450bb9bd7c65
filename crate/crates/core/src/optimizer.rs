//! Generational drivers: the hybrid genetic/surrogate optimizer and its
//! baselines.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::bench::trace::RunTrace;
use crate::error::{Error, Result};
use crate::genetic::{default_top_n, rapid_ga_step, AmpfConfig, Breeding, Individual, MutationSchedule};
use crate::memory::{ExperienceMemory, Origin};
use crate::search_space::{Chromosome, SearchSpace};
use crate::surrogate::{rhclm_with, RhcConfig, SurrogateKind, DEFAULT_RIDGE};
use crate::{seeded_rng, Rng};

/// A black-box fitness function; lower is better.
///
/// `draw` identifies the evaluation within a run so stochastic objectives can
/// be reproducible. Deterministic objectives ignore it.
pub trait Objective: Sync {
    fn evaluate(&self, chromosome: &Chromosome, draw: u64) -> f64;
}

impl<F> Objective for F
where
    F: Fn(&Chromosome) -> f64 + Sync,
{
    fn evaluate(&self, chromosome: &Chromosome, _draw: u64) -> f64 {
        self(chromosome)
    }
}

/// Counts evaluations, refuses to go past the budget and rejects non-finite values.
pub struct BudgetedObjective<'a> {
    objective: &'a dyn Objective,
    budget: usize,
    count: usize,
    stream: u64,
}

impl<'a> BudgetedObjective<'a> {
    pub fn new(objective: &'a dyn Objective, budget: usize, stream: u64) -> Self {
        Self {
            objective,
            budget,
            count: 0,
            stream,
        }
    }

    pub fn evaluate(&mut self, c: &Chromosome) -> Result<f64> {
        if self.count >= self.budget {
            return Err(Error::BudgetExhausted {
                budget: self.budget,
            });
        }
        let draw = self
            .stream
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(self.count as u64);
        let value = self.objective.evaluate(c, draw);
        if !value.is_finite() {
            return Err(Error::NonFiniteFitness {
                value,
                eval_index: self.count,
            });
        }
        self.count += 1;
        Ok(value)
    }

    pub fn eval_count(&self) -> usize {
        self.count
    }

    pub fn budget(&self) -> usize {
        self.budget
    }
}

/// Settings of the generational optimizers.
///
/// Optional fields resolve to defaults derived from `population`; see the
/// accessor of each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RghlConfig {
    pub population: usize,
    pub generations: usize,
    /// Surrogate candidates per generation; defaults to half the population.
    pub exploit_count: Option<usize>,
    /// Parent pool size; defaults to a quarter of the population (min 2).
    pub top_n: Option<usize>,
    pub alpha: f64,
    /// Slope-fit window; defaults to twice the population.
    pub window: Option<usize>,
    pub rhc_steps: usize,
    /// Hill-climbing start points; defaults to `exploit_count`.
    pub rhc_seeds: Option<usize>,
    pub max_climb: usize,
    pub ridge: f64,
    pub surrogate: SurrogateKind,
    pub seed: u64,
    /// Evaluation cap; defaults to `population * (generations + 1)`.
    pub budget: Option<usize>,
}

impl Default for RghlConfig {
    fn default() -> Self {
        Self {
            population: 20,
            generations: 14,
            exploit_count: None,
            top_n: None,
            alpha: 2.0,
            window: None,
            rhc_steps: RhcConfig::default().steps,
            rhc_seeds: None,
            max_climb: RhcConfig::default().max_climb,
            ridge: DEFAULT_RIDGE,
            surrogate: SurrogateKind::Linear,
            seed: 0,
            budget: None,
        }
    }
}

impl RghlConfig {
    pub fn exploit_count(&self) -> usize {
        self.exploit_count.unwrap_or(self.population / 2)
    }

    pub fn top_n(&self) -> usize {
        self.top_n.unwrap_or_else(|| default_top_n(self.population))
    }

    pub fn ampf(&self) -> AmpfConfig {
        AmpfConfig {
            alpha: self.alpha,
            window: self.window.unwrap_or(2 * self.population),
        }
    }

    pub fn rhc(&self) -> RhcConfig {
        RhcConfig {
            steps: self.rhc_steps,
            seeds: self.rhc_seeds.unwrap_or_else(|| self.exploit_count().max(1)),
            max_climb: self.max_climb,
        }
    }

    pub fn budget(&self) -> usize {
        self.budget
            .unwrap_or(self.population * (self.generations + 1))
    }

    /// Same config with every optional field filled in.
    pub fn resolved(&self) -> Self {
        let rhc = self.rhc();
        Self {
            exploit_count: Some(self.exploit_count()),
            top_n: Some(self.top_n()),
            window: Some(self.ampf().window),
            rhc_seeds: Some(rhc.seeds),
            budget: Some(self.budget()),
            ..self.clone()
        }
    }

    fn validate_common(&self) -> Result<()> {
        let psi = self.population;
        if psi < 4 || !psi.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!(
                "population must be even and >= 4, got {psi}"
            )));
        }
        let top_n = self.top_n();
        if top_n < 2 || top_n > psi {
            return Err(Error::InvalidConfig(format!(
                "top_n must lie in [2, {psi}], got {top_n}"
            )));
        }
        if self.ridge.is_nan() || self.ridge < 0.0 {
            return Err(Error::InvalidConfig(format!("ridge must be >= 0, got {}", self.ridge)));
        }
        if self.budget() == 0 {
            return Err(Error::InvalidConfig("budget must be >= 1".into()));
        }
        if let SurrogateKind::Knn { k: 0 } = self.surrogate {
            return Err(Error::InvalidConfig("knn k must be >= 1".into()));
        }
        self.ampf().validate()
    }

    /// Checks the hybrid-optimizer invariants, including `1 <= exploit < population`.
    pub fn validate(&self) -> Result<()> {
        self.validate_common()?;
        let xi = self.exploit_count();
        if xi == 0 || xi >= self.population {
            return Err(Error::InvalidConfig(format!(
                "exploit_count must lie in [1, {}), got {xi}",
                self.population
            )));
        }
        self.rhc().validate()
    }
}

/// Optimization strategy, as named in run configs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Strategy {
    Rghl,
    RandomSearch,
    GaEg { epsilon: f64 },
    RapidGa,
}

impl Strategy {
    pub fn label(&self) -> String {
        match self {
            Strategy::Rghl => "rghl".into(),
            Strategy::RandomSearch => "random_search".into(),
            Strategy::GaEg { epsilon } => format!("ga_eg{epsilon}"),
            Strategy::RapidGa => "rapid_ga".into(),
        }
    }

    /// Checks `cfg` the way [`Strategy::run`] would, without running.
    pub fn validate(&self, cfg: &RghlConfig) -> Result<()> {
        match *self {
            Strategy::Rghl => cfg.validate(),
            Strategy::RandomSearch => match cfg.budget() {
                0 => Err(Error::InvalidConfig("budget must be >= 1".into())),
                _ => Ok(()),
            },
            Strategy::GaEg { epsilon } => {
                cfg.validate_common()?;
                MutationSchedule::Constant(epsilon).validate()
            }
            Strategy::RapidGa => cfg.validate_common(),
        }
    }

    /// Runs under `cfg`; generational strategies use `cfg.budget()` and the
    /// random search spends exactly that budget.
    pub fn run(&self, objective: &dyn Objective, space: &SearchSpace, cfg: &RghlConfig) -> Result<RunOutcome> {
        match *self {
            Strategy::Rghl => run_rghl(objective, space, cfg),
            Strategy::RandomSearch => run_random_search(objective, space, cfg.budget(), cfg.seed),
            Strategy::GaEg { epsilon } => run_ga_eg(objective, space, cfg, epsilon),
            Strategy::RapidGa => run_rapid_ga(objective, space, cfg),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub best: Chromosome,
    pub best_fitness: f64,
    pub memory: ExperienceMemory,
    pub trace: RunTrace,
    /// Mutation probability of every bred offspring pair, in order.
    pub mutation_probabilities: Vec<f64>,
    pub generations_completed: usize,
    /// The budget ran out before the configured generations finished.
    pub truncated: bool,
}

fn finish(
    label: &str,
    seed: u64,
    memory: ExperienceMemory,
    started: Instant,
    mutation_probabilities: Vec<f64>,
    generations_completed: usize,
    truncated: bool,
) -> Result<RunOutcome> {
    let best = memory.best().ok_or(Error::EmptyMemory)?;
    let (best, best_fitness) = (best.chromosome.clone(), best.fitness);
    let mut trace = RunTrace::from_memory(label, seed, &memory);
    trace.wall_time_sec = started.elapsed().as_secs_f64();
    Ok(RunOutcome {
        best,
        best_fitness,
        memory,
        trace,
        mutation_probabilities,
        generations_completed,
        truncated,
    })
}

/// Hybrid optimizer: each generation breeds `population - exploit_count`
/// offspring genetically and adds `exploit_count` surrogate candidates, all
/// evaluated with the true objective.
pub fn run_rghl(objective: &dyn Objective, space: &SearchSpace, cfg: &RghlConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    run_generational(
        objective,
        space,
        cfg,
        MutationSchedule::Adaptive(cfg.ampf()),
        cfg.exploit_count(),
        "rghl",
    )
}

/// Pure rapid genetic exploration (no surrogate candidates).
pub fn run_rapid_ga(objective: &dyn Objective, space: &SearchSpace, cfg: &RghlConfig) -> Result<RunOutcome> {
    cfg.validate_common()?;
    run_generational(
        objective,
        space,
        cfg,
        MutationSchedule::Adaptive(cfg.ampf()),
        0,
        "rapid_ga",
    )
}

/// Rapid GA with a constant mutation probability `epsilon`.
pub fn run_ga_eg(
    objective: &dyn Objective,
    space: &SearchSpace,
    cfg: &RghlConfig,
    epsilon: f64,
) -> Result<RunOutcome> {
    cfg.validate_common()?;
    let schedule = MutationSchedule::Constant(epsilon);
    schedule.validate()?;
    run_generational(objective, space, cfg, schedule, 0, "ga_eg")
}

/// Shared generational loop behind [`run_rghl`], [`run_rapid_ga`] and
/// [`run_ga_eg`]. `exploit_count = 0` skips the surrogate entirely.
///
/// Running out of budget ends the run early with `truncated` set.
pub fn run_generational(
    objective: &dyn Objective,
    space: &SearchSpace,
    cfg: &RghlConfig,
    schedule: MutationSchedule,
    exploit_count: usize,
    label: &str,
) -> Result<RunOutcome> {
    let started = Instant::now();
    let psi = cfg.population;
    if exploit_count >= psi {
        return Err(Error::InvalidConfig(format!(
            "exploit_count {exploit_count} must be below population {psi}"
        )));
    }
    let mut rng: Rng = seeded_rng(cfg.seed);
    let mut eval = BudgetedObjective::new(objective, cfg.budget(), cfg.seed);
    let mut memory = ExperienceMemory::new();
    let mut probabilities = Vec::new();
    let mut truncated = false;
    let mut completed = 0;

    let breeding = Breeding {
        schedule,
        top_n: cfg.top_n(),
    };
    let rhc = cfg.rhc();

    let mut population = Vec::with_capacity(psi);
    for _ in 0..psi {
        let c = space.sample(&mut rng);
        match eval.evaluate(&c) {
            Ok(f) => {
                memory.push(c.clone(), f, Origin::Random);
                population.push(Individual::new(c, f));
            }
            Err(Error::BudgetExhausted { .. }) => {
                truncated = true;
                break;
            }
            Err(e) => return Err(e),
        }
    }

    'generations: for _ in 0..cfg.generations {
        if truncated {
            break;
        }
        let step = rapid_ga_step(
            &population,
            psi - exploit_count,
            &mut memory,
            space,
            &breeding,
            &mut rng,
            |c| eval.evaluate(c),
        );
        let mut next = match step {
            Ok(step) => {
                probabilities.extend(step.probabilities);
                step.population
            }
            Err(Error::BudgetExhausted { .. }) => {
                truncated = true;
                break;
            }
            Err(e) => return Err(e),
        };
        if exploit_count > 0 {
            let candidates = rhclm_with(cfg.surrogate, &memory, space, &rhc, cfg.ridge, &mut rng)?;
            for c in candidates.iter().cycle().take(exploit_count) {
                match eval.evaluate(c) {
                    Ok(f) => {
                        memory.push(c.clone(), f, Origin::Surrogate);
                        next.push(Individual::new(c.clone(), f));
                    }
                    Err(Error::BudgetExhausted { .. }) => {
                        truncated = true;
                        break 'generations;
                    }
                    Err(e) => return Err(e),
                }
            }
        }
        population = next;
        completed += 1;
    }

    finish(label, cfg.seed, memory, started, probabilities, completed, truncated)
}

/// `budget` independent uniform samples.
pub fn run_random_search(
    objective: &dyn Objective,
    space: &SearchSpace,
    budget: usize,
    seed: u64,
) -> Result<RunOutcome> {
    if budget == 0 {
        return Err(Error::InvalidConfig("budget must be >= 1".into()));
    }
    let started = Instant::now();
    let mut rng: Rng = seeded_rng(seed);
    let mut eval = BudgetedObjective::new(objective, budget, seed);
    let mut memory = ExperienceMemory::new();
    for _ in 0..budget {
        let c = space.sample(&mut rng);
        let f = eval.evaluate(&c)?;
        memory.push(c, f, Origin::Random);
    }
    finish("random_search", seed, memory, started, Vec::new(), 0, false)
}
