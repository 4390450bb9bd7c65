//! Repeated, seeded runs of several strategies on one objective.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::curves::AggregateCurves;
use super::stats::{compute_ci, mean};
use super::trace::RunTrace;
use crate::error::{Error, Result};
use crate::optimizer::{Objective, RghlConfig, RunOutcome, Strategy};
use crate::search_space::SearchSpace;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyEntry {
    pub name: String,
    pub strategy: Strategy,
}

impl StrategyEntry {
    pub fn new(strategy: Strategy) -> Self {
        Self {
            name: strategy.label(),
            strategy,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub strategies: Vec<StrategyEntry>,
    /// Shared optimizer settings; seed, budget and generations are set per run.
    pub optimizer: RghlConfig,
    pub budget: usize,
    pub repeats: usize,
    pub base_seed: u64,
    /// Worker threads; 0 uses all available cores.
    pub jobs: usize,
    pub config_digest: Option<String>,
}

impl ExperimentSpec {
    /// Settings of repeat `repeat`: seed `base_seed + repeat` (shared by every
    /// strategy), the experiment budget, and as many generations as the
    /// budget can start.
    pub fn run_config(&self, repeat: usize) -> RghlConfig {
        let psi = self.optimizer.population.max(1);
        RghlConfig {
            seed: self.base_seed.wrapping_add(repeat as u64),
            budget: Some(self.budget),
            generations: self.budget.div_ceil(psi).saturating_sub(1),
            ..self.optimizer.clone()
        }
    }

    /// Rejects specs that would fail before any run starts.
    pub fn validate(&self) -> Result<()> {
        if self.repeats == 0 {
            return Err(Error::InvalidConfig("repeats must be >= 1".into()));
        }
        if self.budget == 0 {
            return Err(Error::InvalidConfig("budget must be >= 1".into()));
        }
        if self.strategies.is_empty() {
            return Err(Error::InvalidConfig("no strategies configured".into()));
        }
        for (i, s) in self.strategies.iter().enumerate() {
            if self.strategies[..i].iter().any(|o| o.name == s.name) {
                return Err(Error::InvalidConfig(format!("duplicate strategy name `{}`", s.name)));
            }
            if let Err(e) = s.strategy.validate(&self.run_config(0)) {
                let detail = match e {
                    Error::InvalidConfig(m) => m,
                    other => other.to_string(),
                };
                return Err(Error::InvalidConfig(format!("strategy `{}`: {detail}", s.name)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub runs: usize,
    pub mean_final_best: f64,
    pub ci90_half_width: f64,
    pub ci95_half_width: f64,
    pub ci99_half_width: f64,
    pub mean_wall_time_sec: f64,
}

#[derive(Debug, Clone)]
pub struct StrategyResult {
    pub name: String,
    pub strategy: Strategy,
    /// One trace per repeat, in repeat order.
    pub traces: Vec<RunTrace>,
    pub final_best: Vec<f64>,
    pub curves: AggregateCurves,
    pub summary: Summary,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub budget: usize,
    pub repeats: usize,
    pub strategies: Vec<StrategyResult>,
}

impl ExperimentResult {
    /// Strategy indices by ascending mean final best; ties keep config order.
    pub fn ranking(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.strategies.len()).collect();
        order.sort_by(|&a, &b| {
            self.strategies[a]
                .summary
                .mean_final_best
                .total_cmp(&self.strategies[b].summary.mean_final_best)
        });
        order
    }
}

/// An experiment aborted by a failing run, with the traces that finished.
#[derive(Debug, Error)]
#[error("{error}")]
pub struct ExperimentFailure {
    pub error: Error,
    pub completed: Vec<RunTrace>,
}

impl From<Error> for ExperimentFailure {
    fn from(error: Error) -> Self {
        Self {
            error,
            completed: Vec::new(),
        }
    }
}

/// Runs every strategy `repeats` times and aggregates the traces.
///
/// Repeats may run in parallel; results are ordered by (strategy, repeat)
/// whatever the completion order.
pub fn run_experiment(
    spec: &ExperimentSpec,
    objective: &dyn Objective,
    space: &SearchSpace,
) -> std::result::Result<ExperimentResult, ExperimentFailure> {
    spec.validate()?;
    let tasks: Vec<(usize, usize)> = (0..spec.strategies.len())
        .flat_map(|s| (0..spec.repeats).map(move |r| (s, r)))
        .collect();
    let run = |&(s, r): &(usize, usize)| -> Result<RunOutcome> {
        let entry = &spec.strategies[s];
        let cfg = spec.run_config(r);
        entry
            .strategy
            .run(objective, space, &cfg)
            .map_err(|e| Error::RunFailed {
                strategy: entry.name.clone(),
                repeat: r,
                message: e.to_string(),
            })
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.jobs)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    let outcomes: Vec<Result<RunOutcome>> = pool.install(|| tasks.par_iter().map(run).collect());

    let mut traces: Vec<RunTrace> = Vec::with_capacity(outcomes.len());
    let mut first_error = None;
    for (task, outcome) in tasks.iter().zip(outcomes) {
        match outcome {
            Ok(out) => {
                let mut trace = out.trace;
                trace.strategy = spec.strategies[task.0].name.clone();
                trace.config_digest = spec.config_digest.clone();
                traces.push(trace);
            }
            Err(e) => {
                first_error.get_or_insert(e);
            }
        }
    }
    if let Some(error) = first_error {
        return Err(ExperimentFailure {
            error,
            completed: traces,
        });
    }

    let mut strategies = Vec::with_capacity(spec.strategies.len());
    let mut traces = traces.into_iter();
    for entry in &spec.strategies {
        let runs: Vec<RunTrace> = traces.by_ref().take(spec.repeats).collect();
        strategies.push(summarize(entry, runs, spec.budget)?);
    }
    Ok(ExperimentResult {
        budget: spec.budget,
        repeats: spec.repeats,
        strategies,
    })
}

fn summarize(entry: &StrategyEntry, traces: Vec<RunTrace>, budget: usize) -> Result<StrategyResult> {
    let curves = AggregateCurves::from_traces(&traces, budget)?;
    let final_best: Vec<f64> = traces
        .iter()
        .map(|t| t.final_best().unwrap_or(f64::NAN))
        .collect();
    let wall: Vec<f64> = traces.iter().map(|t| t.wall_time_sec).collect();
    let summary = Summary {
        runs: traces.len(),
        mean_final_best: mean(&final_best),
        ci90_half_width: compute_ci(&final_best, 0.90)?.half_width,
        ci95_half_width: compute_ci(&final_best, 0.95)?.half_width,
        ci99_half_width: compute_ci(&final_best, 0.99)?.half_width,
        mean_wall_time_sec: mean(&wall),
    };
    Ok(StrategyResult {
        name: entry.name.clone(),
        strategy: entry.strategy,
        traces,
        final_best,
        curves,
        summary,
    })
}

/// Paired relative improvement of a candidate over a baseline, in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Improvement {
    pub mean_pct: f64,
    pub max_pct: f64,
    pub min_pct: f64,
    /// Pairs that entered the average.
    pub pairs: usize,
    /// Pairs dropped because the baseline was exactly zero.
    pub skipped: usize,
}

/// Averages `100 * (baseline - candidate) / baseline` over paired runs.
pub fn paired_improvement(candidate: &[f64], baseline: &[f64]) -> Result<Improvement> {
    if candidate.len() != baseline.len() {
        return Err(Error::LengthMismatch {
            expected: baseline.len(),
            actual: candidate.len(),
        });
    }
    let pct: Vec<f64> = candidate
        .iter()
        .zip(baseline)
        .filter(|(_, &b)| b != 0.0)
        .map(|(&c, &b)| 100.0 * (b - c) / b)
        .collect();
    let skipped = candidate.len() - pct.len();
    if pct.is_empty() {
        return Ok(Improvement {
            mean_pct: 0.0,
            max_pct: 0.0,
            min_pct: 0.0,
            pairs: 0,
            skipped,
        });
    }
    Ok(Improvement {
        mean_pct: mean(&pct),
        max_pct: pct.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        min_pct: pct.iter().copied().fold(f64::INFINITY, f64::min),
        pairs: pct.len(),
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::objectives::{SyntheticKind, SyntheticObjective};

    fn spec(strategies: Vec<StrategyEntry>, repeats: usize) -> ExperimentSpec {
        ExperimentSpec {
            strategies,
            optimizer: RghlConfig {
                population: 8,
                ..RghlConfig::default()
            },
            budget: 44,
            repeats,
            base_seed: 100,
            jobs: 2,
            config_digest: Some("abc".into()),
        }
    }

    #[test]
    fn run_config_covers_budget() {
        let s = spec(vec![StrategyEntry::new(Strategy::Rghl)], 1);
        let cfg = s.run_config(3);
        assert_eq!(cfg.seed, 103);
        assert_eq!(cfg.generations, 5);
        assert_eq!(cfg.budget(), 44);
    }

    #[test]
    fn traces_have_budget_rows_and_ordered_results() {
        let space = SearchSpace::indexed(&[8; 4]).unwrap();
        let f = SyntheticObjective::new(SyntheticKind::QuadraticBowl, space.clone(), 0.0, 1).unwrap();
        let s = spec(
            vec![
                StrategyEntry::new(Strategy::Rghl),
                StrategyEntry::new(Strategy::RandomSearch),
            ],
            3,
        );
        let res = run_experiment(&s, &f, &space).unwrap();
        assert_eq!(res.strategies.len(), 2);
        for (i, st) in res.strategies.iter().enumerate() {
            assert_eq!(st.name, s.strategies[i].name);
            assert_eq!(st.traces.len(), 3);
            for (r, t) in st.traces.iter().enumerate() {
                assert_eq!(t.len(), 44);
                assert_eq!(t.seed, 100 + r as u64);
                assert_eq!(t.config_digest.as_deref(), Some("abc"));
            }
            assert!(st.curves.mean_best.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn one_repeat_has_zero_width() {
        let space = SearchSpace::indexed(&[8; 3]).unwrap();
        let f = SyntheticObjective::new(SyntheticKind::SeparableLinear, space.clone(), 0.0, 1).unwrap();
        let s = spec(vec![StrategyEntry::new(Strategy::RandomSearch)], 1);
        let res = run_experiment(&s, &f, &space).unwrap();
        let st = &res.strategies[0];
        assert_eq!(st.summary.ci95_half_width, 0.0);
        assert_eq!(
            st.curves.mean_best,
            st.traces[0].rows.iter().map(|r| r.best_so_far).collect::<Vec<_>>()
        );
    }

    #[test]
    fn failing_run_reports_partial_results() {
        let space = SearchSpace::indexed(&[8; 3]).unwrap();
        struct Poisoned(u64);
        impl Objective for Poisoned {
            fn evaluate(&self, c: &crate::search_space::Chromosome, draw: u64) -> f64 {
                if draw == self.0 {
                    f64::NAN
                } else {
                    c.genes().iter().map(|&g| g as f64).sum()
                }
            }
        }
        // repeat 0 (seed 100) breaks at its sixth evaluation
        let f = Poisoned(100u64.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(5));
        let s = spec(vec![StrategyEntry::new(Strategy::RandomSearch)], 3);
        let err = run_experiment(&s, &f, &space).unwrap_err();
        assert!(matches!(err.error, Error::RunFailed { repeat: 0, .. }), "{}", err.error);
        assert_eq!(err.completed.len(), 2);
        assert_eq!(err.completed[0].seed, 101);
    }

    #[test]
    fn invalid_specs() {
        let space = SearchSpace::indexed(&[8; 3]).unwrap();
        let f = SyntheticObjective::new(SyntheticKind::SeparableLinear, space.clone(), 0.0, 1).unwrap();
        let mut s = spec(vec![StrategyEntry::new(Strategy::Rghl)], 0);
        assert!(run_experiment(&s, &f, &space).is_err());
        s.repeats = 1;
        s.strategies.push(StrategyEntry::new(Strategy::Rghl));
        assert!(run_experiment(&s, &f, &space).is_err());
        s.strategies = vec![StrategyEntry::new(Strategy::GaEg { epsilon: 2.0 })];
        let err = run_experiment(&s, &f, &space).unwrap_err();
        assert!(matches!(err.error, Error::InvalidConfig(_)));
        assert!(err.completed.is_empty());
    }

    #[test]
    fn improvement_by_hand() {
        // pairs: (candidate 1, baseline 2) -> 50%, (3, 4) -> 25%
        let imp = paired_improvement(&[1.0, 3.0], &[2.0, 4.0]).unwrap();
        assert_eq!(imp.mean_pct, 37.5);
        assert_eq!(imp.max_pct, 50.0);
        assert_eq!(imp.min_pct, 25.0);
        assert_eq!(imp.pairs, 2);
        let with_zero = paired_improvement(&[1.0, 0.0], &[2.0, 0.0]).unwrap();
        assert_eq!(with_zero.pairs, 1);
        assert_eq!(with_zero.skipped, 1);
        assert!(paired_improvement(&[1.0], &[1.0, 2.0]).is_err());
    }
}
