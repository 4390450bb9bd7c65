use serde::{Deserialize, Serialize};

use super::stats::compute_ci;
use super::trace::RunTrace;
use crate::error::{Error, Result};

/// Across-run curves, one entry per evaluation step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateCurves {
    /// Mean over runs of the best-so-far fitness.
    pub mean_best: Vec<f64>,
    /// Mean over runs of the fitness evaluated at each step.
    pub step_mean: Vec<f64>,
    /// Running average of `step_mean`.
    pub cumulative_mean: Vec<f64>,
    /// Student-t half-widths of `step_mean` at 90, 95 and 99 %.
    pub ci90: Vec<f64>,
    pub ci95: Vec<f64>,
    pub ci99: Vec<f64>,
}

impl AggregateCurves {
    /// Index-aligned aggregation; every trace must have exactly `budget` rows.
    pub fn from_traces(traces: &[RunTrace], budget: usize) -> Result<Self> {
        if traces.is_empty() {
            return Err(Error::InsufficientSamples(0));
        }
        for t in traces {
            if t.len() != budget {
                return Err(Error::LengthMismatch {
                    expected: budget,
                    actual: t.len(),
                });
            }
        }
        let mut curves = Self {
            mean_best: Vec::with_capacity(budget),
            step_mean: Vec::with_capacity(budget),
            cumulative_mean: Vec::with_capacity(budget),
            ci90: Vec::with_capacity(budget),
            ci95: Vec::with_capacity(budget),
            ci99: Vec::with_capacity(budget),
        };
        let runs = traces.len() as f64;
        let mut running = 0.0;
        for step in 0..budget {
            let fitness: Vec<f64> = traces.iter().map(|t| t.rows[step].fitness).collect();
            let best = traces.iter().map(|t| t.rows[step].best_so_far).sum::<f64>() / runs;
            let ci90 = compute_ci(&fitness, 0.90)?;
            running += ci90.mean;
            curves.mean_best.push(best);
            curves.step_mean.push(ci90.mean);
            curves.cumulative_mean.push(running / (step + 1) as f64);
            curves.ci90.push(ci90.half_width);
            curves.ci95.push(compute_ci(&fitness, 0.95)?.half_width);
            curves.ci99.push(compute_ci(&fitness, 0.99)?.half_width);
        }
        Ok(curves)
    }

    pub fn len(&self) -> usize {
        self.mean_best.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean_best.is_empty()
    }
}
