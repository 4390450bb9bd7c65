use serde::{Deserialize, Serialize};

use crate::memory::{ExperienceMemory, Origin};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub eval_index: usize,
    pub origin: Origin,
    pub fitness: f64,
    pub best_so_far: f64,
}

/// Per-evaluation record of one run plus its metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub strategy: String,
    pub seed: u64,
    pub config_digest: Option<String>,
    pub wall_time_sec: f64,
    pub rows: Vec<TraceRow>,
}

impl RunTrace {
    pub fn from_memory(strategy: &str, seed: u64, memory: &ExperienceMemory) -> Self {
        let mut best = f64::INFINITY;
        let rows = memory
            .records()
            .iter()
            .map(|r| {
                best = best.min(r.fitness);
                TraceRow {
                    eval_index: r.eval_index,
                    origin: r.origin,
                    fitness: r.fitness,
                    best_so_far: best,
                }
            })
            .collect();
        Self {
            strategy: strategy.to_owned(),
            seed,
            config_digest: None,
            wall_time_sec: 0.0,
            rows,
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn final_best(&self) -> Option<f64> {
        self.rows.last().map(|r| r.best_so_far)
    }

    /// CSV with header `eval_index,origin,fitness,best_so_far`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("eval_index,origin,fitness,best_so_far\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.eval_index,
                r.origin.as_str(),
                r.fitness,
                r.best_so_far
            ));
        }
        out
    }
}
