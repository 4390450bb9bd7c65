//! Plot-ready output files.
//!
//! Every writer formats floats with Rust's shortest round-trip
//! representation, so identical results give byte-identical files.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::experiment::{paired_improvement, ExperimentResult, Improvement};
use super::trace::RunTrace;
use crate::error::Result;

pub const CURVES_FILE: &str = "curves.dat";
pub const SUMMARY_FILE: &str = "summary.json";
pub const TRACES_DIR: &str = "traces";

/// Whitespace-delimited table, one row per step `n = 1..=budget`.
///
/// Columns per strategy: `_min` (mean best-so-far), `_mean` (cumulative mean
/// of step means), `_step` (step mean) and `_ci90`/`_ci95`/`_ci99`
/// half-widths of the step mean.
pub fn curves_table(result: &ExperimentResult) -> String {
    const SUFFIXES: [&str; 6] = ["min", "mean", "step", "ci90", "ci95", "ci99"];
    let mut out = String::from("n");
    for s in &result.strategies {
        for suffix in SUFFIXES {
            out.push_str(&format!(" {}_{suffix}", s.name));
        }
    }
    out.push('\n');
    for step in 0..result.budget {
        out.push_str(&(step + 1).to_string());
        for s in &result.strategies {
            let c = &s.curves;
            for v in [
                c.mean_best[step],
                c.cumulative_mean[step],
                c.step_mean[step],
                c.ci90[step],
                c.ci95[step],
                c.ci99[step],
            ] {
                out.push_str(&format!(" {v}"));
            }
        }
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct SummaryRow {
    runs: usize,
    mean_final_best: f64,
    ci95_half_width: f64,
    ci90_half_width: f64,
    ci99_half_width: f64,
    /// `None` unless wall time recording is on; timing breaks byte-identity.
    mean_wall_time_sec: Option<f64>,
    /// Synthetic objectives have no held-out split.
    test_loss: &'static str,
}

/// JSON object keyed by strategy name.
pub fn summary_json(result: &ExperimentResult, include_wall_time: bool) -> String {
    let rows: BTreeMap<&str, SummaryRow> = result
        .strategies
        .iter()
        .map(|s| {
            let m = &s.summary;
            (
                s.name.as_str(),
                SummaryRow {
                    runs: m.runs,
                    mean_final_best: m.mean_final_best,
                    ci95_half_width: m.ci95_half_width,
                    ci90_half_width: m.ci90_half_width,
                    ci99_half_width: m.ci99_half_width,
                    mean_wall_time_sec: include_wall_time.then_some(m.mean_wall_time_sec),
                    test_loss: "n/a",
                },
            )
        })
        .collect();
    let mut text = serde_json::to_string_pretty(&rows).expect("summary serializes");
    text.push('\n');
    text
}

/// Improvement of the first configured strategy over each of the others.
pub fn improvements(result: &ExperimentResult) -> Result<Vec<(String, Improvement)>> {
    let Some((first, rest)) = result.strategies.split_first() else {
        return Ok(Vec::new());
    };
    rest.iter()
        .map(|other| {
            Ok((
                other.name.clone(),
                paired_improvement(&first.final_best, &other.final_best)?,
            ))
        })
        .collect()
}

/// Human-readable leaderboard sorted by mean final best.
pub fn leaderboard(result: &ExperimentResult) -> Result<String> {
    let width = result
        .strategies
        .iter()
        .map(|s| s.name.len())
        .max()
        .unwrap_or(8)
        .max(8);
    let mut out = format!(
        "{:<4} {:<width$} {:>14} {:>14} {:>10}\n",
        "rank", "strategy", "final best", "±95% CI", "time (s)"
    );
    for (rank, &i) in result.ranking().iter().enumerate() {
        let s = &result.strategies[i];
        out.push_str(&format!(
            "{:<4} {:<width$} {:>14.6} {:>14.6} {:>10.3}\n",
            rank + 1,
            s.name,
            s.summary.mean_final_best,
            s.summary.ci95_half_width,
            s.summary.mean_wall_time_sec,
        ));
    }
    let imps = improvements(result)?;
    if !imps.is_empty() {
        let first = &result.strategies[0].name;
        out.push_str(&format!("\nimprovement of {first} (paired, %):\n"));
        for (name, imp) in imps {
            out.push_str(&format!(
                "  vs {name:<width$} avg {:>8.3}  max {:>8.3}  min {:>8.3}  ({} pairs, {} skipped)\n",
                imp.mean_pct, imp.max_pct, imp.min_pct, imp.pairs, imp.skipped
            ));
        }
    }
    Ok(out)
}

/// Keeps `[A-Za-z0-9._-]`, replacing everything else with `_`.
pub fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-') {
                c
            } else {
                '_'
            }
        })
        .collect()
}

pub fn trace_path(dir: &Path, trace: &RunTrace, repeat: usize) -> PathBuf {
    dir.join(TRACES_DIR)
        .join(file_stem(&trace.strategy))
        .join(format!("run_{repeat:03}.csv"))
}

/// Writes one trace CSV per run.
pub fn write_traces<'a>(dir: &Path, traces: impl IntoIterator<Item = (usize, &'a RunTrace)>) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for (repeat, trace) in traces {
        let path = trace_path(dir, trace, repeat);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, trace.to_csv())?;
        written.push(path);
    }
    Ok(written)
}

/// Writes traces, the curve table and the summary into `dir`.
pub fn write_artifacts(result: &ExperimentResult, dir: &Path, include_wall_time: bool) -> Result<()> {
    fs::create_dir_all(dir)?;
    for s in &result.strategies {
        write_traces(dir, s.traces.iter().enumerate())?;
    }
    fs::write(dir.join(CURVES_FILE), curves_table(result))?;
    fs::write(dir.join(SUMMARY_FILE), summary_json(result, include_wall_time))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::experiment::{run_experiment, ExperimentSpec, StrategyEntry};
    use crate::bench::objectives::{SyntheticKind, SyntheticObjective};
    use crate::optimizer::{RghlConfig, Strategy};
    use crate::search_space::SearchSpace;

    fn small_result() -> ExperimentResult {
        let space = SearchSpace::indexed(&[6; 3]).unwrap();
        let f = SyntheticObjective::new(SyntheticKind::QuadraticBowl, space.clone(), 0.0, 3).unwrap();
        let spec = ExperimentSpec {
            strategies: vec![
                StrategyEntry::new(Strategy::Rghl),
                StrategyEntry::new(Strategy::RandomSearch),
            ],
            optimizer: RghlConfig {
                population: 6,
                ..RghlConfig::default()
            },
            budget: 24,
            repeats: 2,
            base_seed: 0,
            jobs: 1,
            config_digest: None,
        };
        run_experiment(&spec, &f, &space).unwrap()
    }

    #[test]
    fn curve_table_shape() {
        let r = small_result();
        let table = curves_table(&r);
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines.len(), 25);
        assert!(lines[0].starts_with("n rghl_min rghl_mean rghl_step"));
        assert!(lines[0].contains("random_search_min random_search_mean"));
        assert!(lines.iter().all(|l| l.split_whitespace().count() == 13));
        assert!(lines[1].starts_with("1 "));
    }

    #[test]
    fn summary_fields() {
        let r = small_result();
        let v: serde_json::Value = serde_json::from_str(&summary_json(&r, false)).unwrap();
        let row = &v["rghl"];
        assert!(row["mean_final_best"].is_f64());
        assert!(row["ci95_half_width"].is_f64());
        assert!(row["mean_wall_time_sec"].is_null());
        let v: serde_json::Value = serde_json::from_str(&summary_json(&r, true)).unwrap();
        assert!(v["random_search"]["mean_wall_time_sec"].is_f64());
    }

    #[test]
    fn writes_all_artifacts() {
        let r = small_result();
        let dir = tempfile::tempdir().unwrap();
        write_artifacts(&r, dir.path(), false).unwrap();
        assert!(dir.path().join(CURVES_FILE).exists());
        assert!(dir.path().join(SUMMARY_FILE).exists());
        let csv = fs::read_to_string(dir.path().join("traces/rghl/run_001.csv")).unwrap();
        assert_eq!(csv.lines().count(), 25);
    }

    #[test]
    fn leaderboard_lists_every_strategy() {
        let r = small_result();
        let text = leaderboard(&r).unwrap();
        assert!(text.contains("rghl") && text.contains("random_search"));
        assert!(text.contains("improvement of rghl"));
    }

    #[test]
    fn stems_are_filesystem_safe() {
        assert_eq!(file_stem("ga/eg 0.5"), "ga_eg_0.5");
    }
}
