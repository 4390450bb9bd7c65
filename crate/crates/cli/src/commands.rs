use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use rghl_core::bench::experiment::{run_experiment, ExperimentResult};
use rghl_core::bench::report::{leaderboard, write_artifacts, write_traces};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::Resolved;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const RESOLVED_FILE: &str = "config.resolved.json";

/// Why a command failed; decides the exit code.
#[derive(Debug)]
pub enum Failure {
    /// Nothing was written.
    Config(anyhow::Error),
    /// Partial results may be on disk.
    Runtime(anyhow::Error),
}

pub fn digest(document: &Value) -> String {
    // serde_json maps are sorted, so this text is canonical
    let text = serde_json::to_string(document).expect("json value serializes");
    Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn manifest(cfg: &Resolved, digest: &str, complete: bool) -> String {
    let m = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "config_digest": digest,
        "seed": cfg.spec.base_seed,
        "complete": complete,
        "config": cfg.document,
    });
    let mut text = serde_json::to_string_pretty(&m).expect("manifest serializes");
    text.push('\n');
    text
}

fn write_metadata(cfg: &Resolved, digest: &str, complete: bool) -> Result<()> {
    fs::create_dir_all(&cfg.out).with_context(|| format!("cannot create {}", cfg.out.display()))?;
    let mut resolved = serde_json::to_string_pretty(&cfg.document)?;
    resolved.push('\n');
    fs::write(cfg.out.join(RESOLVED_FILE), resolved)?;
    fs::write(cfg.out.join(MANIFEST_FILE), manifest(cfg, digest, complete))?;
    Ok(())
}

/// Runs the experiment and writes every artifact into `cfg.out`.
pub fn execute(mut cfg: Resolved) -> std::result::Result<ExperimentResult, Failure> {
    let digest = digest(&cfg.document);
    cfg.spec.config_digest = Some(digest.clone());
    match run_experiment(&cfg.spec, &cfg.objective, &cfg.space) {
        Ok(result) => {
            write_metadata(&cfg, &digest, true).map_err(Failure::Runtime)?;
            write_artifacts(&result, &cfg.out, cfg.record_wall_time)
                .with_context(|| format!("cannot write artifacts to {}", cfg.out.display()))
                .map_err(Failure::Runtime)?;
            Ok(result)
        }
        Err(failure) => {
            let base = cfg.spec.base_seed;
            let dumped = write_metadata(&cfg, &digest, false).and_then(|()| {
                let traces = failure
                    .completed
                    .iter()
                    .map(|t| (t.seed.wrapping_sub(base) as usize, t));
                Ok(write_traces(&cfg.out, traces)?.len())
            });
            let note = match dumped {
                Ok(n) => format!("partial results: {n} completed run traces in {}", cfg.out.display()),
                Err(e) => format!("partial results could not be written: {e:#}"),
            };
            Err(Failure::Runtime(anyhow::Error::new(failure.error).context(note)))
        }
    }
}

fn summary_lines(result: &ExperimentResult) -> String {
    let mut out = String::new();
    for s in &result.strategies {
        out.push_str(&format!(
            "{}: mean final best {:.6} ± {:.6} (95% CI, {} runs)\n",
            s.name, s.summary.mean_final_best, s.summary.ci95_half_width, s.summary.runs
        ));
    }
    out
}

pub fn cmd_run(cfg: Resolved) -> std::result::Result<String, Failure> {
    let out = cfg.out.clone();
    let result = execute(cfg)?;
    Ok(format!("{}artifacts written to {}\n", summary_lines(&result), out.display()))
}

pub fn cmd_compare(cfg: Resolved) -> std::result::Result<String, Failure> {
    if cfg.spec.strategies.len() < 2 {
        return Err(Failure::Config(anyhow::anyhow!(
            "compare needs at least 2 strategies, got {}",
            cfg.spec.strategies.len()
        )));
    }
    let out = cfg.out.clone();
    let result = execute(cfg)?;
    let board = leaderboard(&result).map_err(|e| Failure::Runtime(e.into()))?;
    Ok(format!("{board}\nartifacts written to {}\n", out.display()))
}

/// Rejects an existing non-directory output path before any work starts.
pub fn check_out(out: &Path) -> Result<()> {
    if out.exists() && !out.is_dir() {
        bail!("output path {} exists and is not a directory", out.display());
    }
    Ok(())
}
