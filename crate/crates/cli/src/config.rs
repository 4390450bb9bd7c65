//! Run-config files.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rghl_core::bench::experiment::{ExperimentSpec, StrategyEntry};
use rghl_core::bench::objectives::{SyntheticKind, SyntheticObjective};
use rghl_core::{RghlConfig, SearchSpace, Strategy};
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const DEFAULT_REPEATS: usize = 30;
pub const DEFAULT_OUT: &str = "rghl-out";

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    /// Names (`"rghl"`) or objects (`{"kind": "ga_eg", "epsilon": 0.3, "name": "eg"}`).
    pub strategies: Vec<Value>,
    pub objective: ObjectiveConfig,
    #[serde(default)]
    pub optimizer: RghlConfig,
    /// Defaults to the optimizer's own budget.
    pub budget: Option<usize>,
    pub repeats: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub record_wall_time: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveConfig {
    pub kind: String,
    /// Number of genes of an indexed space; needs `cardinality`.
    pub dimensions: Option<usize>,
    pub cardinality: Option<usize>,
    /// Inline search-space document, or a path relative to the config file.
    pub space: Option<Value>,
    #[serde(default)]
    pub noise_sd: f64,
    #[serde(default)]
    pub seed: u64,
}

/// Command-line values that beat the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub repeats: Option<usize>,
    pub jobs: usize,
}

/// Everything a run needs, with every default filled in.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub spec: ExperimentSpec,
    pub objective: SyntheticObjective,
    pub space: SearchSpace,
    pub out: PathBuf,
    pub record_wall_time: bool,
    /// Canonical JSON; running it again reproduces the same artifacts.
    pub document: Value,
}

#[derive(Serialize)]
struct ResolvedDocument {
    strategies: Vec<Value>,
    objective: Value,
    optimizer: RghlConfig,
    budget: usize,
    repeats: usize,
    seed: u64,
    record_wall_time: bool,
}

pub fn load(path: &Path, overrides: &Overrides) -> Result<Resolved> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let file: RunConfigFile =
        serde_json::from_str(&text).with_context(|| format!("malformed config {}", path.display()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    resolve(file, base, overrides)
}

pub fn resolve(file: RunConfigFile, base: &Path, overrides: &Overrides) -> Result<Resolved> {
    let kind: SyntheticKind = file.objective.kind.parse()?;
    let (space, space_doc) = build_space(&file.objective, base)?;
    let objective = SyntheticObjective::new(kind, space.clone(), file.objective.noise_sd, file.objective.seed)?;

    let strategies = parse_strategies(&file.strategies)?;
    let budget = file.budget.unwrap_or_else(|| file.optimizer.budget());
    let repeats = overrides.repeats.or(file.repeats).unwrap_or(DEFAULT_REPEATS);
    let seed = overrides.seed.or(file.seed).unwrap_or(0);
    let mut spec = ExperimentSpec {
        strategies,
        optimizer: file.optimizer.clone(),
        budget,
        repeats,
        base_seed: seed,
        jobs: overrides.jobs,
        config_digest: None,
    };
    spec.validate()?;
    // what every run actually uses, seed aside
    let optimizer = RghlConfig {
        seed,
        ..spec.run_config(0).resolved()
    };
    spec.optimizer = optimizer.clone();

    let mut objective_doc = serde_json::json!({
        "kind": kind.as_str(),
        "noise_sd": file.objective.noise_sd,
        "seed": file.objective.seed,
    });
    match space_doc {
        SpaceDoc::Indexed { dimensions, cardinality } => {
            objective_doc["dimensions"] = dimensions.into();
            objective_doc["cardinality"] = cardinality.into();
        }
        SpaceDoc::Inline => objective_doc["space"] = serde_json::to_value(&space)?,
    }
    let document = serde_json::to_value(ResolvedDocument {
        strategies: spec
            .strategies
            .iter()
            .map(|e| {
                let mut v = serde_json::to_value(e.strategy).expect("strategy serializes");
                v["name"] = e.name.clone().into();
                v
            })
            .collect(),
        objective: objective_doc,
        optimizer,
        budget,
        repeats,
        seed,
        record_wall_time: file.record_wall_time,
    })?;

    let out = overrides
        .out
        .clone()
        .or(file.out)
        .or_else(|| std::env::var_os("RGHL_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    Ok(Resolved {
        spec,
        objective,
        space,
        out,
        record_wall_time: file.record_wall_time,
        document,
    })
}

enum SpaceDoc {
    Indexed { dimensions: usize, cardinality: usize },
    Inline,
}

fn build_space(cfg: &ObjectiveConfig, base: &Path) -> Result<(SearchSpace, SpaceDoc)> {
    match (&cfg.space, cfg.dimensions, cfg.cardinality) {
        (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
            bail!("objective: give either `space` or `dimensions` + `cardinality`, not both")
        }
        (Some(Value::String(p)), None, None) => {
            let path = base.join(p);
            let space = SearchSpace::from_path(&path)
                .with_context(|| format!("cannot load search space {}", path.display()))?;
            Ok((space, SpaceDoc::Inline))
        }
        (Some(doc), None, None) => {
            let space = SearchSpace::deserialize(doc).context("objective.space")?;
            Ok((space, SpaceDoc::Inline))
        }
        (None, Some(dimensions), Some(cardinality)) => {
            let space = SearchSpace::indexed(&vec![cardinality; dimensions])?;
            Ok((space, SpaceDoc::Indexed { dimensions, cardinality }))
        }
        (None, _, _) => bail!("objective: `dimensions` and `cardinality` are both required without `space`"),
    }
}

/// Parses strategy entries; repeated names get `_2`, `_3`, ... suffixes.
pub fn parse_strategies(raw: &[Value]) -> Result<Vec<StrategyEntry>> {
    if raw.is_empty() {
        bail!("`strategies` is empty");
    }
    let mut entries: Vec<StrategyEntry> = Vec::with_capacity(raw.len());
    for (i, v) in raw.iter().enumerate() {
        let (name, strategy) = match v {
            Value::String(kind) => (None, serde_json::json!({ "kind": kind })),
            Value::Object(map) => {
                let mut map = map.clone();
                let name = match map.remove("name") {
                    None => None,
                    Some(Value::String(n)) if !n.is_empty() => Some(n),
                    Some(other) => bail!("strategies[{i}].name must be a non-empty string, got {other}"),
                };
                (name, Value::Object(map))
            }
            other => bail!("strategies[{i}] must be a string or an object, got {other}"),
        };
        let strategy: Strategy =
            serde_json::from_value(strategy).with_context(|| format!("strategies[{i}]"))?;
        let base = name.unwrap_or_else(|| strategy.label());
        let mut name = base.clone();
        let mut k = 2;
        while entries.iter().any(|e| e.name == name) {
            name = format!("{base}_{k}");
            k += 1;
        }
        entries.push(StrategyEntry { name, strategy });
    }
    Ok(entries)
}
