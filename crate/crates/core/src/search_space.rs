//! Discrete search spaces and the chromosome encoding.
//!
//! Every hyperparameter is a finite, ordered grid of at most 256 values, so a
//! configuration is a vector of byte-sized indices into those grids.

use std::fmt;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hard cap on grid size: one gene is one byte.
pub const MAX_CARDINALITY: usize = 256;

/// A concrete hyperparameter value on a grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Int(i64),
    Real(f64),
    Label(String),
}

impl ParamValue {
    fn as_f64(&self) -> Option<f64> {
        match self {
            ParamValue::Int(i) => Some(*i as f64),
            ParamValue::Real(r) => Some(*r),
            ParamValue::Label(_) => None,
        }
    }
}

/// Numeric values compare by magnitude across `Int` and `Real`, so `2` and
/// `2.0` name the same grid point.
impl PartialEq for ParamValue {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (ParamValue::Label(a), ParamValue::Label(b)) => a == b,
            (ParamValue::Int(a), ParamValue::Int(b)) => a == b,
            _ => match (self.as_f64(), other.as_f64()) {
                (Some(a), Some(b)) => a == b,
                _ => false,
            },
        }
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Int(i) => write!(f, "{i}"),
            ParamValue::Real(r) => write!(f, "{r}"),
            ParamValue::Label(s) => write!(f, "{s:?}"),
        }
    }
}

impl From<i64> for ParamValue {
    fn from(v: i64) -> Self {
        ParamValue::Int(v)
    }
}

impl From<f64> for ParamValue {
    fn from(v: f64) -> Self {
        ParamValue::Real(v)
    }
}

impl From<&str> for ParamValue {
    fn from(v: &str) -> Self {
        ParamValue::Label(v.to_owned())
    }
}

/// One hyperparameter and its ordered grid of candidate values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dimension {
    name: String,
    values: Vec<ParamValue>,
}

impl Dimension {
    pub fn new(name: impl Into<String>, values: Vec<ParamValue>) -> Result<Self> {
        let name = name.into();
        if values.is_empty() {
            return Err(Error::InvalidSpace(format!("dimension `{name}` has no values")));
        }
        if values.len() > MAX_CARDINALITY {
            return Err(Error::InvalidSpace(format!(
                "dimension `{name}` has {} values (max {MAX_CARDINALITY})",
                values.len()
            )));
        }
        for (i, v) in values.iter().enumerate() {
            if let ParamValue::Real(r) = v {
                if !r.is_finite() {
                    return Err(Error::InvalidSpace(format!(
                        "dimension `{name}` contains non-finite value {r}"
                    )));
                }
            }
            if values[..i].contains(v) {
                return Err(Error::InvalidSpace(format!(
                    "dimension `{name}` repeats value {v}"
                )));
            }
        }
        Ok(Self { name, values })
    }

    /// Integer grid `0..cardinality`, handy for synthetic spaces.
    pub fn indexed(name: impl Into<String>, cardinality: usize) -> Result<Self> {
        let values = (0..cardinality as i64).map(ParamValue::Int).collect();
        Self::new(name, values)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn values(&self) -> &[ParamValue] {
        &self.values
    }

    pub fn cardinality(&self) -> usize {
        self.values.len()
    }
}

impl<'de> Deserialize<'de> for Dimension {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            name: String,
            values: Vec<ParamValue>,
        }
        let raw = Raw::deserialize(d)?;
        Dimension::new(raw.name, raw.values).map_err(serde::de::Error::custom)
    }
}

/// Ordered list of dimensions; immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchSpace {
    dimensions: Vec<Dimension>,
}

impl SearchSpace {
    pub fn new(dimensions: Vec<Dimension>) -> Result<Self> {
        if dimensions.is_empty() {
            return Err(Error::InvalidSpace("no dimensions".into()));
        }
        // Product of cardinalities >= 2 iff some dimension has >= 2 values.
        if dimensions.iter().all(|d| d.cardinality() < 2) {
            return Err(Error::InvalidSpace(
                "search space holds a single configuration".into(),
            ));
        }
        Ok(Self { dimensions })
    }

    /// `n` integer-indexed dimensions with the given cardinalities.
    pub fn indexed(cardinalities: &[usize]) -> Result<Self> {
        let dims = cardinalities
            .iter()
            .enumerate()
            .map(|(i, &c)| Dimension::indexed(format!("x{i}"), c))
            .collect::<Result<Vec<_>>>()?;
        Self::new(dims)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn dimensions(&self) -> &[Dimension] {
        &self.dimensions
    }

    pub fn n_genes(&self) -> usize {
        self.dimensions.len()
    }

    pub fn cardinalities(&self) -> impl Iterator<Item = usize> + '_ {
        self.dimensions.iter().map(Dimension::cardinality)
    }

    /// Number of distinct configurations, as a float since it overflows fast.
    pub fn size(&self) -> f64 {
        self.cardinalities().map(|c| c as f64).product()
    }

    pub fn encode(&self, values: &[ParamValue]) -> Result<Chromosome> {
        check_len(self.n_genes(), values.len())?;
        let genes = self
            .dimensions
            .iter()
            .zip(values)
            .map(|(dim, v)| {
                dim.values
                    .iter()
                    .position(|x| x == v)
                    .map(|i| i as u8)
                    .ok_or_else(|| Error::UnknownValue {
                        dimension: dim.name.clone(),
                        value: v.to_string(),
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Chromosome { genes })
    }

    pub fn decode(&self, c: &Chromosome) -> Result<Vec<ParamValue>> {
        self.validate(c)?;
        Ok(self
            .dimensions
            .iter()
            .zip(&c.genes)
            .map(|(dim, &g)| dim.values[g as usize].clone())
            .collect())
    }

    /// Maps each gene to `gene / max(1, cardinality - 1)`.
    pub fn normalize(&self, c: &Chromosome) -> Result<Vec<f64>> {
        self.validate(c)?;
        Ok(self.normalize_unchecked(c))
    }

    pub(crate) fn normalize_unchecked(&self, c: &Chromosome) -> Vec<f64> {
        c.genes
            .iter()
            .zip(self.cardinalities())
            .map(|(&g, card)| g as f64 / (card.max(2) - 1) as f64)
            .collect()
    }

    pub fn validate(&self, c: &Chromosome) -> Result<()> {
        check_len(self.n_genes(), c.len())?;
        for (index, (&g, card)) in c.genes.iter().zip(self.cardinalities()).enumerate() {
            if g as usize >= card {
                return Err(Error::GeneOutOfRange {
                    index,
                    gene: g as usize,
                    cardinality: card,
                });
            }
        }
        Ok(())
    }

    pub fn contains(&self, c: &Chromosome) -> bool {
        self.validate(c).is_ok()
    }

    /// Draws every gene uniformly from its grid.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Chromosome {
        let genes = self
            .cardinalities()
            .map(|card| rng.random_range(0..card) as u8)
            .collect();
        Chromosome { genes }
    }
}

impl<'de> Deserialize<'de> for SearchSpace {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            dimensions: Vec<Dimension>,
        }
        let raw = Raw::deserialize(d)?;
        SearchSpace::new(raw.dimensions).map_err(serde::de::Error::custom)
    }
}

fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::LengthMismatch { expected, actual });
    }
    Ok(())
}

/// Fixed-length vector of gene indices into the grids of a [`SearchSpace`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Chromosome {
    genes: Vec<u8>,
}

impl Chromosome {
    pub fn new(genes: Vec<u8>) -> Self {
        Self { genes }
    }

    pub fn zeros(n: usize) -> Self {
        Self { genes: vec![0; n] }
    }

    pub fn genes(&self) -> &[u8] {
        &self.genes
    }

    pub fn genes_mut(&mut self) -> &mut [u8] {
        &mut self.genes
    }

    pub fn len(&self) -> usize {
        self.genes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genes.is_empty()
    }
}

impl From<Vec<u8>> for Chromosome {
    fn from(genes: Vec<u8>) -> Self {
        Self { genes }
    }
}

impl fmt::Display for Chromosome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, g) in self.genes.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{g}")?;
        }
        f.write_str("]")
    }
}
