use serde::{Deserialize, Serialize};

use crate::search_space::Chromosome;

/// Which part of the optimizer produced an evaluated configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Random,
    Genetic,
    Surrogate,
}

impl Origin {
    pub fn as_str(self) -> &'static str {
        match self {
            Origin::Random => "random",
            Origin::Genetic => "genetic",
            Origin::Surrogate => "surrogate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub chromosome: Chromosome,
    pub fitness: f64,
    pub eval_index: usize,
    pub origin: Origin,
}

/// Append-only log of every true evaluation, in evaluation order.
///
/// `eval_index` is the position in the log, so indices are strictly increasing.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExperienceMemory {
    records: Vec<Record>,
}

impl ExperienceMemory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, chromosome: Chromosome, fitness: f64, origin: Origin) -> &Record {
        let eval_index = self.records.len();
        self.records.push(Record {
            chromosome,
            fitness,
            eval_index,
            origin,
        });
        &self.records[eval_index]
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn fitness_history(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.fitness)
    }

    /// Lowest fitness, earliest evaluation on ties.
    pub fn best(&self) -> Option<&Record> {
        self.records.iter().reduce(|best, r| {
            if r.fitness.total_cmp(&best.fitness).is_lt() {
                r
            } else {
                best
            }
        })
    }

    /// Up to `count` distinct chromosomes ordered by ascending fitness, most
    /// recent first among equal fitness.
    pub fn elite_distinct(&self, count: usize) -> Vec<Chromosome> {
        let mut order: Vec<&Record> = self.records.iter().collect();
        order.sort_by(|a, b| {
            a.fitness
                .total_cmp(&b.fitness)
                .then(b.eval_index.cmp(&a.eval_index))
        });
        let mut out: Vec<Chromosome> = Vec::with_capacity(count);
        for r in order {
            if out.len() == count {
                break;
            }
            if !out.contains(&r.chromosome) {
                out.push(r.chromosome.clone());
            }
        }
        out
    }
}
