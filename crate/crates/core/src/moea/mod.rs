//! Constrained NSGA-III-style search over binary feature masks.
//!
//! Each generation pairs the population at random, applies one-point crossover and
//! bitwise mutation (both followed by a repair that enforces `1 <= popcount <= CF`),
//! evaluates the children and keeps `NP` individuals of the merged `2·NP` by
//! non-dominated sorting with reference-line niching on the splitting front.

mod engine;
mod niching;
mod operators;
mod sorting;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::FeatureMask;
use crate::retrieval::{ObjectiveVector, DEFAULT_K};

pub use engine::{run_engine, run_engine_observed, EngineRun};
pub use niching::{nsga3_select, nsga3_select_indices};
pub use operators::{
    bitwise_mutation, crossover_at, flip_bits, init_population, one_point_crossover,
    random_mask, repair_mask,
};
pub use sorting::{dominates, nondominated_indices, nondominated_sort, reference_points};

/// Search stage a front came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Coarse,
    Fine,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Coarse => "coarse",
            Stage::Fine => "fine",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "coarse" => Ok(Stage::Coarse),
            "fine" => Ok(Stage::Fine),
            other => Err(Error::Validation(format!("unknown stage '{other}'"))),
        }
    }
}

/// A candidate feature subset and, once evaluated, its objectives.
#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub mask: FeatureMask,
    pub objectives: Option<ObjectiveVector>,
}

impl Individual {
    pub fn new(mask: FeatureMask) -> Self {
        Individual {
            mask,
            objectives: None,
        }
    }

    pub fn evaluated(mask: FeatureMask, objectives: ObjectiveVector) -> Self {
        Individual {
            mask,
            objectives: Some(objectives),
        }
    }

    pub fn is_evaluated(&self) -> bool {
        self.objectives.is_some()
    }

    /// Objectives of an evaluated individual.
    ///
    /// Panics when called before evaluation.
    pub fn objectives(&self) -> &ObjectiveVector {
        self.objectives
            .as_ref()
            .expect("individual has not been evaluated")
    }
}

/// Engine parameters. `max_generations` is the generation budget; the initial
/// population plus every generation each cost `population_size` evaluations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub stage_dim: usize,
    pub cf: usize,
    pub population_size: usize,
    pub max_generations: usize,
    /// Optional hard cap on fitness evaluations; a generation is skipped if it would exceed it.
    pub max_evaluations: Option<usize>,
    /// Per-bit flip probability; `None` means `1 / stage_dim`.
    pub mutation_rate: Option<f64>,
    pub crossover_rate: f64,
    pub k: usize,
    pub seed: u64,
}

impl EngineConfig {
    pub fn new(stage_dim: usize, cf: usize) -> Self {
        EngineConfig {
            stage_dim,
            cf,
            population_size: 50,
            max_generations: 100,
            max_evaluations: None,
            mutation_rate: None,
            crossover_rate: 1.0,
            k: DEFAULT_K,
            seed: 0,
        }
    }

    pub fn effective_mutation_rate(&self) -> f64 {
        self.mutation_rate
            .unwrap_or_else(|| 1.0 / self.stage_dim.max(1) as f64)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.stage_dim == 0 {
            return fail("stage_dim must be positive".into());
        }
        if self.cf == 0 || self.cf > self.stage_dim {
            return fail(format!(
                "cf must lie in [1, {}], got {}",
                self.stage_dim, self.cf
            ));
        }
        if self.population_size < 4 || self.population_size % 2 != 0 {
            return fail(format!(
                "population_size must be even and >= 4, got {}",
                self.population_size
            ));
        }
        let rate = self.effective_mutation_rate();
        if !(0.0..=1.0).contains(&rate) {
            return fail(format!("mutation_rate must lie in [0, 1], got {rate}"));
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) {
            return fail(format!(
                "crossover_rate must lie in [0, 1], got {}",
                self.crossover_rate
            ));
        }
        if self.k == 0 {
            return fail("k must be >= 1".into());
        }
        if let Some(cap) = self.max_evaluations {
            if cap < self.population_size {
                return fail(format!(
                    "max_evaluations {cap} cannot cover the initial population of {}",
                    self.population_size
                ));
            }
        }
        Ok(())
    }
}

/// Mutually nondominated solutions of one run. Masks are in the original feature space.
#[derive(Debug, Clone, PartialEq)]
pub struct ParetoFront {
    pub run_id: usize,
    pub stage: Stage,
    pub seed: u64,
    /// Dimension of the searched space (feature fractions are relative to this).
    pub stage_dim: usize,
    pub solutions: Vec<Individual>,
}

impl ParetoFront {
    pub fn len(&self) -> usize {
        self.solutions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.solutions.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        let mut c = EngineConfig::new(10, 3);
        assert!(c.validate().is_ok());
        c.population_size = 5;
        assert!(c.validate().is_err());
        c.population_size = 2;
        assert!(c.validate().is_err());
        c.population_size = 4;
        c.cf = 11;
        assert!(c.validate().is_err());
        c.cf = 0;
        assert!(c.validate().is_err());
        c.cf = 10;
        c.mutation_rate = Some(1.5);
        assert!(c.validate().is_err());
        c.mutation_rate = None;
        assert_eq!(c.effective_mutation_rate(), 0.1);
        assert!(c.validate().is_ok());
    }
}
