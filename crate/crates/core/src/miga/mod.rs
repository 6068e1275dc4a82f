//! Mixed-integer genetic algorithm: stochastic universal sampling over
//! rank-scaled fitness, Laplace crossover, power mutation and randomized
//! integer truncation.

mod engine;
mod operators;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use engine::{run_ga, GaHistory, GaOutcome, GenerationRecord};
pub use operators::{
    laplace_beta, laplace_crossover, laplace_gene, power_mutation, power_mutation_with,
    rank_weights, sus_from_weights, sus_select, truncate, truncate_with, SELECTION_PRESSURE,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GaError {
    #[error("cannot select from an empty population")]
    EmptyPopulation,
    #[error("fitness values must be finite")]
    NonFiniteFitness,
    #[error("parents have different gene layouts")]
    LayoutMismatch,
    #[error("invalid GA configuration: {0}")]
    InvalidConfig(String),
}

/// Per-gene bounds: continuous genes first, then integer genes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneLayout {
    pub real: Vec<(f64, f64)>,
    pub int: Vec<(i64, i64)>,
}

impl GeneLayout {
    pub fn validate(&self) -> Result<(), GaError> {
        for (k, &(lo, hi)) in self.real.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(GaError::InvalidConfig(format!(
                    "real gene {k} has bounds [{lo}, {hi}]"
                )));
            }
        }
        for (k, &(lo, hi)) in self.int.iter().enumerate() {
            if lo > hi {
                return Err(GaError::InvalidConfig(format!(
                    "integer gene {k} has bounds [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }

    pub fn contains(&self, c: &Chromosome) -> bool {
        c.real.len() == self.real.len()
            && c.int.len() == self.int.len()
            && c.real.iter().zip(&self.real).all(|(x, (lo, hi))| lo <= x && x <= hi)
            && c.int.iter().zip(&self.int).all(|(x, (lo, hi))| lo <= x && x <= hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chromosome {
    pub real: Vec<f64>,
    pub int: Vec<i64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub fitness: Option<f64>,
}

impl Chromosome {
    pub fn new(real: Vec<f64>, int: Vec<i64>) -> Self {
        Self {
            real,
            int,
            fitness: None,
        }
    }

    fn same_layout(&self, other: &Chromosome) -> bool {
        self.real.len() == other.real.len() && self.int.len() == other.int.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaConfig {
    pub pop_size: usize,
    pub max_gen: usize,
    /// Probability that a mating pair undergoes crossover.
    pub pc: f64,
    /// Per-gene mutation probability.
    pub pm: f64,
    pub laplace_a: f64,
    pub laplace_b_real: f64,
    pub laplace_b_int: f64,
    pub pm_index_real: f64,
    pub pm_index_int: f64,
    pub elite_count: usize,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            pop_size: 2000,
            max_gen: 400,
            pc: 0.9,
            pm: 0.1,
            laplace_a: 0.0,
            laplace_b_real: 0.15,
            laplace_b_int: 0.35,
            pm_index_real: 10.0,
            pm_index_int: 4.0,
            elite_count: 1,
            seed: 1,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<(), GaError> {
        let bad = |m: String| Err(GaError::InvalidConfig(m));
        if self.pop_size < 2 {
            return bad(format!("pop_size must be >= 2, got {}", self.pop_size));
        }
        if self.elite_count > self.pop_size {
            return bad(format!(
                "elite_count {} exceeds pop_size {}",
                self.elite_count, self.pop_size
            ));
        }
        for (name, p) in [("pc", self.pc), ("pm", self.pm)] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must lie in [0, 1], got {p}"));
            }
        }
        for (name, v) in [
            ("laplace_b_real", self.laplace_b_real),
            ("laplace_b_int", self.laplace_b_int),
            ("pm_index_real", self.pm_index_real),
            ("pm_index_int", self.pm_index_int),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !self.laplace_a.is_finite() {
            return bad("laplace_a must be finite".into());
        }
        Ok(())
    }
}
