//! Problem documents: a JSON object with `num_x`, `alphabet_size`, `depth`,
//! `cost` (flat, canonical order, log scale) and optionally `mu`,
//! `beta_grid` and an explicit finite-memory `plan`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plan::FiniteMemoryPlan;
use crate::symbolic::{word_count, CostTensor, Marginal};
use crate::transfer::MarkovMeasure;
use crate::zero_temp::validate_beta_grid;

/// An explicit plan: Jacobian `J(x, a | b)` at `x * d^(L+1) + a + d * b`,
/// block transition law `transition[a + d * b]` and, optionally, its
/// stationary vector (computed when absent).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanSpec {
    pub block_len: usize,
    pub jacobian: Vec<f64>,
    pub transition: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stationary: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub num_x: usize,
    pub alphabet_size: usize,
    pub depth: usize,
    pub cost: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<PlanSpec>,
}

/// A validated problem.
#[derive(Clone, Debug)]
pub struct Problem {
    pub cost: CostTensor,
    pub mu: Option<Marginal>,
    pub beta_grid: Option<Vec<f64>>,
    pub plan: Option<FiniteMemoryPlan>,
}

impl ProblemSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn build(&self) -> Result<Problem> {
        let cost = CostTensor::new(
            self.num_x,
            self.alphabet_size,
            self.depth,
            self.cost.clone(),
        )?;
        let mu = match &self.mu {
            Some(w) => {
                if w.len() != self.num_x {
                    return Err(Error::DimensionMismatch {
                        field: "mu",
                        expected: self.num_x,
                        found: w.len(),
                    });
                }
                Some(Marginal::new(w.clone())?)
            }
            None => None,
        };
        if let Some(grid) = &self.beta_grid {
            validate_beta_grid(grid)?;
        }
        let plan = match &self.plan {
            Some(p) => Some(p.build(self.num_x, self.alphabet_size)?),
            None => None,
        };
        Ok(Problem {
            cost,
            mu,
            beta_grid: self.beta_grid.clone(),
            plan,
        })
    }
}

impl PlanSpec {
    pub fn build(&self, num_x: usize, d: usize) -> Result<FiniteMemoryPlan> {
        if self.block_len == 0 {
            return Err(Error::InvalidDimension {
                field: "plan.block_len",
                value: 0,
            });
        }
        let words = word_count(d, self.block_len + 1);
        if self.jacobian.len() != num_x * words {
            return Err(Error::DimensionMismatch {
                field: "plan.jacobian",
                expected: num_x * words,
                found: self.jacobian.len(),
            });
        }
        let nu = match &self.stationary {
            Some(p) => MarkovMeasure::new(d, self.block_len, self.transition.clone(), p.clone())?,
            None => MarkovMeasure::from_transition(d, self.block_len, self.transition.clone())?,
        };
        FiniteMemoryPlan::new(num_x, self.jacobian.clone(), nu)
    }
}
