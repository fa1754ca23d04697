//! Exact primal for the constrained zero-temperature value on two-symbol
//! windows: maximize `sum c(x, a·b) q(x, a·b)` over nonnegative `q` with
//! shift-consistent y-windows and x-marginal `mu`, by enumerating the vertices
//! of the feasible polytope.

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::symbolic::{CostTensor, Marginal};

/// Largest number of variables `#X * d^2` accepted.
pub const MAX_VARIABLES: usize = 32;

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub value: f64,
    /// Optimal vertex, indexed by `x * d^2 + (a + d * b)`.
    pub vertex_plan: Vec<f64>,
    pub vertices_visited: usize,
}

/// Rows of `a` that are linearly independent, chosen greedily in order.
fn independent_rows(a: &DMatrix<f64>) -> Vec<usize> {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut keep = Vec::new();
    for i in 0..a.nrows() {
        let mut r: DVector<f64> = a.row(i).transpose();
        for q in &basis {
            let proj = r.dot(q);
            r -= q * proj;
        }
        let norm = r.norm();
        if norm > 1e-9 {
            basis.push(r / norm);
            keep.push(i);
        }
    }
    keep
}

pub fn primal_lp_oracle(c: &CostTensor, mu: &Marginal) -> Result<LpSolution> {
    if c.depth() > 2 {
        return Err(Error::WrongShape {
            what: "primal LP oracle",
            requirement: "depth at most 2",
        });
    }
    if mu.len() != c.num_x() {
        return Err(Error::DimensionMismatch {
            field: "mu",
            expected: c.num_x(),
            found: mu.len(),
        });
    }
    let c = c.lift_depth(2)?;
    let (nx, d) = (c.num_x(), c.alphabet_size());
    let words = d * d;
    let n = nx * words;
    if n > MAX_VARIABLES {
        return Err(Error::SizeCap {
            what: "primal LP variables",
            size: n,
            cap: MAX_VARIABLES,
        });
    }

    let mut a = DMatrix::zeros(d + nx, n);
    let mut rhs = DVector::zeros(d + nx);
    for x in 0..nx {
        for s in 0..d {
            for t in 0..d {
                // word t·s ends in s, word s·t starts with s
                a[(s, x * words + t + d * s)] += 1.0;
                a[(s, x * words + s + d * t)] -= 1.0;
            }
        }
        for w in 0..words {
            a[(d + x, x * words + w)] = 1.0;
        }
        rhs[d + x] = mu.weights()[x];
    }
    let rows = independent_rows(&a);
    let a = a.select_rows(&rows);
    let rhs = rhs.select_rows(&rows);
    let r = rows.len();

    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut visited = 0;
    for cols in (0..n).combinations(r) {
        let b = a.select_columns(&cols);
        let lu = b.lu();
        if lu.determinant().abs() < 0.5 {
            // entries are 0 and +-1, so a nonsingular basis has |det| >= 1
            continue;
        }
        let Some(sol) = lu.solve(&rhs) else { continue };
        if sol.iter().any(|&v| v < -1e-12) {
            continue;
        }
        visited += 1;
        let mut q = vec![0.0; n];
        for (k, &j) in cols.iter().enumerate() {
            q[j] = sol[k].max(0.0);
        }
        let value: f64 = q.iter().zip(c.values()).map(|(q, c)| q * c).sum();
        if best.as_ref().is_none_or(|(v, _)| value > *v) {
            best = Some((value, q));
        }
    }
    let (value, vertex_plan) =
        best.ok_or_else(|| Error::InvalidPlan("LP has no feasible vertex".into()))?;
    Ok(LpSolution {
        value,
        vertex_plan,
        vertices_visited: visited,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_one_uniform_mu() {
        let c = CostTensor::from_weight_matrices(&[
            vec![vec![1.0, 1.0], vec![1.0, 1.0]],
            vec![vec![1.0, 1.0], vec![1.0, 2.0]],
        ])
        .unwrap();
        let mu = Marginal::uniform(2).unwrap();
        let lp = primal_lp_oracle(&c, &mu).unwrap();
        assert!((lp.value - 0.5 * 2f64.ln()).abs() < 1e-15);
        // several vertices are optimal; check the returned one is feasible
        let q = &lp.vertex_plan;
        assert!(q.iter().all(|&v| v >= 0.0));
        assert!((q[0..4].iter().sum::<f64>() - 0.5).abs() < 1e-15);
        assert!((q[4..8].iter().sum::<f64>() - 0.5).abs() < 1e-15);
        // mass of words ending in 0 equals mass of words starting with 0
        let ends = q[0] + q[1] + q[4] + q[5];
        let starts = q[0] + q[2] + q[4] + q[6];
        assert!((ends - starts).abs() < 1e-15);
        assert!((q[7] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_cost_has_zero_value() {
        let c = CostTensor::constant(3, 2, 2, 0.0).unwrap();
        let mu = Marginal::new(vec![0.2, 0.3, 0.5]).unwrap();
        assert_eq!(primal_lp_oracle(&c, &mu).unwrap().value, 0.0);
    }

    #[test]
    fn size_cap() {
        let c = CostTensor::constant(3, 4, 2, 0.0).unwrap();
        let mu = Marginal::uniform(3).unwrap();
        assert!(matches!(
            primal_lp_oracle(&c, &mu),
            Err(Error::SizeCap { .. })
        ));
    }
}
