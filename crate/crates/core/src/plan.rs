//! Finite-memory plans on `X x Omega`: a Jacobian `J(x, a | b)` on blocks of
//! length `L` together with a block-Markov y-marginal.
//!
//! Cylinder masses follow from `pi([x, a w]) = J(x, a | head_L(w)) nu([w])`;
//! shorter words are completed by summing over their extensions.

use crate::error::{Error, Result};
use crate::symbolic::{decode, encode, word_count, CostTensor, Marginal, Word};
use crate::transfer::{
    gibbs_measure, solve_and_normalize, MarkovMeasure, NormalizedCost, DEFAULT_EIGEN_TOL,
};

#[derive(Clone, Debug)]
pub struct FiniteMemoryPlan {
    num_x: usize,
    d: usize,
    block_len: usize,
    states: usize,
    /// `J(x, a | b)` at `x * d * states + a + d * b`.
    jac: Vec<f64>,
    nu: MarkovMeasure,
}

impl FiniteMemoryPlan {
    const INPUT_TOL: f64 = 1e-10;

    pub fn new(num_x: usize, jac: Vec<f64>, nu: MarkovMeasure) -> Result<Self> {
        if num_x == 0 {
            return Err(Error::InvalidDimension {
                field: "num_x",
                value: 0,
            });
        }
        let d = nu.alphabet_size();
        let states = nu.states();
        let words = d * states;
        if jac.len() != num_x * words {
            return Err(Error::DimensionMismatch {
                field: "jacobian",
                expected: num_x * words,
                found: jac.len(),
            });
        }
        if let Some(i) = jac.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidPlan(format!(
                "jacobian entry {i} is negative or non-finite"
            )));
        }
        let plan = FiniteMemoryPlan {
            num_x,
            d,
            block_len: nu.block_len(),
            states,
            jac,
            nu,
        };
        for b in plan.nu.support() {
            let mut total = 0.0;
            for a in 0..d {
                let column: f64 = (0..num_x).map(|x| plan.jacobian(x, a, b)).sum();
                let expected = plan.nu.transition()[a + d * b];
                if (column - expected).abs() > Self::INPUT_TOL {
                    return Err(Error::InvalidPlan(format!(
                        "sum over x of J(x, {a} | {b}) is {column}, y-marginal transition is {expected}"
                    )));
                }
                total += column;
            }
            if (total - 1.0).abs() > Self::INPUT_TOL {
                return Err(Error::InvalidPlan(format!(
                    "jacobian at block {b} sums to {total}"
                )));
            }
        }
        Ok(plan)
    }

    /// The plan where `x` is a function of the first symbol, `x = map[y0]`,
    /// over the y-marginal `nu`.
    pub fn symbol_coupling(num_x: usize, map: &[usize], nu: MarkovMeasure) -> Result<Self> {
        let d = nu.alphabet_size();
        if map.len() != d || map.iter().any(|&x| x >= num_x) {
            return Err(Error::InvalidPlan(
                "symbol map must send every symbol into X".into(),
            ));
        }
        let words = d * nu.states();
        let mut jac = vec![0.0; num_x * words];
        for w in 0..words {
            jac[map[w % d] * words + w] = nu.transition()[w];
        }
        Self::new(num_x, jac, nu)
    }

    pub fn num_x(&self) -> usize {
        self.num_x
    }

    pub fn alphabet_size(&self) -> usize {
        self.d
    }

    pub fn block_len(&self) -> usize {
        self.block_len
    }

    /// Number of y-coordinates the Jacobian reads, `L + 1`.
    pub fn memory(&self) -> usize {
        self.block_len + 1
    }

    pub fn jacobian(&self, x: usize, a: usize, b: usize) -> f64 {
        self.jac[x * self.d * self.states + a + self.d * b]
    }

    /// The Jacobian as a cost-shaped tensor, `J[x * d^(L+1) + a·b]`.
    pub fn jacobian_values(&self) -> &[f64] {
        &self.jac
    }

    pub fn nu(&self) -> &MarkovMeasure {
        &self.nu
    }

    /// `pi([x, word])` for a non-empty word.
    pub fn cylinder(&self, x: usize, word: &[usize]) -> f64 {
        assert!(!word.is_empty(), "plan cylinders need at least one symbol");
        let a = word[0];
        let tail = &word[1..];
        let (d, len) = (self.d, self.block_len);
        if tail.len() >= len {
            let b = encode(&tail[..len], d);
            let j = self.jacobian(x, a, b);
            if j == 0.0 {
                return 0.0;
            }
            return j * self.nu.cylinder(tail);
        }
        let base = encode(tail, d);
        let stride = word_count(d, tail.len());
        let p = self.nu.stationary();
        (0..word_count(d, len - tail.len()))
            .map(|z| {
                let b = base + stride * z;
                self.jacobian(x, a, b) * p[b]
            })
            .sum()
    }

    /// All `(x, word index, mass)` triples at a given word length, in canonical order.
    pub fn cylinders(&self, len: usize) -> Vec<(usize, usize, f64)> {
        let words = word_count(self.d, len);
        let mut out = Vec::with_capacity(self.num_x * words);
        for x in 0..self.num_x {
            for w in 0..words {
                out.push((x, w, self.cylinder(x, &decode(w, len, self.d))));
            }
        }
        out
    }

    /// `J^n(x, y0..yn) = pi([x, y0..yn]) / nu([y1..yn])`, undefined on
    /// `nu`-null cylinders.
    pub fn jacobian_n(&self, n: usize) -> JacobianTensor {
        let len = n + 1;
        let words = word_count(self.d, len);
        let mut values = Vec::with_capacity(self.num_x * words);
        for x in 0..self.num_x {
            for w in 0..words {
                let word = decode(w, len, self.d);
                let denom = self.nu.cylinder(&word[1..]);
                values.push(if denom > 0.0 {
                    Some(self.cylinder(x, &word) / denom)
                } else {
                    None
                });
            }
        }
        JacobianTensor {
            n,
            num_x: self.num_x,
            d: self.d,
            values,
        }
    }

    /// `H(pi) = -sum_b p(b) sum_{x,a} J log J`, with `0 log 0 = 0`.
    pub fn entropy(&self) -> f64 {
        let p = self.nu.stationary();
        let mut h = 0.0;
        for b in self.nu.support() {
            let mut inner = 0.0;
            for x in 0..self.num_x {
                for a in 0..self.d {
                    let j = self.jacobian(x, a, b);
                    if j > 0.0 {
                        inner += j * j.ln();
                    }
                }
            }
            h -= p[b] * inner;
        }
        h
    }

    /// `-integral of log J^n dpi`, summed over cylinders of length `n + 1`.
    pub fn entropy_at(&self, n: usize) -> f64 {
        let jn = self.jacobian_n(n);
        let words = word_count(self.d, n + 1);
        let mut h = 0.0;
        for x in 0..self.num_x {
            for w in 0..words {
                let mass = self.cylinder(x, &decode(w, n + 1, self.d));
                if mass > 0.0 {
                    let j =
                        jn.values[x * words + w].expect("positive mass implies defined Jacobian");
                    h -= mass * j.ln();
                }
            }
        }
        h
    }

    /// `integral of c dpi` for a finite-memory cost on the same `X` and alphabet.
    pub fn integrate(&self, c: &CostTensor) -> f64 {
        assert_eq!(c.num_x(), self.num_x);
        assert_eq!(c.alphabet_size(), self.d);
        let words = c.words();
        let mut total = 0.0;
        for x in 0..self.num_x {
            for w in 0..words {
                let mass = self.cylinder(x, &decode(w, c.depth(), self.d));
                if mass > 0.0 {
                    total += mass * c.get(x, w);
                }
            }
        }
        total
    }

    /// x-marginal, `pi([x, .])`.
    pub fn marginal_x(&self) -> Vec<f64> {
        let p = self.nu.stationary();
        (0..self.num_x)
            .map(|x| {
                self.nu
                    .support()
                    .into_iter()
                    .map(|b| p[b] * (0..self.d).map(|a| self.jacobian(x, a, b)).sum::<f64>())
                    .sum()
            })
            .collect()
    }

    /// The stored y-marginal, after checking it against summed cylinder masses.
    pub fn marginal_y(&self) -> Result<&MarkovMeasure> {
        let residual = self.y_marginal_residual();
        if residual > Self::INPUT_TOL {
            return Err(Error::InvalidPlan(format!(
                "y-marginal disagrees with cylinder sums by {residual:e}"
            )));
        }
        Ok(&self.nu)
    }

    /// `max_w |sum_x pi([x, w]) - nu([w])|` over words of length `L + 1`.
    pub fn y_marginal_residual(&self) -> f64 {
        let len = self.memory();
        (0..word_count(self.d, len))
            .map(|w| {
                let word = decode(w, len, self.d);
                let summed: f64 = (0..self.num_x).map(|x| self.cylinder(x, &word)).sum();
                (summed - self.nu.cylinder(&word)).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Values of `J^n` on cylinders `[x, y0..yn]`; `None` where `nu([y1..yn]) = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct JacobianTensor {
    pub n: usize,
    pub num_x: usize,
    pub d: usize,
    pub values: Vec<Option<f64>>,
}

impl JacobianTensor {
    pub fn get(&self, x: usize, word: &[usize]) -> Option<f64> {
        assert_eq!(word.len(), self.n + 1);
        self.values[x * word_count(self.d, self.n + 1) + encode(word, self.d)]
    }
}

/// A validated plan cylinder query `[x, y0 .. yn]`.
#[derive(Clone, Debug)]
pub struct PlanCylinderQuery {
    pub x: usize,
    pub word: Word,
}

impl PlanCylinderQuery {
    pub fn new(x: usize, symbols: Vec<usize>, num_x: usize, d: usize) -> Result<Self> {
        if x >= num_x {
            return Err(Error::SymbolOutOfRange {
                position: 0,
                symbol: x,
                size: num_x,
            });
        }
        if symbols.is_empty() {
            return Err(Error::InvalidPlan("cylinder word must be non-empty".into()));
        }
        Ok(PlanCylinderQuery {
            x,
            word: Word::new(symbols, d)?,
        })
    }
}

pub fn plan_cylinder(plan: &FiniteMemoryPlan, q: &PlanCylinderQuery) -> f64 {
    plan.cylinder(q.x, q.word.symbols())
}

/// The Gibbs plan of a normalized cost: `J = exp(c)` over the Gibbs measure.
pub fn gibbs_plan(nc: &NormalizedCost) -> Result<FiniteMemoryPlan> {
    let nu = gibbs_measure(nc)?;
    let jac = nc.cost().values().iter().map(|v| v.exp()).collect();
    FiniteMemoryPlan::new(nc.cost().num_x(), jac, nu)
}

/// The unique equilibrium plan of `c` and the pressure `P(c)`.
pub fn equilibrium_plan(c: &CostTensor) -> Result<(FiniteMemoryPlan, f64)> {
    equilibrium_plan_with_tol(c, DEFAULT_EIGEN_TOL)
}

pub fn equilibrium_plan_with_tol(c: &CostTensor, tol: f64) -> Result<(FiniteMemoryPlan, f64)> {
    let (r, nc) = solve_and_normalize(c, tol)?;
    Ok((gibbs_plan(&nc)?, r.log_lambda))
}

/// The product `mu x nu`.
pub fn product_plan(mu: &Marginal, nu: &MarkovMeasure) -> Result<FiniteMemoryPlan> {
    let words = nu.alphabet_size() * nu.states();
    let mut jac = Vec::with_capacity(mu.len() * words);
    for &m in mu.weights() {
        jac.extend(nu.transition().iter().map(|q| m * q));
    }
    FiniteMemoryPlan::new(mu.len(), jac, nu.clone())
}

/// A normalized cost of depth `n + 1` approximating `log J^n` on the support
/// of the plan: `log(#B eps)` on null entries `A` of a supported block,
/// `log(J^n - #A eps)` on the others, and `-log(#X d)` on null blocks.
pub fn b_epsilon(plan: &FiniteMemoryPlan, eps: f64, n: usize) -> Result<NormalizedCost> {
    let (num_x, d) = (plan.num_x(), plan.alphabet_size());
    let len = n + 1;
    let tails = word_count(d, n);
    let words = word_count(d, len);
    let uniform = -((num_x * d) as f64).ln();
    let mut values = vec![0.0; num_x * words];
    for t in 0..tails {
        let tail = decode(t, n, d);
        let nu_tail = plan.nu().cylinder(&tail);
        let entries: Vec<(usize, usize)> = (0..num_x)
            .flat_map(|x| (0..d).map(move |a| (x, a + d * t)))
            .collect();
        if nu_tail == 0.0 {
            for &(x, w) in &entries {
                values[x * words + w] = uniform;
            }
            continue;
        }
        let jn: Vec<f64> = entries
            .iter()
            .map(|&(x, w)| plan.cylinder(x, &decode(w, len, d)) / nu_tail)
            .collect();
        let null = jn.iter().filter(|&&j| j == 0.0).count();
        let positive = jn.len() - null;
        if null > 0 {
            let max = jn
                .iter()
                .filter(|&&j| j > 0.0)
                .fold(f64::INFINITY, |m, &j| m.min(j))
                / null as f64;
            if eps >= max || eps <= 0.0 {
                return Err(Error::EpsilonTooLarge { eps, max });
            }
        }
        for (&(x, w), &j) in entries.iter().zip(&jn) {
            values[x * words + w] = if j == 0.0 {
                (positive as f64 * eps).ln()
            } else {
                (j - null as f64 * eps).ln()
            };
        }
    }
    NormalizedCost::new(CostTensor::new(num_x, d, len.max(1), values)?)
}
