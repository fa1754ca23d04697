//! Transfer operator on block states, its Perron eigen-data, normalization,
//! pressure and the Gibbs y-marginal.
//!
//! A cost of depth `m` is handled on the block alphabet of length
//! `L = max(m - 1, 1)`. For a current block `b` and a symbol `a`, the word
//! `a·b` has length `L + 1` and canonical index `a + d * b`; its leading
//! `L`-block `(a + d * b) mod d^L` is the successor state. The matrix
//! `M[b', b] = sum_x exp(c(x, a·b))` is column-oriented (columns index the
//! current state), so a normalized cost produces a column-stochastic matrix.
//!
//! Eigen-iterations run in log domain throughout, which keeps `beta * c` at
//! large `beta` free of overflow.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::maxplus::MaxPlusGraph;
use crate::symbolic::{word_count, CostTensor};

/// Default tolerance on the eigen-residual.
pub const DEFAULT_EIGEN_TOL: f64 = 1e-13;
/// Iteration cap for the power iteration.
pub const MAX_ITERATIONS: usize = 1_000_000;
/// Estimated contraction ratio above which the spectral gap is flagged.
pub const GAP_WARNING: f64 = 1.0 - 1e-8;
/// Tropical warm starts use an `O(n^3)` closure; skip it for large chains.
const WARM_START_LIMIT: usize = 512;
/// Work budget (in flops of the dense solves) for Noda iteration before
/// falling back to power iteration; at least 60 and at most 1000 steps.
const NODA_FLOPS: f64 = 2e9;
/// Tolerance used when accepting an externally built normalized cost.
pub const NORMALIZATION_CHECK: f64 = 1e-9;
/// Tolerance on `Qp = p` for stationary vectors.
pub const STATIONARY_TOL: f64 = 1e-12;

pub(crate) fn log_sum_exp(values: impl IntoIterator<Item = f64>) -> f64 {
    let values: Vec<f64> = values.into_iter().collect();
    let top = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if top.is_infinite() {
        return top;
    }
    top + values.iter().map(|v| (v - top).exp()).sum::<f64>().ln()
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        hi
    } else {
        hi + (lo - hi).exp().ln_1p()
    }
}

/// The transfer operator of a finite-memory cost, as weights on block transitions.
#[derive(Clone, Debug)]
pub struct TransferMatrix {
    num_x: usize,
    d: usize,
    block_len: usize,
    states: usize,
    /// `c(x, a·b)` at index `(x * d + a) * states + b`.
    log_weights: Vec<f64>,
}

impl TransferMatrix {
    pub fn num_x(&self) -> usize {
        self.num_x
    }

    pub fn alphabet_size(&self) -> usize {
        self.d
    }

    pub fn block_len(&self) -> usize {
        self.block_len
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn successor(&self, a: usize, b: usize) -> usize {
        (a + self.d * b) % self.states
    }

    pub fn log_weight(&self, x: usize, a: usize, b: usize) -> f64 {
        self.log_weights[(x * self.d + a) * self.states + b]
    }

    /// `log M[succ(a, b), b]`, indexed `a * states + b`.
    pub fn log_entries(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.d * self.states);
        for a in 0..self.d {
            for b in 0..self.states {
                out.push(log_sum_exp(
                    (0..self.num_x).map(|x| self.log_weight(x, a, b)),
                ));
            }
        }
        out
    }

    /// Dense `M[b', b]`.
    pub fn matrix(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.states, self.states);
        for x in 0..self.num_x {
            m += self.per_x(x);
        }
        m
    }

    /// Dense matrix of the weights `exp(c(x, a·b))` for one `x`.
    pub fn per_x(&self, x: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.states, self.states);
        for a in 0..self.d {
            for b in 0..self.states {
                m[(self.successor(a, b), b)] += self.log_weight(x, a, b).exp();
            }
        }
        m
    }

    fn forward_graph(&self, log_entries: &[f64]) -> MaxPlusGraph {
        let mut edges = Vec::with_capacity(log_entries.len());
        for a in 0..self.d {
            for b in 0..self.states {
                edges.push((b, self.successor(a, b), log_entries[a * self.states + b]));
            }
        }
        MaxPlusGraph::new(self.states, edges)
    }
}

/// Assembles the transfer operator of `c` on blocks of length `max(m - 1, 1)`.
pub fn assemble_transfer(c: &CostTensor) -> TransferMatrix {
    let lifted = c.lifted_for_blocks();
    let d = lifted.alphabet_size();
    let block_len = lifted.depth() - 1;
    let states = word_count(d, block_len);
    let num_x = lifted.num_x();
    let mut log_weights = Vec::with_capacity(num_x * d * states);
    for x in 0..num_x {
        for a in 0..d {
            for b in 0..states {
                log_weights.push(lifted.get(x, a + d * b));
            }
        }
    }
    TransferMatrix {
        num_x,
        d,
        block_len,
        states,
        log_weights,
    }
}

/// Dominant eigen-data of a transfer operator, held in log scale.
#[derive(Clone, Debug)]
pub struct RpfSolution {
    pub log_lambda: f64,
    /// `log h` with `min h = 1`; `h` is the eigenfunction of the operator
    /// (`sum_{b'} M[b', b] h(b') = lambda h(b)`).
    pub log_h: Vec<f64>,
    /// `log` of the eigenmeasure (`M left = lambda left`), normalized to sum 1.
    pub log_left: Vec<f64>,
    /// `max_b |(L h)(b) / (lambda h(b)) - 1|`.
    pub residual: f64,
    /// Same quantity for the eigenmeasure.
    pub left_residual: f64,
    /// Contraction ratio of the last iterations (shifted operator).
    pub gap_estimate: f64,
    /// Tolerance actually enforced (the requested one, or the rounding floor).
    pub tolerance: f64,
    pub iterations: usize,
}

impl RpfSolution {
    pub fn lambda(&self) -> f64 {
        self.log_lambda.exp()
    }

    pub fn h(&self) -> Vec<f64> {
        self.log_h.iter().map(|v| v.exp()).collect()
    }

    pub fn left(&self) -> Vec<f64> {
        self.log_left.iter().map(|v| v.exp()).collect()
    }

    pub fn gap_warning(&self) -> bool {
        self.gap_estimate > GAP_WARNING
    }
}

struct PowerOutcome {
    log_lambda: f64,
    vector: Vec<f64>,
    residual: f64,
    gap: f64,
    target: f64,
    iterations: usize,
}

/// Power iteration on `(A + lambda_k I)` in log domain, `lambda_k` being the
/// running Collatz-Wielandt midpoint. The shift removes the rotation modes of
/// periodic structures without moving the Perron vector.
fn shifted_power(
    apply: impl Fn(&[f64]) -> Vec<f64>,
    mut u: Vec<f64>,
    tol: f64,
    weight_scale: f64,
) -> Result<PowerOutcome> {
    let spread_of = |u: &[f64]| {
        let hi = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = u.iter().cloned().fold(f64::INFINITY, f64::min);
        hi - lo
    };
    let scale = 1.0 + weight_scale + spread_of(&u);
    let target = tol.max(64.0 * f64::EPSILON * scale);
    let mut prev_spread = f64::INFINITY;
    let mut gap = 0.0;
    let mut last = f64::NAN;
    for it in 0..MAX_ITERATIONS {
        let v = apply(&u);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (vb, ub) in v.iter().zip(&u) {
            let r = vb - ub;
            lo = lo.min(r);
            hi = hi.max(r);
        }
        let spread = hi - lo;
        if !spread.is_finite() {
            return Err(Error::RpfNotConverged {
                iterations: it,
                residual: f64::NAN,
            });
        }
        if prev_spread.is_finite() && prev_spread > 0.0 {
            gap = spread / prev_spread;
        }
        last = spread;
        if spread <= target {
            let log_lambda = 0.5 * (lo + hi);
            let residual = v
                .iter()
                .zip(&u)
                .map(|(vb, ub)| (vb - ub - log_lambda).exp_m1().abs())
                .fold(0.0, f64::max);
            return Ok(PowerOutcome {
                log_lambda,
                vector: u,
                residual,
                gap,
                target,
                iterations: it + 1,
            });
        }
        let shift = 0.5 * (lo + hi);
        let mut next: Vec<f64> = v
            .iter()
            .zip(&u)
            .map(|(&vb, &ub)| log_add_exp(vb, ub + shift))
            .collect();
        let top = next.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        next.iter_mut().for_each(|x| *x -= top);
        u = next;
        prev_spread = spread;
    }
    Err(Error::RpfNotConverged {
        iterations: MAX_ITERATIONS,
        residual: last.exp_m1(),
    })
}

/// Noda iteration for `v(i) = log sum_j exp(logk[i][j] + u[j])`: each step
/// rescales the matrix by the current vector and the Collatz-Wielandt upper
/// bound, then solves `(sigma I - A) z = 1` with `sigma` just above 1. The update stays positive and converges
/// even when the second eigenvalue is close to the first.
fn noda(logk: &[Vec<f64>], mut u: Vec<f64>, tol: f64, weight_scale: f64) -> Option<PowerOutcome> {
    let n = logk.len();
    let apply = |u: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| log_sum_exp((0..n).map(|j| logk[i][j] + u[j])))
            .collect()
    };
    let spread_of = |u: &[f64]| {
        let hi = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = u.iter().cloned().fold(f64::INFINITY, f64::min);
        hi - lo
    };
    let mut target = tol.max(64.0 * f64::EPSILON * (1.0 + weight_scale + spread_of(&u)));
    let mut prev_spread = f64::INFINITY;
    let mut stalled = 0;
    let mut gap = 0.0;
    let steps = (NODA_FLOPS / (n as f64).powi(3)).clamp(60.0, 20000.0) as usize;
    for it in 0..steps {
        let v = apply(&u);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for (vi, ui) in v.iter().zip(&u) {
            lo = lo.min(vi - ui);
            hi = hi.max(vi - ui);
        }
        let spread = hi - lo;
        if !spread.is_finite() {
            return None;
        }
        if prev_spread.is_finite() && prev_spread > 0.0 {
            gap = spread / prev_spread;
        }
        // stuck just above the estimated rounding floor: report the floor
        // actually reached
        stalled = if spread >= prev_spread {
            stalled + 1
        } else {
            0
        };
        if stalled >= 5 && spread <= 1024.0 * target {
            target = spread;
        }
        if spread <= target {
            let log_lambda = 0.5 * (lo + hi);
            let residual = v
                .iter()
                .zip(&u)
                .map(|(vi, ui)| (vi - ui - log_lambda).exp_m1().abs())
                .fold(0.0, f64::max);
            return Some(PowerOutcome {
                log_lambda,
                vector: u,
                residual,
                gap,
                target,
                iterations: it + 1,
            });
        }
        // shift above the spectral radius by the rounding floor, so that
        // (sigma I - A)^-1 stays a positive matrix
        let sigma = 1.0 + target;
        let a = DMatrix::from_fn(n, n, |i, j| {
            let e = (logk[i][j] + u[j] - u[i] - hi).exp();
            if i == j {
                sigma - e
            } else {
                -e
            }
        });
        let z = a.lu().solve(&DVector::from_element(n, 1.0))?;
        if z.iter().any(|&zi| !(zi > 0.0 && zi.is_finite())) {
            return None;
        }
        for (ui, zi) in u.iter_mut().zip(z.iter()) {
            *ui += zi.ln();
        }
        let top = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        u.iter_mut().for_each(|x| *x -= top);
        prev_spread = spread;
    }
    None
}

/// Solves the Perron eigenproblem of `t` to tolerance `tol` on the eigen-residual.
pub fn rpf_solve(t: &TransferMatrix, tol: f64) -> Result<RpfSolution> {
    let n = t.states;
    let d = t.d;
    let lm = t.log_entries();
    let weight_scale = lm.iter().fold(0.0_f64, |m, v| m.max(v.abs()));

    let forward = t.forward_graph(&lm);
    let (init_h, init_left) = if n <= WARM_START_LIMIT {
        let m = forward.max_cycle_mean();
        (
            forward.eigenvector(m).0,
            forward.reversed().eigenvector(m).0,
        )
    } else {
        (vec![0.0; n], vec![0.0; n])
    };

    let apply = |u: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|b| log_sum_exp((0..d).map(|a| lm[a * n + b] + u[t.successor(a, b)])))
            .collect()
    };
    let apply_adjoint = |u: &[f64]| -> Vec<f64> {
        let mut terms: Vec<Vec<f64>> = vec![Vec::with_capacity(d); n];
        for a in 0..d {
            for b in 0..n {
                terms[t.successor(a, b)].push(lm[a * n + b] + u[b]);
            }
        }
        terms.into_iter().map(log_sum_exp).collect()
    };

    let dense = if n <= WARM_START_LIMIT {
        let mut logk = vec![vec![f64::NEG_INFINITY; n]; n];
        for a in 0..d {
            for b in 0..n {
                let s = t.successor(a, b);
                logk[b][s] = log_add_exp(logk[b][s], lm[a * n + b]);
            }
        }
        let transposed: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| logk[j][i]).collect())
            .collect();
        noda(&logk, init_h.clone(), tol, weight_scale).zip(noda(
            &transposed,
            init_left.clone(),
            tol,
            weight_scale,
        ))
    } else {
        None
    };
    let (right, left) = match dense {
        Some(pair) => pair,
        None => (
            shifted_power(apply, init_h, tol, weight_scale)?,
            shifted_power(apply_adjoint, init_left, tol, weight_scale)?,
        ),
    };

    let mut log_h = right.vector;
    let low = log_h.iter().cloned().fold(f64::INFINITY, f64::min);
    log_h.iter_mut().for_each(|v| *v -= low);
    let mut log_left = left.vector;
    let total = log_sum_exp(log_left.iter().cloned());
    log_left.iter_mut().for_each(|v| *v -= total);

    let solution = RpfSolution {
        log_lambda: right.log_lambda,
        log_h,
        log_left,
        residual: right.residual,
        left_residual: left.residual,
        gap_estimate: right.gap,
        tolerance: right.target,
        iterations: right.iterations + left.iterations,
    };
    if solution.gap_warning() {
        log::warn!(
            "spectral gap estimate {} close to 1; dominant eigenvalue may be poorly separated",
            solution.gap_estimate
        );
    }
    Ok(solution)
}

/// A cost whose weights sum to one over all `(x, a)` at every block.
#[derive(Clone, Debug)]
pub struct NormalizedCost {
    cost: CostTensor,
    /// Eigen-data used to build it, when it came from [`normalize`].
    pub log_lambda: Option<f64>,
    pub log_h: Option<Vec<f64>>,
    /// `log` of the eigenmeasure, when it came from [`normalize`].
    pub log_left: Option<Vec<f64>>,
}

impl NormalizedCost {
    /// Accepts a cost that is already normalized (checked at [`NORMALIZATION_CHECK`]).
    pub fn new(cost: CostTensor) -> Result<Self> {
        let cost = cost.lifted_for_blocks();
        let residual = normalization_residual(&cost);
        if residual > NORMALIZATION_CHECK {
            return Err(Error::ResidualTooLarge {
                residual,
                tol: NORMALIZATION_CHECK,
            });
        }
        Ok(NormalizedCost {
            cost,
            log_lambda: None,
            log_h: None,
            log_left: None,
        })
    }

    /// The uniform normalized cost `-log(#X d)`.
    pub fn uniform(num_x: usize, d: usize, depth: usize) -> Result<Self> {
        let value = -((num_x * d) as f64).ln();
        Self::new(CostTensor::constant(num_x, d, depth, value)?)
    }

    pub fn cost(&self) -> &CostTensor {
        &self.cost
    }

    pub fn into_cost(self) -> CostTensor {
        self.cost
    }
}

/// `max_b |sum_{x,a} exp(c(x, a·b)) - 1|`, on the block lift of `c`.
pub fn normalization_residual(c: &CostTensor) -> f64 {
    let t = assemble_transfer(c);
    let mut worst = 0.0_f64;
    for b in 0..t.states {
        let mut total = 0.0;
        for x in 0..t.num_x {
            for a in 0..t.d {
                total += t.log_weight(x, a, b).exp();
            }
        }
        worst = worst.max((total - 1.0).abs());
    }
    worst
}

/// `c(x, a·b) + log h(succ(a, b)) - log h(b) - log lambda`, with the block
/// sums then rescaled to one.
pub fn normalize(c: &CostTensor, r: &RpfSolution) -> Result<NormalizedCost> {
    let lifted = c.lifted_for_blocks();
    let d = lifted.alphabet_size();
    let states = word_count(d, lifted.depth() - 1);
    if r.log_h.len() != states {
        return Err(Error::DimensionMismatch {
            field: "eigenfunction",
            expected: states,
            found: r.log_h.len(),
        });
    }
    let limit = 10.0 * r.tolerance;
    if !(r.residual <= limit) {
        return Err(Error::ResidualTooLarge {
            residual: r.residual,
            tol: limit,
        });
    }
    let words = lifted.words();
    let raw = |x: usize, word: usize| {
        lifted.get(x, word) + r.log_h[word % states] - r.log_h[word / d] - r.log_lambda
    };
    // the leftover log-mass at each block is of the size of the eigen-residual;
    // removing it makes the block sums one to rounding
    let leftover: Vec<f64> = (0..states)
        .map(|b| {
            log_sum_exp(
                (0..lifted.num_x())
                    .flat_map(|x| (0..d).map(move |a| (x, a + d * b)))
                    .map(|(x, w)| raw(x, w)),
            )
        })
        .collect();
    let normalized = CostTensor::from_fn(lifted.num_x(), d, lifted.depth(), |x, w| {
        let word = crate::symbolic::encode(w, d);
        raw(x, word) - leftover[word / d]
    })?;
    debug_assert_eq!(normalized.words(), words);
    Ok(NormalizedCost {
        cost: normalized,
        log_lambda: Some(r.log_lambda),
        log_h: Some(r.log_h.clone()),
        log_left: Some(r.log_left.clone()),
    })
}

/// Pressure `P(c) = log lambda_c` at the default eigen-tolerance.
pub fn pressure(c: &CostTensor) -> Result<f64> {
    pressure_with_tol(c, DEFAULT_EIGEN_TOL)
}

pub fn pressure_with_tol(c: &CostTensor, tol: f64) -> Result<f64> {
    Ok(rpf_solve(&assemble_transfer(c), tol)?.log_lambda)
}

/// Eigen-data and normalization in one call.
pub fn solve_and_normalize(c: &CostTensor, tol: f64) -> Result<(RpfSolution, NormalizedCost)> {
    let r = rpf_solve(&assemble_transfer(c), tol)?;
    let nc = normalize(c, &r)?;
    Ok((r, nc))
}

/// A shift-invariant block-Markov measure on `Omega`.
///
/// `trans[a + d * b]` is the probability of the word `a·b` given its tail
/// block `b`, so that `nu([a w]) = trans[a·head(w)] * nu([w])`.
#[derive(Clone, Debug, PartialEq)]
pub struct MarkovMeasure {
    d: usize,
    block_len: usize,
    states: usize,
    trans: Vec<f64>,
    p: Vec<f64>,
}

impl MarkovMeasure {
    const INPUT_TOL: f64 = 1e-10;

    /// Validates a transition law and a stationary vector. The column law
    /// and stationarity are enforced on supported states only.
    pub fn new(d: usize, block_len: usize, trans: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        if d == 0 || block_len == 0 {
            return Err(Error::InvalidMarkov(
                "alphabet and block length must be >= 1".into(),
            ));
        }
        let states = word_count(d, block_len);
        if trans.len() != d * states {
            return Err(Error::DimensionMismatch {
                field: "transition",
                expected: d * states,
                found: trans.len(),
            });
        }
        if p.len() != states {
            return Err(Error::DimensionMismatch {
                field: "stationary",
                expected: states,
                found: p.len(),
            });
        }
        if let Some(i) = trans.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidMarkov(format!(
                "transition entry {i} is not a probability"
            )));
        }
        if let Some(i) = p.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidMarkov(format!(
                "stationary entry {i} is negative"
            )));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > Self::INPUT_TOL {
            return Err(Error::InvalidMarkov(format!(
                "stationary vector sums to {total}"
            )));
        }
        let measure = MarkovMeasure {
            d,
            block_len,
            states,
            trans,
            p,
        };
        for b in measure.support() {
            let col: f64 = (0..d).map(|a| measure.trans[a + d * b]).sum();
            if (col - 1.0).abs() > Self::INPUT_TOL {
                return Err(Error::InvalidMarkov(format!(
                    "transition column {b} sums to {col}"
                )));
            }
        }
        let residual = measure.stationarity_residual();
        if residual > Self::INPUT_TOL {
            return Err(Error::InvalidMarkov(format!(
                "stationary vector residual {residual:e}"
            )));
        }
        Ok(measure)
    }

    /// Computes the stationary vector of an irreducible transition law.
    pub fn from_transition(d: usize, block_len: usize, trans: Vec<f64>) -> Result<Self> {
        let states = word_count(d, block_len);
        if trans.len() != d * states {
            return Err(Error::DimensionMismatch {
                field: "transition",
                expected: d * states,
                found: trans.len(),
            });
        }
        let q = transition_matrix(d, states, &trans);
        let p = stationary_vector(&q)?;
        Self::new(d, block_len, trans, p)
    }

    /// Bernoulli measure with symbol probabilities `probs`, as a block chain.
    pub fn bernoulli(probs: &[f64], block_len: usize) -> Result<Self> {
        let d = probs.len();
        let states = word_count(d, block_len);
        let mut trans = Vec::with_capacity(d * states);
        for w in 0..d * states {
            trans.push(probs[w % d]);
        }
        let p = (0..states)
            .map(|b| {
                crate::symbolic::decode(b, block_len, d)
                    .iter()
                    .map(|&s| probs[s])
                    .product()
            })
            .collect();
        Self::new(d, block_len, trans, p)
    }

    /// The invariant measure carried by the orbit of the periodic point
    /// `word word word ...`.
    pub fn periodic_orbit(word: &[usize], d: usize, block_len: usize) -> Result<Self> {
        let period = word.len();
        if period == 0 || word.iter().any(|&s| s >= d) {
            return Err(Error::InvalidMarkov(
                "periodic word must be non-empty and in range".into(),
            ));
        }
        let states = word_count(d, block_len);
        let mut long_counts = vec![0.0; d * states];
        let mut counts = vec![0.0; states];
        for j in 0..period {
            let symbol = |k: usize| word[(j + k) % period];
            let block: Vec<usize> = (0..block_len).map(symbol).collect();
            let long: Vec<usize> = (0..=block_len).map(symbol).collect();
            counts[crate::symbolic::encode(&block, d)] += 1.0;
            long_counts[crate::symbolic::encode(&long, d)] += 1.0;
        }
        // long word a·b was counted at the shift whose tail block is b
        let p: Vec<f64> = counts.iter().map(|c| c / period as f64).collect();
        let mut trans = vec![0.0; d * states];
        for b in 0..states {
            let tail: f64 = (0..d).map(|a| long_counts[a + d * b]).sum();
            for a in 0..d {
                trans[a + d * b] = if tail > 0.0 {
                    long_counts[a + d * b] / tail
                } else {
                    1.0 / d as f64
                };
            }
        }
        Self::new(d, block_len, trans, p)
    }

    pub fn alphabet_size(&self) -> usize {
        self.d
    }

    pub fn block_len(&self) -> usize {
        self.block_len
    }

    pub fn states(&self) -> usize {
        self.states
    }

    /// `Q(a | b)` at index `a + d * b`.
    pub fn transition(&self) -> &[f64] {
        &self.trans
    }

    pub fn stationary(&self) -> &[f64] {
        &self.p
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.states).filter(|&b| self.p[b] > 0.0).collect()
    }

    pub fn successor(&self, a: usize, b: usize) -> usize {
        (a + self.d * b) % self.states
    }

    /// Dense column-stochastic `Q[b', b]`.
    pub fn q_matrix(&self) -> DMatrix<f64> {
        transition_matrix(self.d, self.states, &self.trans)
    }

    pub fn stationarity_residual(&self) -> f64 {
        let q = self.q_matrix();
        let p = DVector::from_column_slice(&self.p);
        (q * &p - p).amax()
    }

    /// `nu([w])` for a word given by its symbols.
    pub fn cylinder(&self, word: &[usize]) -> f64 {
        let (d, len) = (self.d, self.block_len);
        let k = word.len();
        if k == 0 {
            return 1.0;
        }
        if k < len {
            let base = crate::symbolic::encode(word, d);
            let stride = word_count(d, k);
            return (0..word_count(d, len - k))
                .map(|z| self.p[base + stride * z])
                .sum();
        }
        let mut mass = self.p[crate::symbolic::encode(&word[k - len..], d)];
        for i in 0..k - len {
            mass *= self.trans[crate::symbolic::encode(&word[i..=i + len], d)];
            if mass == 0.0 {
                break;
            }
        }
        mass
    }

    /// Kolmogorov-Sinai entropy `-sum_b p(b) sum_a Q log Q`.
    pub fn entropy(&self) -> f64 {
        let mut h = 0.0;
        for b in self.support() {
            for a in 0..self.d {
                let q = self.trans[a + self.d * b];
                if q > 0.0 {
                    h -= self.p[b] * q * q.ln();
                }
            }
        }
        h
    }
}

fn transition_matrix(d: usize, states: usize, trans: &[f64]) -> DMatrix<f64> {
    let mut q = DMatrix::zeros(states, states);
    for a in 0..d {
        for b in 0..states {
            q[((a + d * b) % states, b)] += trans[a + d * b];
        }
    }
    q
}

/// Stationary vector of a column-stochastic matrix with a unique recurrent
/// class, from the nonsingular system `(I - Q + 1 1^T) p = 1`.
fn stationary_vector(q: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = q.nrows();
    let system = DMatrix::identity(n, n) - q + DMatrix::from_element(n, n, 1.0);
    let lu = system.clone().lu();
    let ones = DVector::from_element(n, 1.0);
    let mut p = lu
        .solve(&ones)
        .ok_or(Error::StationaryFailed { residual: f64::NAN })?;
    // one step of iterative refinement
    let correction = lu
        .solve(&(&ones - &system * &p))
        .ok_or(Error::StationaryFailed { residual: f64::NAN })?;
    p += correction;
    p.iter_mut().for_each(|v| *v = v.max(0.0));
    let total = p.sum();
    p /= total;
    let residual = (q * &p - &p).amax();
    if !(residual <= STATIONARY_TOL) {
        return Err(Error::StationaryFailed { residual });
    }
    Ok(p.iter().copied().collect())
}

/// The Gibbs measure of a normalized cost: the block chain
/// `Q(a | b) = sum_x exp(c(x, a·b))` with its stationary vector.
pub fn gibbs_measure(nc: &NormalizedCost) -> Result<MarkovMeasure> {
    let c = nc.cost();
    let d = c.alphabet_size();
    let block_len = c.depth() - 1;
    let words = c.words();
    let trans: Vec<f64> = (0..words)
        .map(|w| (0..c.num_x()).map(|x| c.get(x, w).exp()).sum())
        .collect();
    // with eigen-data at hand, p = h * left (normalized) is exact in log
    // scale, also for chains that are reducible to rounding
    if let (Some(log_h), Some(log_left)) = (&nc.log_h, &nc.log_left) {
        let log_p: Vec<f64> = log_h.iter().zip(log_left).map(|(h, l)| h + l).collect();
        let total = log_sum_exp(log_p.iter().copied());
        let p: Vec<f64> = log_p.iter().map(|v| (v - total).exp()).collect();
        let q = transition_matrix(d, word_count(d, block_len), &trans);
        let residual =
            (&q * DVector::from_column_slice(&p) - DVector::from_column_slice(&p)).amax();
        if residual <= STATIONARY_TOL {
            return MarkovMeasure::new(d, block_len, trans, p);
        }
    }
    MarkovMeasure::from_transition(d, block_len, trans)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example_one() -> CostTensor {
        CostTensor::from_weight_matrices(&[
            vec![vec![1.0, 1.0], vec![1.0, 1.0]],
            vec![vec![1.0, 1.0], vec![1.0, 2.0]],
        ])
        .unwrap()
    }

    #[test]
    fn example_one_matrix() {
        let m = assemble_transfer(&example_one()).matrix();
        let expected = DMatrix::from_row_slice(2, 2, &[2.0, 2.0, 2.0, 3.0]);
        assert!((m - expected).amax() < 1e-15);
    }

    #[test]
    fn zero_cost_matrix_is_all_twos() {
        let m = assemble_transfer(&CostTensor::constant(2, 2, 2, 0.0).unwrap()).matrix();
        assert!(m.iter().all(|&v| v == 2.0));
    }

    #[test]
    fn per_x_sums_to_matrix() {
        let c = CostTensor::from_fn(3, 2, 3, |x, w| {
            (x + 2 * w[0] + w[1] + w[2]) as f64 * 0.3 - 0.5
        })
        .unwrap();
        let t = assemble_transfer(&c);
        let total = (0..3).fold(DMatrix::zeros(4, 4), |acc, x| acc + t.per_x(x));
        assert!((total - t.matrix()).amax() < 1e-14);
    }

    #[test]
    fn example_one_eigen_data() {
        let r = rpf_solve(&assemble_transfer(&example_one()), DEFAULT_EIGEN_TOL).unwrap();
        let s17 = 17f64.sqrt();
        assert!((r.lambda() - (5.0 + s17) / 2.0).abs() < 1e-12);
        let h = r.h();
        assert!((h[1] / h[0] - (5.0 + s17) / (3.0 + s17)).abs() < 1e-12);
        assert_eq!(h.iter().cloned().fold(f64::INFINITY, f64::min), 1.0);
        assert!(r.residual <= DEFAULT_EIGEN_TOL);
    }

    #[test]
    fn constant_matrix_eigenvalue() {
        // d = 3, one x, depth 2: every entry exp(0.4) on 3 states
        let c = CostTensor::constant(1, 3, 2, 0.4).unwrap();
        let r = rpf_solve(&assemble_transfer(&c), DEFAULT_EIGEN_TOL).unwrap();
        assert!((r.log_lambda - (0.4 + 3f64.ln())).abs() < 1e-14);
        assert!(r.log_h.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn example_one_normalized_matrices() {
        let c = example_one();
        let (_, nc) = solve_and_normalize(&c, DEFAULT_EIGEN_TOL).unwrap();
        let t = assemble_transfer(nc.cost());
        let a1 = t.per_x(0);
        let a2 = t.per_x(1);
        let close =
            |m: &DMatrix<f64>, v: [f64; 4]| (m - DMatrix::from_row_slice(2, 2, &v)).amax() < 1e-4;
        assert!(close(&a1, [0.2192, 0.1711, 0.2808, 0.2192]));
        assert!(close(&a2, [0.2192, 0.1711, 0.2808, 0.4385]));
        assert!(normalization_residual(nc.cost()) < 1e-12);
    }

    #[test]
    fn normalized_input_is_fixed() {
        let nc = NormalizedCost::uniform(2, 3, 2).unwrap();
        let (r, again) = solve_and_normalize(nc.cost(), DEFAULT_EIGEN_TOL).unwrap();
        assert!(r.log_lambda.abs() < 1e-15);
        assert!(again.cost().sup_distance(nc.cost()) < 1e-15);
    }

    #[test]
    fn example_one_stationary_vector() {
        let (_, nc) = solve_and_normalize(&example_one(), DEFAULT_EIGEN_TOL).unwrap();
        let nu = gibbs_measure(&nc).unwrap();
        let p = nu.stationary();
        assert!((p[0] - 0.3786).abs() < 2e-4 && (p[1] - 0.6213).abs() < 2e-4);
        assert!(nu.stationarity_residual() <= 1e-12);
    }

    #[test]
    fn uniform_gibbs_measure_is_uniform() {
        let nu = gibbs_measure(&NormalizedCost::uniform(2, 3, 3).unwrap()).unwrap();
        assert!(nu
            .stationary()
            .iter()
            .all(|&p| (p - 1.0 / 9.0).abs() < 1e-15));
    }

    #[test]
    fn pressure_of_constant_cost() {
        let c = CostTensor::constant(3, 2, 1, -0.25).unwrap();
        assert!((pressure(&c).unwrap() - (-0.25 + 6f64.ln())).abs() < 1e-14);
    }

    #[test]
    fn periodic_orbit_measure() {
        let nu = MarkovMeasure::periodic_orbit(&[0, 1], 2, 1).unwrap();
        assert_eq!(nu.stationary(), &[0.5, 0.5]);
        assert_eq!(nu.cylinder(&[0, 1, 0, 1]), 0.5);
        assert_eq!(nu.cylinder(&[0, 0]), 0.0);
        assert_eq!(nu.entropy(), 0.0);
    }

    #[test]
    fn fixed_point_orbit_has_unsupported_state() {
        let nu = MarkovMeasure::periodic_orbit(&[1], 2, 2).unwrap();
        assert_eq!(nu.support(), vec![3]);
        assert_eq!(nu.cylinder(&[1, 1, 1]), 1.0);
    }

    #[test]
    fn short_cylinders_marginalize_blocks() {
        let nu = MarkovMeasure::bernoulli(&[0.3, 0.7], 3).unwrap();
        assert!((nu.cylinder(&[1]) - 0.7).abs() < 1e-15);
        assert!((nu.cylinder(&[1, 0, 0, 1, 1]) - 0.7 * 0.3 * 0.3 * 0.7 * 0.7).abs() < 1e-15);
    }

    #[test]
    fn huge_beta_stays_finite() {
        let c = CostTensor::from_fn(2, 2, 2, |x, w| {
            (x as f64 - 0.5) * (w[0] as f64 + 0.3 * w[1] as f64)
        })
        .unwrap()
        .scaled(16384.0);
        let r = rpf_solve(&assemble_transfer(&c), DEFAULT_EIGEN_TOL).unwrap();
        assert!(r.log_lambda.is_finite());
        assert!(r.log_h.iter().all(|v| v.is_finite()));
    }
}
