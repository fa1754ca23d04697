//! Zero-temperature limits of the scaled family `beta * c`.
//!
//! The exact side is max-plus: the maximal ergodic average `m` is the maximum
//! cycle mean of the tropical block matrix, and a calibrated subaction is a
//! tropical eigenvector. The limit side runs the spectral or dual solvers
//! along a grid of `beta` values and divides by `beta`.

use rayon::prelude::*;

use crate::dual::{f_value, minimize_dual, DualOptions};
use crate::error::{Error, Result};
use crate::maxplus::MaxPlusGraph;
use crate::symbolic::{decode, word_count, CostTensor, Marginal};
use crate::transfer::{assemble_transfer, rpf_solve, DEFAULT_EIGEN_TOL};

/// Absolute tolerance on subaction residuals.
pub const SUBACTION_TOL: f64 = 1e-9;
/// Mass below which a cylinder of the large-`beta` plan is treated as empty.
pub const SUPPORT_THRESHOLD: f64 = 1e-8;
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// Default grid `1, 2, 4, ..., 2^14`.
pub fn default_beta_grid() -> Vec<f64> {
    (0..=14).map(|k| f64::from(1u32 << k)).collect()
}

pub fn validate_beta_grid(betas: &[f64]) -> Result<()> {
    if betas.is_empty() {
        return Err(Error::InvalidBetaGrid {
            index: 0,
            reason: "empty grid",
        });
    }
    for (i, &b) in betas.iter().enumerate() {
        if !(b.is_finite() && b > 0.0) {
            return Err(Error::InvalidBetaGrid {
                index: i,
                reason: "beta must be positive and finite",
            });
        }
        if i > 0 && b <= betas[i - 1] {
            return Err(Error::InvalidBetaGrid {
                index: i,
                reason: "grid must be strictly increasing",
            });
        }
    }
    Ok(())
}

/// Tropical block matrix: `weight(a, b) = max_x c(x, a·b)` on the transition
/// `b -> successor(a, b)`, with the lowest maximizing `x` recorded.
#[derive(Clone, Debug)]
pub struct TropicalMatrix {
    d: usize,
    block_len: usize,
    states: usize,
    weights: Vec<f64>,
    argmax_x: Vec<usize>,
}

impl TropicalMatrix {
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

    pub fn weight(&self, a: usize, b: usize) -> f64 {
        self.weights[a * self.states + b]
    }

    pub fn argmax_x(&self, a: usize, b: usize) -> usize {
        self.argmax_x[a * self.states + b]
    }

    /// Dense form `W[b'][b]`, `-inf` where `b -> b'` is not a transition.
    pub fn dense(&self) -> Vec<Vec<f64>> {
        let mut w = vec![vec![f64::NEG_INFINITY; self.states]; self.states];
        for a in 0..self.d {
            for b in 0..self.states {
                w[self.successor(a, b)][b] = self.weight(a, b);
            }
        }
        w
    }

    pub fn graph(&self) -> MaxPlusGraph {
        let mut edges = Vec::with_capacity(self.weights.len());
        for a in 0..self.d {
            for b in 0..self.states {
                edges.push((b, self.successor(a, b), self.weight(a, b)));
            }
        }
        MaxPlusGraph::new(self.states, edges)
    }
}

pub fn maxplus_lift(c: &CostTensor) -> TropicalMatrix {
    let lifted = c.lifted_for_blocks();
    let d = lifted.alphabet_size();
    let block_len = lifted.depth() - 1;
    let states = word_count(d, block_len);
    let mut weights = Vec::with_capacity(d * states);
    let mut argmax_x = Vec::with_capacity(d * states);
    for a in 0..d {
        for b in 0..states {
            let w = a + d * b;
            let mut best = 0;
            for x in 1..lifted.num_x() {
                if lifted.get(x, w) > lifted.get(best, w) {
                    best = x;
                }
            }
            weights.push(lifted.get(best, w));
            argmax_x.push(best);
        }
    }
    TropicalMatrix {
        d,
        block_len,
        states,
        weights,
        argmax_x,
    }
}

/// Maximum cycle mean of the block-transition digraph.
pub fn karp_value(w: &TropicalMatrix) -> f64 {
    w.graph().max_cycle_mean()
}

#[derive(Clone, Debug)]
pub struct MaxPlusSolution {
    pub m: f64,
    /// Subaction on block states, `max V = 0`.
    pub v: Vec<f64>,
    pub optimal_cycle: Vec<usize>,
    /// `max_b |max_{x,a} [c(x,a·b) + V(successor) - V(b) - m]|`.
    pub calibration_residual: f64,
    /// Positive part of `max_{x,a,b}` of the same expression.
    pub feasibility_residual: f64,
}

pub fn subaction_solve(w: &TropicalMatrix, m: f64) -> Result<MaxPlusSolution> {
    let graph = w.graph();
    let (v, critical) = graph.eigenvector(m);
    let (feasibility, calibration) = graph.calibration(m, &v);
    let scale = 1.0 + w.weights.iter().fold(0.0_f64, |s, x| s.max(x.abs()));
    let tol = SUBACTION_TOL.max(1e-13 * scale);
    let solution = MaxPlusSolution {
        m,
        optimal_cycle: graph.tight_cycle(m, &v, critical, tol),
        v,
        calibration_residual: calibration,
        feasibility_residual: feasibility.max(0.0),
    };
    if !(solution.calibration_residual <= tol && solution.feasibility_residual <= tol) {
        return Err(Error::SubactionFailed {
            residual: solution
                .calibration_residual
                .max(solution.feasibility_residual),
        });
    }
    Ok(solution)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BetaSweepRecord {
    pub beta: f64,
    pub log_lambda_over_beta: f64,
    /// `phi_beta / beta` for constrained sweeps, empty otherwise.
    pub phi_over_beta: Vec<f64>,
    /// `log h_beta / beta` with `min h_beta = 1`.
    pub log_h_over_beta: Vec<f64>,
    pub gap_to_limit: f64,
}

fn sandwich_slack(beta_m: f64, eigen_tol: f64) -> f64 {
    1e-12 * beta_m.abs().max(1.0) + eigen_tol
}

/// Spectral data of `beta * c` along `betas`, with the bound
/// `beta m <= log lambda_beta <= beta m + log(#X d)` checked at each entry.
pub fn beta_sweep(c: &CostTensor, betas: &[f64]) -> Result<Vec<BetaSweepRecord>> {
    beta_sweep_with_tol(c, betas, DEFAULT_EIGEN_TOL)
}

pub fn beta_sweep_with_tol(
    c: &CostTensor,
    betas: &[f64],
    eigen_tol: f64,
) -> Result<Vec<BetaSweepRecord>> {
    validate_beta_grid(betas)?;
    let m = karp_value(&maxplus_lift(c));
    let width = ((c.num_x() * c.alphabet_size()) as f64).ln();
    betas
        .par_iter()
        .map(|&beta| {
            let r = rpf_solve(&assemble_transfer(&c.scaled(beta)), eigen_tol)?;
            let lower = beta * m;
            let upper = lower + width;
            let slack = sandwich_slack(lower, r.tolerance);
            if r.log_lambda < lower - slack || r.log_lambda > upper + slack {
                return Err(Error::SandwichViolation {
                    beta,
                    log_lambda: r.log_lambda,
                    lower,
                    upper,
                });
            }
            Ok(BetaSweepRecord {
                beta,
                log_lambda_over_beta: r.log_lambda / beta,
                phi_over_beta: Vec::new(),
                log_h_over_beta: r.log_h.iter().map(|v| v / beta).collect(),
                gap_to_limit: r.log_lambda / beta - m,
            })
        })
        .collect()
}

/// `min_k sup |u - v - k|` for equal-length vectors.
pub fn gauge_distance(u: &[f64], v: &[f64]) -> f64 {
    let (lo, hi) = u
        .iter()
        .zip(v)
        .map(|(a, b)| a - b)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| {
            (lo.min(d), hi.max(d))
        });
    0.5 * (hi - lo)
}

#[derive(Clone, Debug)]
pub struct UnconstrainedZeroTemp {
    pub exact: MaxPlusSolution,
    pub sweep: Vec<BetaSweepRecord>,
    /// `|log lambda / beta - m|` at the largest beta.
    pub limit_gap: f64,
    /// Gauge distance between `log h / beta` at the largest beta and `V`.
    pub subaction_distance: f64,
    /// Entries where `gap_to_limit` increased along the grid.
    pub non_monotone: Vec<usize>,
}

pub fn zero_temp_unconstrained(c: &CostTensor, betas: &[f64]) -> Result<UnconstrainedZeroTemp> {
    zero_temp_unconstrained_with_tol(c, betas, DEFAULT_EIGEN_TOL)
}

pub fn zero_temp_unconstrained_with_tol(
    c: &CostTensor,
    betas: &[f64],
    eigen_tol: f64,
) -> Result<UnconstrainedZeroTemp> {
    let w = maxplus_lift(c);
    let m = karp_value(&w);
    let exact = subaction_solve(&w, m)?;
    let sweep = beta_sweep_with_tol(c, betas, eigen_tol)?;
    let last = sweep.last().expect("validated grid is non-empty");
    let bound = ((c.num_x() * c.alphabet_size()) as f64).ln() / last.beta;
    let limit_gap = last.gap_to_limit.abs();
    if limit_gap > bound + 1e-12 * m.abs().max(1.0) {
        return Err(Error::CrossCheck {
            what: "zero-temperature limit gap",
            value: limit_gap,
            bound,
        });
    }
    let non_monotone: Vec<usize> = (1..sweep.len())
        .filter(|&i| sweep[i].gap_to_limit > sweep[i - 1].gap_to_limit + 1e-12)
        .collect();
    if !non_monotone.is_empty() {
        log::warn!("gap to limit increased along the grid at entries {non_monotone:?}");
    }
    Ok(UnconstrainedZeroTemp {
        subaction_distance: gauge_distance(&last.log_h_over_beta, &exact.v),
        exact,
        sweep,
        limit_gap,
        non_monotone,
    })
}

/// A cylinder `[x, a·b]` of the large-`beta` plan.
#[derive(Clone, Debug, PartialEq)]
pub struct SupportEntry {
    pub x: usize,
    /// Canonical index of the word `a·b` (length `block_len + 1`).
    pub word: usize,
    pub symbols: Vec<usize>,
    pub mass: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZeroTempCertificate {
    /// Positive part of `max_{x,a,b} E(x,a,b)` with
    /// `E = c(x,a·b) + V(successor) - V(b) - m(x)`.
    pub feasibility_residual: f64,
    /// Positive part of `max -E` over the support plan.
    pub support_equality_residual: f64,
    pub feasibility_tol: f64,
    pub support_tol: f64,
    pub worst_x: usize,
    pub worst_word: usize,
}

impl ZeroTempCertificate {
    pub fn passes(&self) -> bool {
        self.feasibility_residual <= self.feasibility_tol
            && self.support_equality_residual <= self.support_tol
    }
}

#[derive(Clone, Debug)]
pub struct ConstrainedZeroTemp {
    pub m_tilde: Vec<f64>,
    pub v_tilde: Vec<f64>,
    /// `int m_tilde dmu`.
    pub value: f64,
    pub support_plan: Vec<SupportEntry>,
    pub certificate: ZeroTempCertificate,
    /// Constrained sweep: `log_lambda_over_beta` is the unconstrained
    /// `P(beta c) / beta`; `gap_to_limit` is `P_mu(beta c) / beta - value`.
    pub sweep: Vec<BetaSweepRecord>,
    pub beta_max: f64,
}

/// Options for the dual solves of a constrained sweep at scale `beta`: the
/// pressure and gap tolerances are relative to `beta * max|c|`. Only the
/// pressure residual is enforced: at large `beta` the marginal map has
/// transition layers far thinner than rounding, and the limit certificate
/// needs only `P(beta c - phi) = 0`.
fn scaled_options(c: &CostTensor, beta: f64, base: &DualOptions) -> DualOptions {
    let scale = (beta * c.max_abs()).max(1.0);
    DualOptions {
        pressure_tol: base.pressure_tol * scale,
        gap_tol: base.gap_tol * scale,
        ..base.clone()
    }
}

/// Runs the dual along `betas` (warm-started) and certifies the limit
/// potentials read off at the largest `beta`.
pub fn zero_temp_constrained(
    c: &CostTensor,
    mu: &Marginal,
    betas: &[f64],
) -> Result<ConstrainedZeroTemp> {
    let result = constrained_limit(c, mu, betas, &DualOptions::default())?;
    let cert = result.certificate;
    if !cert.passes() {
        return Err(Error::ZeroTempCertificate {
            feasibility: cert.feasibility_residual,
            support: cert.support_equality_residual,
            worst_x: cert.worst_x,
            worst_word: cert.worst_word,
        });
    }
    Ok(result)
}

/// The constrained sweep and limit potentials with the certificate computed
/// but not enforced.
pub fn constrained_limit(
    c: &CostTensor,
    mu: &Marginal,
    betas: &[f64],
    base: &DualOptions,
) -> Result<ConstrainedZeroTemp> {
    validate_beta_grid(betas)?;
    if mu.len() != c.num_x() {
        return Err(Error::DimensionMismatch {
            field: "mu",
            expected: c.num_x(),
            found: mu.len(),
        });
    }
    let mut records = Vec::with_capacity(betas.len());
    // earlier minimizers as (beta, v), most recent last
    let mut history: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut last = None;
    for &beta in betas {
        let cb = c.scaled(beta);
        // candidate starts: the previous minimizer, its rescaling, and the
        // affine-in-beta extrapolation of the last two; keep the lowest F
        let mut candidates: Vec<Vec<f64>> = Vec::new();
        if let Some((b1, v1)) = history.last() {
            candidates.push(v1.clone());
            candidates.push(v1.iter().map(|x| x * beta / b1).collect());
            if history.len() >= 2 {
                let (b0, v0) = &history[history.len() - 2];
                let t = (beta - b1) / (b1 - b0);
                candidates.push(v1.iter().zip(v0).map(|(a, b)| a + t * (a - b)).collect());
            }
        }
        let mut init: Option<(f64, Vec<f64>)> = None;
        for cand in candidates {
            let value = f_value(&cb, &cand, mu)?;
            if init.as_ref().is_none_or(|(best, _)| value < *best) {
                init = Some((value, cand));
            }
        }
        let init = init.map(|(_, v)| v);
        let opts = DualOptions {
            accept_stall: true,
            ..scaled_options(c, beta, base)
        };
        let sol = minimize_dual(&cb, mu, &opts, init.as_deref())?;
        if sol.pressure_residual > opts.pressure_tol {
            return Err(Error::DualCertificate {
                pressure_residual: sol.pressure_residual,
                marginal_residual: sol.marginal_residual,
                duality_gap: sol.duality_gap,
                iterations: sol.iterations,
            });
        }
        if sol.marginal_residual > opts.marginal_tol {
            log::debug!(
                "beta {beta}: dual stalled with marginal residual {:e}",
                sol.marginal_residual
            );
        }
        let unconstrained = rpf_solve(&assemble_transfer(&cb), base.eigen_tol)?;
        records.push(BetaSweepRecord {
            beta,
            log_lambda_over_beta: unconstrained.log_lambda / beta,
            phi_over_beta: sol.phi_tilde.values.iter().map(|p| p / beta).collect(),
            log_h_over_beta: sol.psi.iter().map(|p| p / beta).collect(),
            gap_to_limit: sol.value / beta,
        });
        history.push((beta, sol.v_hat.clone()));
        last = Some(sol);
    }
    let sol = last.expect("validated grid is non-empty");
    let beta_max = history.last().expect("validated grid is non-empty").0;
    let m_tilde: Vec<f64> = sol.phi_tilde.values.iter().map(|p| p / beta_max).collect();
    let v_tilde: Vec<f64> = sol.psi.iter().map(|p| p / beta_max).collect();
    let value = mu.integrate(&m_tilde);
    for r in &mut records {
        r.gap_to_limit -= value;
    }

    let plan = &sol.plan;
    let lifted = c.lifted_for_blocks();
    let d = plan.alphabet_size();
    let states = word_count(d, plan.block_len());
    let p = plan.nu().stationary();
    let mut support_plan = Vec::new();
    let mut feasibility = f64::NEG_INFINITY;
    let mut support = 0.0_f64;
    let (mut worst_x, mut worst_word) = (0, 0);
    for x in 0..c.num_x() {
        for b in 0..states {
            for a in 0..d {
                let word = a + d * b;
                let succ = word % states;
                let e = lifted.get(x, word) + v_tilde[succ] - v_tilde[b] - m_tilde[x];
                if e > feasibility {
                    feasibility = e;
                    worst_x = x;
                    worst_word = word;
                }
                let mass = plan.jacobian(x, a, b) * p[b];
                if mass > SUPPORT_THRESHOLD {
                    support = support.max(-e);
                    support_plan.push(SupportEntry {
                        x,
                        word,
                        symbols: decode(word, plan.block_len() + 1, d),
                        mass,
                    });
                }
            }
        }
    }
    let certificate = ZeroTempCertificate {
        feasibility_residual: feasibility.max(0.0),
        support_equality_residual: support,
        feasibility_tol: FEASIBILITY_TOL,
        support_tol: -SUPPORT_THRESHOLD.ln() / beta_max + FEASIBILITY_TOL,
        worst_x,
        worst_word,
    };
    Ok(ConstrainedZeroTemp {
        m_tilde,
        v_tilde,
        value,
        support_plan,
        certificate,
        sweep: records,
        beta_max,
    })
}

fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Tab-separated sweep table with a header row.
pub fn sweep_table(records: &[BetaSweepRecord]) -> String {
    let width = records
        .iter()
        .map(|r| r.phi_over_beta.len())
        .max()
        .unwrap_or(0);
    let mut out = String::from("beta\tlog_lambda_over_beta\tgap_to_limit");
    for x in 0..width {
        out.push_str(&format!("\tphi_over_beta_{x}"));
    }
    out.push('\n');
    for r in records {
        let mut row = vec![
            format_float(r.beta),
            format_float(r.log_lambda_over_beta),
            format_float(r.gap_to_limit),
        ];
        row.extend(r.phi_over_beta.iter().map(|&v| format_float(v)));
        out.push_str(&row.join("\t"));
        out.push('\n');
    }
    out
}
