//! The constrained pressure problem over plans with a fixed x-marginal.
//!
//! The dual is reduced to minimizing the convex, gauge-invariant function
//! `F(v) = -sum_x mu(x) v(x) + P(c + v)` on the slice `v(0) = 0`. Its
//! gradient is the x-marginal of the equilibrium plan of `c + v` minus `mu`.
//! The minimizer is returned in the zero-pressure gauge
//! `phi = -v + P(c + v)`, so that `P(c - phi) = 0` and `int phi dmu` is the
//! constrained pressure.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::plan::{equilibrium_plan_with_tol, FiniteMemoryPlan};
use crate::symbolic::{CostTensor, Marginal};
use crate::transfer::{assemble_transfer, solve_and_normalize, DEFAULT_EIGEN_TOL};

pub const PRESSURE_TOL: f64 = 1e-9;
pub const MARGINAL_TOL: f64 = 1e-7;
pub const GAP_TOL: f64 = 1e-7;

/// Gauge convention attached to a dual vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gauge {
    /// `phi(0) = 0`.
    FirstPinned,
    /// `P(c - phi) = 0`.
    ZeroPressure,
    Free,
}

/// A function on `X`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhiVector {
    pub values: Vec<f64>,
    pub gauge: Gauge,
}

impl PhiVector {
    pub fn new(values: Vec<f64>, gauge: Gauge) -> Result<Self> {
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteCost { index });
        }
        Ok(PhiVector { values, gauge })
    }

    pub fn free(values: Vec<f64>) -> Result<Self> {
        Self::new(values, Gauge::Free)
    }
}

#[derive(Clone, Debug)]
pub struct DualOptions {
    pub eigen_tol: f64,
    pub pressure_tol: f64,
    pub marginal_tol: f64,
    pub gap_tol: f64,
    pub max_iterations: usize,
    /// Central-difference step for the Hessian of `F`.
    pub hessian_step: f64,
    /// Return the current point instead of failing when no search direction
    /// lowers `F` above rounding or the iteration cap is hit.
    pub accept_stall: bool,
}

impl Default for DualOptions {
    fn default() -> Self {
        DualOptions {
            eigen_tol: DEFAULT_EIGEN_TOL,
            pressure_tol: PRESSURE_TOL,
            marginal_tol: MARGINAL_TOL,
            gap_tol: GAP_TOL,
            max_iterations: 200,
            hessian_step: 1e-5,
            accept_stall: false,
        }
    }
}

/// Minimizer of the dual problem with its optimality certificate.
#[derive(Clone, Debug)]
pub struct DualSolution {
    /// The minimizer in the zero-pressure gauge.
    pub phi_tilde: PhiVector,
    /// The minimizer of `F` on the slice `v(0) = 0`.
    pub v_hat: Vec<f64>,
    /// `int phi_tilde dmu`, the constrained pressure.
    pub value: f64,
    /// `log h` for the operator of `c - phi_tilde` (gauge `min h = 1`).
    pub psi: Vec<f64>,
    pub pressure_residual: f64,
    pub marginal_residual: f64,
    pub duality_gap: f64,
    pub iterations: usize,
    /// The Gibbs plan of `c - phi_tilde`.
    pub plan: FiniteMemoryPlan,
}

impl DualSolution {
    pub fn passes(&self, opts: &DualOptions) -> bool {
        self.pressure_residual <= opts.pressure_tol
            && self.marginal_residual <= opts.marginal_tol
            && self.duality_gap <= opts.gap_tol
    }
}

fn check_mu(c: &CostTensor, mu: &Marginal) -> Result<()> {
    if mu.len() != c.num_x() {
        return Err(Error::DimensionMismatch {
            field: "mu",
            expected: c.num_x(),
            found: mu.len(),
        });
    }
    Ok(())
}

fn value_and_gradient(
    c: &CostTensor,
    v: &[f64],
    mu: &Marginal,
    tol: f64,
) -> Result<(f64, Vec<f64>)> {
    let (plan, p) = equilibrium_plan_with_tol(&c.add_x(v), tol)?;
    let grad = plan
        .marginal_x()
        .iter()
        .zip(mu.weights())
        .map(|(m, w)| m - w)
        .collect();
    Ok((p - mu.integrate(v), grad))
}

/// `F(phi) = -int phi dmu + P(c + phi)`.
pub fn f_value(c: &CostTensor, phi: &[f64], mu: &Marginal) -> Result<f64> {
    check_mu(c, mu)?;
    Ok(crate::transfer::pressure(&c.add_x(phi))? - mu.integrate(phi))
}

/// Gradient of [`f_value`]: equilibrium x-marginal of `c + phi` minus `mu`.
pub fn f_gradient(c: &CostTensor, phi: &[f64], mu: &Marginal) -> Result<Vec<f64>> {
    check_mu(c, mu)?;
    Ok(value_and_gradient(c, phi, mu, DEFAULT_EIGEN_TOL)?.1)
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Solves the dual problem to marginal tolerance `tol`.
pub fn solve_dual(c: &CostTensor, mu: &Marginal, tol: f64) -> Result<DualSolution> {
    let opts = DualOptions {
        marginal_tol: tol,
        ..DualOptions::default()
    };
    solve_dual_with(c, mu, &opts, None)
}

/// [`minimize_dual`] followed by the certificate check.
pub fn solve_dual_with(
    c: &CostTensor,
    mu: &Marginal,
    opts: &DualOptions,
    start: Option<&[f64]>,
) -> Result<DualSolution> {
    let solution = minimize_dual(c, mu, opts, start)?;
    if !solution.passes(opts) {
        return Err(Error::DualCertificate {
            pressure_residual: solution.pressure_residual,
            marginal_residual: solution.marginal_residual,
            duality_gap: solution.duality_gap,
            iterations: solution.iterations,
        });
    }
    Ok(solution)
}

/// `v + step * direction` on the slice `v(0) = 0`.
fn along(v: &[f64], direction: &DVector<f64>, step: f64) -> Vec<f64> {
    std::iter::once(0.0)
        .chain(
            v[1..]
                .iter()
                .zip(direction.iter())
                .map(|(x, d)| x + step * d),
        )
        .collect()
}

type Evaluated = (Vec<f64>, f64, Vec<f64>);

/// Minimizes `F` along the ray `v + t d`, `t > 0`, by bracketing and bisecting
/// the sign change of the directional derivative. Returns the best point
/// found if it lowers `F`.
fn line_minimum(
    eval: &impl Fn(&[f64]) -> Result<(f64, Vec<f64>)>,
    v: &[f64],
    direction: &DVector<f64>,
    f0: f64,
) -> Result<Option<Evaluated>> {
    let slope = |g: &[f64]| {
        g[1..]
            .iter()
            .zip(direction.iter())
            .map(|(a, b)| a * b)
            .sum::<f64>()
    };
    let mut best: Option<Evaluated> = None;
    let keep = |point: Vec<f64>, f: f64, g: Vec<f64>, best: &mut Option<Evaluated>| {
        if f <= f0 && best.as_ref().is_none_or(|b| f < b.1) {
            *best = Some((point, f, g));
        }
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    loop {
        let point = along(v, direction, hi);
        let (f, g) = eval(&point)?;
        let s = slope(&g);
        keep(point, f, g, &mut best);
        if s >= 0.0 || hi > 1e12 {
            break;
        }
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        if hi - lo <= 1e-15 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let point = along(v, direction, mid);
        let (f, g) = eval(&point)?;
        let s = slope(&g);
        keep(point, f, g, &mut best);
        if s < 0.0 {
            lo = mid;
        } else if s > 0.0 {
            hi = mid;
        } else {
            break;
        }
    }
    Ok(best)
}

/// Damped Newton on the slice `v(0) = 0` with a finite-difference Hessian,
/// falling back to steepest descent where the Hessian is not positive
/// definite. `start` seeds the iteration (it is projected onto the slice).
/// The residuals are computed but not checked against `opts`.
pub fn minimize_dual(
    c: &CostTensor,
    mu: &Marginal,
    opts: &DualOptions,
    start: Option<&[f64]>,
) -> Result<DualSolution> {
    check_mu(c, mu)?;
    let k = c.num_x();
    let mut v: Vec<f64> = match start {
        Some(s) => s.iter().map(|x| x - s[0]).collect(),
        None => vec![0.0; k],
    };
    let target = opts.marginal_tol * 1e-4;
    let eval = |v: &[f64]| value_and_gradient(c, v, mu, opts.eigen_tol);

    let (mut f, mut g) = eval(&v)?;
    let mut iterations = 0;
    loop {
        // a one-point X leaves nothing to optimize
        if k == 1 {
            break;
        }
        let gnorm = sup_norm(&g);
        if gnorm <= target {
            break;
        }
        if iterations >= opts.max_iterations {
            if gnorm <= opts.marginal_tol || opts.accept_stall {
                break;
            }
            return Err(Error::DualNotConverged {
                iterations,
                gradient_norm: gnorm,
            });
        }
        iterations += 1;

        let free = k - 1;
        let grad = DVector::from_iterator(free, g[1..].iter().copied());
        let mut hessian = DMatrix::zeros(free, free);
        for j in 0..free {
            let mut plus = v.clone();
            let mut minus = v.clone();
            plus[j + 1] += opts.hessian_step;
            minus[j + 1] -= opts.hessian_step;
            let gp = eval(&plus)?.1;
            let gm = eval(&minus)?.1;
            for i in 0..free {
                hessian[(i, j)] = (gp[i + 1] - gm[i + 1]) / (2.0 * opts.hessian_step);
            }
        }
        let hessian = (&hessian + hessian.transpose()) * 0.5;
        let newton = hessian.cholesky().map(|ch| -ch.solve(&grad));
        let (direction, is_newton) = match newton {
            Some(dir) if dir.dot(&grad) < 0.0 => (dir, true),
            _ => (-grad.clone(), false),
        };
        let slope = direction.dot(&grad);

        let mut accepted = false;
        if is_newton {
            let mut step = 1.0;
            while step > 1e-12 {
                let trial = along(&v, &direction, step);
                let (ft, gt) = eval(&trial)?;
                let armijo = ft <= f + 1e-4 * step * slope;
                // near the optimum F is flat below rounding; accept on gradient decrease
                let flat = ft <= f + 1e-13 * (1.0 + f.abs()) && sup_norm(&gt) < 0.5 * gnorm;
                if armijo || flat {
                    v = trial;
                    f = ft;
                    g = gt;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
        }
        if !accepted {
            // steepest descent with an exact line search: F is convex, so the
            // directional derivative is monotone along the ray
            let direction = -grad;
            if let Some((trial, ft, gt)) = line_minimum(&eval, &v, &direction, f)? {
                v = trial;
                f = ft;
                g = gt;
                accepted = true;
            }
        }
        if !accepted {
            if gnorm <= opts.marginal_tol || opts.accept_stall {
                break;
            }
            return Err(Error::DualNotConverged {
                iterations,
                gradient_norm: gnorm,
            });
        }
    }

    let pressure_at_v = f + mu.integrate(&v);
    let phi: Vec<f64> = v.iter().map(|x| pressure_at_v - x).collect();
    let (cert, psi, plan) = certificate_parts(c, &phi, mu, opts.eigen_tol)?;
    Ok(DualSolution {
        phi_tilde: PhiVector::new(phi, Gauge::ZeroPressure)?,
        v_hat: v,
        value: f,
        psi,
        pressure_residual: cert.pressure_residual,
        marginal_residual: cert.marginal_residual,
        duality_gap: cert.duality_gap,
        iterations,
        plan,
    })
}

/// The constrained pressure `P_mu(c)`.
pub fn mu_pressure(c: &CostTensor, mu: &Marginal) -> Result<f64> {
    Ok(solve_dual(c, mu, MARGINAL_TOL)?.value)
}

/// The unique maximizer over plans with x-marginal `mu`: the Gibbs plan of `c - phi_tilde`.
pub fn constrained_equilibrium(c: &CostTensor, mu: &Marginal) -> Result<FiniteMemoryPlan> {
    Ok(solve_dual(c, mu, MARGINAL_TOL)?.plan)
}

/// Residuals that vanish exactly at the dual minimizer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlacknessCertificate {
    /// `|P(c - phi)|`.
    pub pressure_residual: f64,
    /// `|| x-marginal of the equilibrium plan of c - phi  -  mu ||_inf`.
    pub marginal_residual: f64,
    /// `|int phi dmu - (int c dpi + H(pi))|` for that plan.
    pub duality_gap: f64,
}

impl SlacknessCertificate {
    pub fn passes(&self, pressure_tol: f64, marginal_tol: f64, gap_tol: f64) -> bool {
        self.pressure_residual <= pressure_tol
            && self.marginal_residual <= marginal_tol
            && self.duality_gap <= gap_tol
    }
}

fn certificate_parts(
    c: &CostTensor,
    phi: &[f64],
    mu: &Marginal,
    tol: f64,
) -> Result<(SlacknessCertificate, Vec<f64>, FiniteMemoryPlan)> {
    let minus_phi: Vec<f64> = phi.iter().map(|x| -x).collect();
    let (r, nc) = solve_and_normalize(&c.add_x(&minus_phi), tol)?;
    let plan = crate::plan::gibbs_plan(&nc)?;
    let marginal_residual = plan
        .marginal_x()
        .iter()
        .zip(mu.weights())
        .map(|(m, w)| (m - w).abs())
        .fold(0.0, f64::max);
    let sup_side = plan.integrate(c) + plan.entropy();
    let cert = SlacknessCertificate {
        pressure_residual: r.log_lambda.abs(),
        marginal_residual,
        duality_gap: (mu.integrate(phi) - sup_side).abs(),
    };
    Ok((cert, r.log_h, plan))
}

pub fn slackness_certificate(
    c: &CostTensor,
    phi: &[f64],
    mu: &Marginal,
) -> Result<SlacknessCertificate> {
    check_mu(c, mu)?;
    Ok(certificate_parts(c, phi, mu, DEFAULT_EIGEN_TOL)?.0)
}

/// First-order conditions for two-point `X` and two-symbol costs, in the
/// variables `z_x = exp(-phi_x)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurveConditions {
    /// `det(z_1 A^1 + z_2 A^2 - I)`.
    pub det_residual: f64,
    /// `|sin|` of the angle between the curve normal and `(mu_1/z_1, mu_2/z_2)`.
    pub collinearity_residual: f64,
}

pub fn curve_conditions_2x2(c: &CostTensor, phi: &[f64], mu: &Marginal) -> Result<CurveConditions> {
    if c.num_x() != 2 || c.alphabet_size() != 2 || c.depth() > 2 || phi.len() != 2 || mu.len() != 2
    {
        return Err(Error::WrongShape {
            what: "curve conditions",
            requirement: "#X = 2, d = 2, depth 2",
        });
    }
    let t = assemble_transfer(c);
    let z = [(-phi[0]).exp(), (-phi[1]).exp()];
    let a = [t.per_x(0), t.per_x(1)];
    let shifted = &a[0] * z[0] + &a[1] * z[1] - DMatrix::identity(2, 2);
    let det = shifted.determinant();
    let adj = DMatrix::from_row_slice(
        2,
        2,
        &[
            shifted[(1, 1)],
            -shifted[(0, 1)],
            -shifted[(1, 0)],
            shifted[(0, 0)],
        ],
    );
    let normal = [(&adj * &a[0]).trace(), (&adj * &a[1]).trace()];
    let target = [mu.weights()[0] / z[0], mu.weights()[1] / z[1]];
    let cross = normal[0] * target[1] - normal[1] * target[0];
    let scale = normal[0].hypot(normal[1]) * target[0].hypot(target[1]);
    Ok(CurveConditions {
        det_residual: det.abs(),
        collinearity_residual: if scale > 0.0 {
            cross.abs() / scale
        } else {
            f64::NAN
        },
    })
}
