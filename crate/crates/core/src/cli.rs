//! The `ergotrans` command line.
//!
//! Exit codes: 0 on success, 2 on invalid input, 3 when a solver fails or a
//! certificate does not pass (the report is still written).

use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, ValueEnum};
use serde_json::{Map, Value};

use crate::dual::{
    curve_conditions_2x2, minimize_dual, slackness_certificate, DualOptions, DualSolution,
};
use crate::error::{Error, Result};
use crate::lp::{primal_lp_oracle, MAX_VARIABLES};
use crate::plan::{gibbs_plan, FiniteMemoryPlan};
use crate::problem::{Problem, ProblemSpec};
use crate::report::{ints, num, nums, Report};
use crate::symbolic::{decode, CostTensor};
use crate::transfer::{
    assemble_transfer, normalization_residual, pressure_with_tol, rpf_solve, solve_and_normalize,
    DEFAULT_EIGEN_TOL,
};
use crate::zero_temp::{
    constrained_limit, default_beta_grid, sweep_table, zero_temp_unconstrained_with_tol,
    BetaSweepRecord,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_FAILURE: i32 = 3;

const CURVE_TOL: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Verb {
    /// Dominant eigen-data and pressure.
    Pressure,
    /// Normalized cost and Gibbs plan.
    Gibbs,
    /// Entropy of the given plan, or of the equilibrium plan.
    Entropy,
    /// Constrained pressure via the dual problem (needs `mu`).
    Dual,
    /// Max-plus limit and beta sweep; constrained as well when `mu` is given.
    Zerotemp,
    /// Dual solve followed by independent optimality checks (needs `mu`).
    Certify,
}

impl Verb {
    pub fn name(self) -> &'static str {
        match self {
            Verb::Pressure => "pressure",
            Verb::Gibbs => "gibbs",
            Verb::Entropy => "entropy",
            Verb::Dual => "dual",
            Verb::Zerotemp => "zerotemp",
            Verb::Certify => "certify",
        }
    }
}

#[derive(Clone, Debug, Parser)]
#[command(
    name = "ergotrans",
    version,
    about = "Thermodynamic formalism for transport plans on finite-memory costs"
)]
pub struct Cli {
    #[arg(value_enum)]
    pub verb: Verb,
    /// Problem document (JSON).
    #[arg(long)]
    pub spec: PathBuf,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Tolerance on the eigen-residual.
    #[arg(long)]
    pub tol_eigen: Option<f64>,
    /// Tolerance on the marginal residual of the dual solver.
    #[arg(long)]
    pub tol_dual: Option<f64>,
    /// Largest beta; the grid becomes 1, 2, 4, ... up to this value.
    #[arg(long)]
    pub beta_max: Option<f64>,
    /// Also write the beta sweep as a tab-separated table.
    #[arg(long)]
    pub sweep_out: Option<PathBuf>,
}

/// A finished run: the report text (absent on validation errors), the exit
/// code and a message for stderr.
#[derive(Debug)]
pub struct Outcome {
    pub report: Option<String>,
    pub exit_code: i32,
    pub message: Option<String>,
    pub sweep: Option<String>,
}

fn positive(name: &str, v: Option<f64>) -> Result<Option<f64>> {
    match v {
        Some(x) if !(x.is_finite() && x > 0.0) => {
            Err(Error::Parse(format!("{name} must be positive, got {x}")))
        }
        _ => Ok(v),
    }
}

/// Grid ending at `beta_max`: the powers of two below it, then `beta_max`.
pub fn grid_up_to(beta_max: f64) -> Vec<f64> {
    let mut grid = Vec::new();
    let mut b = 1.0;
    while b < beta_max {
        grid.push(b);
        b *= 2.0;
    }
    grid.push(beta_max);
    grid
}

struct Settings {
    eigen_tol: f64,
    dual: DualOptions,
    grid: Vec<f64>,
}

fn settings(cli: &Cli, problem: &Problem) -> Result<Settings> {
    let eigen_tol = positive("--tol-eigen", cli.tol_eigen)?.unwrap_or(DEFAULT_EIGEN_TOL);
    // a stalled minimization still reports its residuals; the certificate
    // check decides the exit code
    let mut dual = DualOptions {
        eigen_tol,
        accept_stall: true,
        ..DualOptions::default()
    };
    if let Some(t) = positive("--tol-dual", cli.tol_dual)? {
        dual.marginal_tol = t;
    }
    let grid = match positive("--beta-max", cli.beta_max)? {
        Some(b) => grid_up_to(b),
        None => problem.beta_grid.clone().unwrap_or_else(default_beta_grid),
    };
    Ok(Settings {
        eigen_tol,
        dual,
        grid,
    })
}

fn require_mu(problem: &Problem) -> Result<&crate::symbolic::Marginal> {
    problem
        .mu
        .as_ref()
        .ok_or_else(|| Error::Parse("field `mu` is required for this verb".into()))
}

/// Parses the spec and runs one verb.
pub fn run(cli: &Cli) -> Outcome {
    let bytes = match std::fs::read(&cli.spec) {
        Ok(b) => b,
        Err(e) => return validation_outcome(Error::Io(e)),
    };
    let parsed = std::str::from_utf8(&bytes)
        .map_err(|e| Error::Parse(e.to_string()))
        .and_then(ProblemSpec::from_json)
        .and_then(|spec| spec.build());
    let problem = match parsed {
        Ok(p) => p,
        Err(e) => return validation_outcome(e),
    };
    let settings = match settings(cli, &problem) {
        Ok(s) => s,
        Err(e) => return validation_outcome(e),
    };
    let mut report = Report::new(cli.verb.name(), &bytes);
    echo_inputs(&mut report, &problem, &settings, cli.verb);
    let mut sweep = None;
    let result = match cli.verb {
        Verb::Pressure => pressure_verb(&mut report, &problem, &settings),
        Verb::Gibbs => gibbs_verb(&mut report, &problem, &settings),
        Verb::Entropy => entropy_verb(&mut report, &problem, &settings),
        Verb::Dual => dual_verb(&mut report, &problem, &settings),
        Verb::Zerotemp => zerotemp_verb(&mut report, &problem, &settings, &mut sweep),
        Verb::Certify => certify_verb(&mut report, &problem, &settings),
    };
    match result {
        Ok(true) => Outcome {
            report: Some(report.to_json()),
            exit_code: EXIT_OK,
            message: None,
            sweep,
        },
        Ok(false) => {
            let message = "certificate check failed".to_string();
            report.fail(message.clone());
            Outcome {
                report: Some(report.to_json()),
                exit_code: EXIT_FAILURE,
                message: Some(message),
                sweep,
            }
        }
        Err(e) if e.is_validation() => validation_outcome(e),
        Err(e) => {
            report.fail(e.to_string());
            Outcome {
                report: Some(report.to_json()),
                exit_code: EXIT_FAILURE,
                message: Some(e.to_string()),
                sweep,
            }
        }
    }
}

fn validation_outcome(e: Error) -> Outcome {
    Outcome {
        report: None,
        exit_code: EXIT_VALIDATION,
        message: Some(format!("invalid input: {e}")),
        sweep: None,
    }
}

fn echo_inputs(report: &mut Report, problem: &Problem, s: &Settings, verb: Verb) {
    let c = &problem.cost;
    let inputs = &mut report.inputs;
    inputs.insert("num_x".into(), Value::from(c.num_x()));
    inputs.insert("alphabet_size".into(), Value::from(c.alphabet_size()));
    inputs.insert("depth".into(), Value::from(c.depth()));
    if let Some(mu) = &problem.mu {
        inputs.insert("mu".into(), nums(mu.weights()));
    }
    inputs.insert("tol_eigen".into(), num(s.eigen_tol));
    if matches!(verb, Verb::Dual | Verb::Certify | Verb::Zerotemp) {
        inputs.insert("tol_dual".into(), num(s.dual.marginal_tol));
    }
    if verb == Verb::Zerotemp {
        inputs.insert("beta_grid".into(), nums(&s.grid));
    }
}

fn pressure_verb(report: &mut Report, problem: &Problem, s: &Settings) -> Result<bool> {
    let r = rpf_solve(&assemble_transfer(&problem.cost), s.eigen_tol)?;
    let res = &mut report.results;
    res.insert("pressure".into(), num(r.log_lambda));
    res.insert("lambda".into(), num(r.lambda()));
    res.insert("log_h".into(), nums(&r.log_h));
    res.insert("eigenmeasure".into(), nums(&r.left()));
    res.insert("gap_estimate".into(), num(r.gap_estimate));
    res.insert("iterations".into(), Value::from(r.iterations));
    let resid = &mut report.residuals;
    resid.insert("eigen_residual".into(), num(r.residual));
    resid.insert("eigenmeasure_residual".into(), num(r.left_residual));
    resid.insert("tolerance".into(), num(r.tolerance));
    Ok(r.residual <= 10.0 * r.tolerance)
}

fn cylinder_list(plan: &FiniteMemoryPlan, len: usize) -> Value {
    let d = plan.alphabet_size();
    Value::Array(
        plan.cylinders(len)
            .into_iter()
            .map(|(x, w, mass)| {
                let mut m = Map::new();
                m.insert("x".into(), Value::from(x));
                m.insert("word".into(), ints(&decode(w, len, d)));
                m.insert("mass".into(), num(mass));
                Value::Object(m)
            })
            .collect(),
    )
}

fn gibbs_verb(report: &mut Report, problem: &Problem, s: &Settings) -> Result<bool> {
    let (r, nc) = solve_and_normalize(&problem.cost, s.eigen_tol)?;
    let plan = gibbs_plan(&nc)?;
    let res = &mut report.results;
    res.insert("pressure".into(), num(r.log_lambda));
    res.insert("normalized_cost".into(), nums(nc.cost().values()));
    res.insert("jacobian".into(), nums(plan.jacobian_values()));
    res.insert("transition".into(), nums(plan.nu().transition()));
    res.insert("stationary".into(), nums(plan.nu().stationary()));
    res.insert("marginal_x".into(), nums(&plan.marginal_x()));
    res.insert("cylinders".into(), cylinder_list(&plan, plan.memory()));
    res.insert("entropy".into(), num(plan.entropy()));
    res.insert("integral_cost".into(), num(plan.integrate(&problem.cost)));
    let normalization = normalization_residual(nc.cost());
    let stationarity = plan.nu().stationarity_residual();
    let resid = &mut report.residuals;
    resid.insert("eigen_residual".into(), num(r.residual));
    resid.insert("normalization_residual".into(), num(normalization));
    resid.insert("stationarity_residual".into(), num(stationarity));
    Ok(normalization <= 1e-9 && stationarity <= 1e-9)
}

fn entropy_verb(report: &mut Report, problem: &Problem, s: &Settings) -> Result<bool> {
    let (plan, source) = match &problem.plan {
        Some(p) => (p.clone(), "plan"),
        None => {
            let (_, nc) = solve_and_normalize(&problem.cost, s.eigen_tol)?;
            (gibbs_plan(&nc)?, "equilibrium")
        }
    };
    let h = plan.entropy();
    let bound = ((plan.num_x() * plan.alphabet_size()) as f64).ln();
    let res = &mut report.results;
    res.insert("source".into(), Value::from(source));
    res.insert("entropy".into(), num(h));
    res.insert("upper_bound".into(), num(bound));
    res.insert("marginal_x".into(), nums(&plan.marginal_x()));
    let stationarity = plan.nu().stationarity_residual();
    report
        .residuals
        .insert("stationarity_residual".into(), num(stationarity));
    Ok(h >= -1e-12 && h <= bound + 1e-12)
}

fn insert_dual(report: &mut Report, sol: &DualSolution) {
    let res = &mut report.results;
    res.insert("phi_tilde".into(), nums(&sol.phi_tilde.values));
    res.insert("value".into(), num(sol.value));
    res.insert("psi".into(), nums(&sol.psi));
    res.insert("iterations".into(), Value::from(sol.iterations));
    let resid = &mut report.residuals;
    resid.insert("pressure_residual".into(), num(sol.pressure_residual));
    resid.insert("marginal_residual".into(), num(sol.marginal_residual));
    resid.insert("duality_gap".into(), num(sol.duality_gap));
}

fn dual_verb(report: &mut Report, problem: &Problem, s: &Settings) -> Result<bool> {
    let mu = require_mu(problem)?;
    let sol = minimize_dual(&problem.cost, mu, &s.dual, None)?;
    insert_dual(report, &sol);
    report
        .results
        .insert("plan_marginal_x".into(), nums(&sol.plan.marginal_x()));
    Ok(sol.passes(&s.dual))
}

fn check(name: &str, value: f64, tol: f64) -> (Value, bool) {
    let pass = value <= tol;
    let mut m = Map::new();
    m.insert("check".into(), Value::from(name));
    m.insert("value".into(), num(value));
    m.insert("tolerance".into(), num(tol));
    m.insert("pass".into(), Value::from(pass));
    (Value::Object(m), pass)
}

fn certify_verb(report: &mut Report, problem: &Problem, s: &Settings) -> Result<bool> {
    let c = &problem.cost;
    let mu = require_mu(problem)?;
    let sol = minimize_dual(c, mu, &s.dual, None)?;
    insert_dual(report, &sol);
    let p = pressure_with_tol(c, s.eigen_tol)?;
    report.results.insert("pressure".into(), num(p));

    let cert = slackness_certificate(c, &sol.phi_tilde.values, mu)?;
    let mut checks = vec![
        check(
            "pressure_residual",
            cert.pressure_residual,
            s.dual.pressure_tol,
        ),
        check(
            "marginal_residual",
            cert.marginal_residual,
            s.dual.marginal_tol,
        ),
        check("duality_gap", cert.duality_gap, s.dual.gap_tol),
        check("constrained_below_unconstrained", sol.value - p, 1e-10),
    ];
    if c.num_x() == 2 && c.alphabet_size() == 2 && c.depth() <= 2 {
        let cc = curve_conditions_2x2(c, &sol.phi_tilde.values, mu)?;
        checks.push(check("curve_determinant", cc.det_residual, CURVE_TOL));
        checks.push(check(
            "curve_collinearity",
            cc.collinearity_residual,
            CURVE_TOL,
        ));
    }
    let all = checks.iter().all(|(_, pass)| *pass);
    report.results.insert(
        "checks".into(),
        Value::Array(checks.into_iter().map(|(v, _)| v).collect()),
    );
    Ok(all)
}

fn sweep_value(records: &[BetaSweepRecord]) -> Value {
    Value::Array(
        records
            .iter()
            .map(|r| {
                let mut m = Map::new();
                m.insert("beta".into(), num(r.beta));
                m.insert("log_lambda_over_beta".into(), num(r.log_lambda_over_beta));
                m.insert("gap_to_limit".into(), num(r.gap_to_limit));
                if !r.phi_over_beta.is_empty() {
                    m.insert("phi_over_beta".into(), nums(&r.phi_over_beta));
                }
                m.insert("log_h_over_beta".into(), nums(&r.log_h_over_beta));
                Value::Object(m)
            })
            .collect(),
    )
}

fn lp_applicable(c: &CostTensor) -> bool {
    c.depth() <= 2 && c.num_x() * c.alphabet_size().pow(2) <= MAX_VARIABLES
}

fn zerotemp_verb(
    report: &mut Report,
    problem: &Problem,
    s: &Settings,
    sweep: &mut Option<String>,
) -> Result<bool> {
    let c = &problem.cost;
    let z = zero_temp_unconstrained_with_tol(c, &s.grid, s.eigen_tol)?;
    let mut exact = Map::new();
    exact.insert("m".into(), num(z.exact.m));
    exact.insert("subaction".into(), nums(&z.exact.v));
    exact.insert("optimal_cycle".into(), ints(&z.exact.optimal_cycle));
    report
        .results
        .insert("maxplus".into(), Value::Object(exact));
    report.results.insert("sweep".into(), sweep_value(&z.sweep));
    report.results.insert("limit_gap".into(), num(z.limit_gap));
    report
        .results
        .insert("subaction_distance".into(), num(z.subaction_distance));
    report
        .results
        .insert("non_monotone".into(), ints(&z.non_monotone));
    report.residuals.insert(
        "calibration_residual".into(),
        num(z.exact.calibration_residual),
    );
    report.residuals.insert(
        "feasibility_residual".into(),
        num(z.exact.feasibility_residual),
    );
    *sweep = Some(sweep_table(&z.sweep));

    let Some(mu) = &problem.mu else {
        return Ok(true);
    };
    let k = constrained_limit(c, mu, &s.grid, &s.dual)?;
    let mut con = Map::new();
    con.insert("m_tilde".into(), nums(&k.m_tilde));
    con.insert("v_tilde".into(), nums(&k.v_tilde));
    con.insert("value".into(), num(k.value));
    con.insert(
        "support_plan".into(),
        Value::Array(
            k.support_plan
                .iter()
                .map(|e| {
                    let mut m = Map::new();
                    m.insert("x".into(), Value::from(e.x));
                    m.insert("word".into(), ints(&e.symbols));
                    m.insert("mass".into(), num(e.mass));
                    Value::Object(m)
                })
                .collect(),
        ),
    );
    con.insert("sweep".into(), sweep_value(&k.sweep));
    let mut pass = k.certificate.passes();
    if lp_applicable(c) {
        let lp = primal_lp_oracle(c, mu)?;
        let bound = 2.0 * ((c.num_x() * c.alphabet_size()) as f64).ln() / k.beta_max + 1e-9;
        con.insert("lp_value".into(), num(lp.value));
        con.insert("lp_bound".into(), num(bound));
        report
            .residuals
            .insert("lp_gap".into(), num((k.value - lp.value).abs()));
        pass &= (k.value - lp.value).abs() <= bound;
    }
    report
        .results
        .insert("constrained".into(), Value::Object(con));
    let cert = &k.certificate;
    let resid = &mut report.residuals;
    resid.insert(
        "constrained_feasibility_residual".into(),
        num(cert.feasibility_residual),
    );
    resid.insert(
        "support_equality_residual".into(),
        num(cert.support_equality_residual),
    );
    resid.insert("support_tolerance".into(), num(cert.support_tol));
    *sweep = Some(sweep_table(&k.sweep));
    Ok(pass)
}

/// Entry point used by the binary: parses `args`, runs, writes the outputs
/// and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_VALIDATION
            } else {
                EXIT_OK
            };
            let _ = e.print();
            return code;
        }
    };
    let start = Instant::now();
    let outcome = run(&cli);
    if let Some(text) = &outcome.report {
        let written = match &cli.out {
            Some(path) => std::fs::write(path, text),
            None => {
                use std::io::Write;
                std::io::stdout().write_all(text.as_bytes())
            }
        };
        if let Err(e) = written {
            eprintln!("cannot write report: {e}");
            return EXIT_VALIDATION;
        }
    }
    if let (Some(path), Some(table)) = (&cli.sweep_out, &outcome.sweep) {
        if let Err(e) = std::fs::write(path, table) {
            eprintln!("cannot write sweep table: {e}");
            return EXIT_VALIDATION;
        }
    }
    if let Some(m) = &outcome.message {
        eprintln!("{m}");
    }
    eprintln!("wall time: {:.3} s", start.elapsed().as_secs_f64());
    outcome.exit_code
}
