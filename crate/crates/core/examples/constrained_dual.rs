//! The constrained problem with a prescribed x-marginal, solved through its
//! dual, then certified.

use ergodic_transport::dual::{
    curve_conditions_2x2, slackness_certificate, solve_dual, MARGINAL_TOL,
};
use ergodic_transport::symbolic::{CostTensor, Marginal};
use ergodic_transport::transfer::pressure;

pub fn run() -> Result<(), Box<dyn std::error::Error>> {
    let c = CostTensor::from_weight_matrices(&[
        vec![vec![1.0, 1.0], vec![1.0, 1.0]],
        vec![vec![1.0, 1.0], vec![1.0, 2.0]],
    ])?;
    let mu = Marginal::new(vec![0.3, 0.7])?;

    let sol = solve_dual(&c, &mu, MARGINAL_TOL)?;
    println!("phi_tilde = {:?}", sol.phi_tilde.values);
    println!(
        "P_mu(c) = {:.12} <= P(c) = {:.12}",
        sol.value,
        pressure(&c)?
    );
    println!(
        "residuals: pressure {:.1e}, marginal {:.1e}, gap {:.1e} after {} iterations",
        sol.pressure_residual, sol.marginal_residual, sol.duality_gap, sol.iterations
    );
    println!("plan x-marginal = {:?}", sol.plan.marginal_x());

    let cc = curve_conditions_2x2(&c, &sol.phi_tilde.values, &mu)?;
    println!(
        "determinant {:.1e}, collinearity {:.1e}",
        cc.det_residual, cc.collinearity_residual
    );

    // moving phi along the zero-pressure curve keeps the determinant at zero
    // but breaks stationarity
    let shifted = [sol.phi_tilde.values[0] + 0.1, sol.phi_tilde.values[1]];
    let moved = c.add_x(&[-shifted[0], -shifted[1]]);
    let fix = pressure(&moved)?;
    let off = [shifted[0] + fix, shifted[1] + fix];
    let cert = slackness_certificate(&c, &off, &mu)?;
    println!(
        "perturbed: marginal residual {:.3e}",
        cert.marginal_residual
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run()
}
