//! Pressure as a function of the cost, and the variational principle
//! `P(c) = int c dpi + H(pi)` at the equilibrium plan.

use ergodic_transport::plan::{b_epsilon, equilibrium_plan};
use ergodic_transport::symbolic::CostTensor;
use ergodic_transport::transfer::pressure;

pub fn run() -> Result<(), Box<dyn std::error::Error>> {
    let f = CostTensor::from_fn(2, 3, 2, |x, w| {
        ((x + 1) * (w[0] + 2 * w[1])) as f64 * 0.1 - 0.3
    })?;
    let g = CostTensor::from_fn(2, 3, 2, |x, w| if x == w[0] % 2 { 0.4 } else { -0.2 })?;

    let (pf, pg) = (pressure(&f)?, pressure(&g)?);
    println!("P(f) = {pf:.12}, P(g) = {pg:.12}");
    println!(
        "P(f + 1.5) - P(f) = {:.12}",
        pressure(&f.shifted(1.5))? - pf
    );
    let mid = pressure(&f.interpolate(&g, 0.5))?;
    println!(
        "P((f+g)/2) = {mid:.12} <= (P(f)+P(g))/2 = {:.12}",
        0.5 * (pf + pg)
    );
    println!(
        "|P(f) - P(g)| = {:.6} <= sup|f - g| = {:.6}",
        (pf - pg).abs(),
        f.sup_distance(&g)
    );

    let (plan, p) = equilibrium_plan(&f)?;
    let h = plan.entropy();
    let int_c = plan.integrate(&f);
    println!("int f dpi + H(pi) = {:.14} vs P(f) = {p:.14}", int_c + h);

    // any normalized b gives an upper bound on the entropy
    let b = b_epsilon(&plan, 1e-6, 1)?;
    println!(
        "-int b dpi = {:.10} >= H = {h:.10}",
        -plan.integrate(b.cost())
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run()
}
