//! Zero temperature with a prescribed x-marginal, checked against the exact
//! linear program over two-symbol windows.

use ergodic_transport::lp::primal_lp_oracle;
use ergodic_transport::symbolic::{CostTensor, Marginal};
use ergodic_transport::zero_temp::{default_beta_grid, zero_temp_constrained};

pub fn run() -> Result<(), Box<dyn std::error::Error>> {
    let c = CostTensor::from_fn(2, 3, 2, |x, w| match (x, w[0], w[1]) {
        (0, a, b) if a == b => 0.5,
        (1, 2, _) => 0.9,
        (_, a, b) => -0.1 * (a + b) as f64,
    })?;
    let mu = Marginal::new(vec![0.6, 0.4])?;

    let z = zero_temp_constrained(&c, &mu, &default_beta_grid())?;
    let lp = primal_lp_oracle(&c, &mu)?;
    let bound = 2.0 * 6f64.ln() / z.beta_max;
    println!("m_tilde = {:?}", z.m_tilde);
    println!("V_tilde = {:?}", z.v_tilde);
    println!(
        "value {:.10}, LP {:.10}, bound {bound:.2e}",
        z.value, lp.value
    );
    println!(
        "certificate: feasibility {:.1e}, support {:.2e} (tol {:.2e})",
        z.certificate.feasibility_residual,
        z.certificate.support_equality_residual,
        z.certificate.support_tol
    );
    for e in &z.support_plan {
        println!("  x={} word={:?} mass={:.6}", e.x, e.symbols, e.mass);
    }
    assert!((z.value - lp.value).abs() <= bound + 1e-9);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run()
}
