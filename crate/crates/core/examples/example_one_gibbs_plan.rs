//! Two-point `X`, two symbols, a cost that reads two coordinates.
//!
//! Builds the transfer matrix from the weight matrices, solves the eigen
//! problem, normalizes and prints the resulting Gibbs plan.
//!
//! ```text
//! cargo run --example example_one_gibbs_plan
//! ```

use ergodic_transport::plan::gibbs_plan;
use ergodic_transport::symbolic::CostTensor;
use ergodic_transport::transfer::{assemble_transfer, normalize, rpf_solve, DEFAULT_EIGEN_TOL};

pub fn run() -> Result<(), Box<dyn std::error::Error>> {
    // weights exp(c(x, r s)), one 2x2 matrix per x
    let c = CostTensor::from_weight_matrices(&[
        vec![vec![1.0, 1.0], vec![1.0, 1.0]],
        vec![vec![1.0, 1.0], vec![1.0, 2.0]],
    ])?;

    let t = assemble_transfer(&c);
    println!("transfer matrix:{}", t.matrix());

    let r = rpf_solve(&t, DEFAULT_EIGEN_TOL)?;
    let exact = (5.0 + 17f64.sqrt()) / 2.0;
    println!("lambda = {:.15} (closed form {exact:.15})", r.lambda());
    println!("h = {:?}, residual {:.1e}", r.h(), r.residual);
    assert!((r.lambda() - exact).abs() < 1e-12);

    let nc = normalize(&c, &r)?;
    let plan = gibbs_plan(&nc)?;
    let q = plan.nu().q_matrix();
    println!("normalized y-chain:{q}");
    println!("stationary = {:?}", plan.nu().stationary());

    for x in 0..2 {
        for y0 in 0..2 {
            println!("pi([x={x}, y0={y0}]) = {:.6}", plan.cylinder(x, &[y0]));
        }
    }
    println!("x-marginal = {:?}", plan.marginal_x());
    println!("entropy = {:.12}", plan.entropy());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run()
}
