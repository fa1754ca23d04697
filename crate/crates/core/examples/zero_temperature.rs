//! Max-plus limit of `beta * c`: maximal ergodic average, a calibrated
//! subaction, and the rescaled pressures along a beta grid.

use ergodic_transport::symbolic::CostTensor;
use ergodic_transport::zero_temp::{
    default_beta_grid, maxplus_lift, sweep_table, zero_temp_unconstrained,
};

pub fn run() -> Result<(), Box<dyn std::error::Error>> {
    let c = CostTensor::from_weight_matrices(&[
        vec![vec![1.0, 1.0], vec![1.0, 1.0]],
        vec![vec![1.0, 1.0], vec![1.0, 2.0]],
    ])?;
    println!("tropical matrix W[b'][b] = {:?}", maxplus_lift(&c).dense());

    let z = zero_temp_unconstrained(&c, &default_beta_grid())?;
    println!("m = {:.15} (log 2 = {:.15})", z.exact.m, 2f64.ln());
    println!(
        "V = {:?}, optimal cycle {:?}",
        z.exact.v, z.exact.optimal_cycle
    );
    println!(
        "calibration {:.1e}, feasibility {:.1e}",
        z.exact.calibration_residual, z.exact.feasibility_residual
    );
    print!("{}", sweep_table(&z.sweep));
    println!(
        "distance of log h / beta to V at the top of the grid: {:.3e}",
        z.subaction_distance
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run()
}
