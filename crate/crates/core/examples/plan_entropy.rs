//! Entropy of explicit plans: `x` copying the first symbol, product plans,
//! and a two-atom plan on a periodic orbit.

use ergodic_transport::plan::{product_plan, FiniteMemoryPlan};
use ergodic_transport::symbolic::Marginal;
use ergodic_transport::transfer::MarkovMeasure;

pub fn run() -> Result<(), Box<dyn std::error::Error>> {
    let ln2 = 2f64.ln();

    // x = y0 over the fair coin
    let coin = MarkovMeasure::bernoulli(&[0.5, 0.5], 1)?;
    let copy = FiniteMemoryPlan::symbol_coupling(2, &[0, 1], coin.clone())?;
    println!(
        "copy plan:      H = {:.15}  (log 2 = {ln2:.15})",
        copy.entropy()
    );
    println!("  pi([0, 0 1 1]) = {}", copy.cylinder(0, &[0, 1, 1]));

    // uniform x independent of a period-two orbit
    let orbit = MarkovMeasure::periodic_orbit(&[0, 1], 2, 1)?;
    let mu = Marginal::uniform(2)?;
    let product = product_plan(&mu, &orbit)?;
    println!(
        "product plan:   H = {:.15}  h(mu) + h(nu) = {:.15}",
        product.entropy(),
        mu.entropy() + orbit.entropy()
    );

    // two atoms: (0, 0101...) and (1, 1010...)
    let atoms = FiniteMemoryPlan::symbol_coupling(2, &[0, 1], orbit)?;
    println!("two-atom plan:  H = {:.15}", atoms.entropy());
    println!(
        "  pi([0, 0 1 0 1 0]) = {}",
        atoms.cylinder(0, &[0, 1, 0, 1, 0])
    );

    // a biased product over a Bernoulli chain on 3 symbols
    let mu = Marginal::new(vec![0.2, 0.8])?;
    let nu = MarkovMeasure::bernoulli(&[0.5, 0.3, 0.2], 2)?;
    let p = product_plan(&mu, &nu)?;
    println!(
        "biased product: H = {:.15}  bound log(#X d) = {:.15}",
        p.entropy(),
        6f64.ln()
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run()
}
