//! Problem documents and reports, as used by the `ergotrans` binary.

use ergodic_transport::cli::{run as run_cli, Cli, Verb};

pub fn run() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join(format!("ergotrans-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let spec = dir.join("zero_cost.json");
    std::fs::write(
        &spec,
        r#"{"num_x": 2, "alphabet_size": 2, "depth": 2,
            "cost": [0, 0, 0, 0, 0, 0, 0, 0],
            "mu": [0.3333333333333333, 0.6666666666666666]}"#,
    )?;

    let cli = Cli {
        verb: Verb::Dual,
        spec: spec.clone(),
        out: None,
        tol_eigen: None,
        tol_dual: None,
        beta_max: None,
        sweep_out: None,
    };
    let outcome = run_cli(&cli);
    println!("exit code {}", outcome.exit_code);
    print!("{}", outcome.report.unwrap_or_default());
    println!(
        "expected phi_tilde = ({:.16e}, {:.16e})",
        6f64.ln(),
        3f64.ln()
    );
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run()
}
