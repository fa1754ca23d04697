#[path = "../examples/constrained_dual.rs"]
mod constrained_dual;
#[path = "../examples/constrained_zero_temperature.rs"]
mod constrained_zero_temperature;
#[path = "../examples/example_one_gibbs_plan.rs"]
mod example_one_gibbs_plan;
#[path = "../examples/plan_entropy.rs"]
mod plan_entropy;
#[path = "../examples/pressure_properties.rs"]
mod pressure_properties;
#[path = "../examples/problem_report.rs"]
mod problem_report;
#[path = "../examples/zero_temperature.rs"]
mod zero_temperature;

#[test]
fn constrained_dual_runs() {
    constrained_dual::run().unwrap();
}

#[test]
fn constrained_zero_temperature_runs() {
    constrained_zero_temperature::run().unwrap();
}

#[test]
fn example_one_gibbs_plan_runs() {
    example_one_gibbs_plan::run().unwrap();
}

#[test]
fn plan_entropy_runs() {
    plan_entropy::run().unwrap();
}

#[test]
fn pressure_properties_runs() {
    pressure_properties::run().unwrap();
}

#[test]
fn problem_report_runs() {
    problem_report::run().unwrap();
}

#[test]
fn zero_temperature_runs() {
    zero_temperature::run().unwrap();
}
