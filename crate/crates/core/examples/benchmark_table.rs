//! Runs the built-in sine benchmark across the default grid sequence and
//! prints the certified bounds as a table.
//!
//! ```text
//! cargo run --release -p majorant --example benchmark_table
//! ```

use majorant::experiment::{run_experiment, to_table, RunConfig};
use majorant::problem::ProblemSpec;

fn main() {
    let config = RunConfig::default();
    let reports = run_experiment(&config).expect("benchmark run");
    print!("{}", to_table(&reports));
    let exact = ProblemSpec::sine_preset(config.lambda)
        .exact
        .expect("benchmark optimum")
        .cost;
    println!("\nexact optimal cost: {exact:.6}");
    for r in &reports {
        assert!(r.bounds.j_minus <= exact && exact <= r.bounds.j_plus);
    }
    println!("cost sandwiched by [J_minus, J_plus] on every grid");
}
