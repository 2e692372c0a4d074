// Drive the experiment harness from code and write its CSV.

use std::error::Error;

use bubble_cuckoo::harness::{run, Experiment, ExperimentConfig};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let mut config = ExperimentConfig::new(Experiment::InsertSweep);
    config.n = 1 << 14;
    config.epsilon = 2f64.powi(-7);
    config.seeds = 2;
    config.failure_c2 = 32.0;
    let report = run(&config)?;

    let mut out = Vec::new();
    report.write_csv(&mut out)?;
    let text = String::from_utf8(out)?;
    for line in text.lines().take(4) {
        println!("{line}");
    }
    println!("... {} rows, exit code {}", report.rows.len(), report.exit_code());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
