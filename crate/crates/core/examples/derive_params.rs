// Derive parameters for both policies and inspect the constraint checks.

use std::error::Error;

use bubble_cuckoo::params::{epsilon_range, threshold_check, validate, CheckLevel, Mode, ParamConfig};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let n = 1 << 20;
    let eps = (-7.0f64).exp();

    // at this n the strict epsilon range is empty: n^-1/4 > e^-d_core
    let strict = ParamConfig::new(n, eps, 1.0, 5, Mode::Advanced)
        .check(CheckLevel::Strict)
        .derive();
    println!("strict checks: {}", strict.err().map_or("ok".to_string(), |e| e.to_string()));

    let adv = ParamConfig::new(n, eps, 1.0, 5, Mode::Advanced)
        .check(CheckLevel::DeskScale)
        .derive()?;
    println!(
        "advanced: d = {}, gamma = {}, phases = {}, eps_core = {:.5}",
        adv.d,
        adv.gamma,
        adv.final_phase(),
        adv.epsilon_core
    );
    for q in 1..=adv.final_phase() {
        println!("  phase {q}: d_max = {}, ends at load {:.6}", adv.d_max_for_phase(q), adv.phase_end_load(q));
    }
    for c in validate(&adv) {
        println!("  {:?}: margin {:+.4} ({})", c.inequality, c.margin, if c.passed { "ok" } else { "violated" });
    }
    if let Some(t) = threshold_check(&adv, 1.1) {
        println!("  advisory {:?}: margin {:+.5}", t.inequality, t.margin);
    }
    let (lo, hi) = epsilon_range(&adv);
    println!("  strict epsilon range: [{lo:.3e}, {hi:.3e}]");

    let basic = ParamConfig::new(n, (-4.0f64).exp(), 1.0, 2, Mode::Basic).derive()?;
    println!("basic: d = {}", basic.d);

    // d_core = 4 violates the decreasing-ratio inequality at alpha = 1
    let err = ParamConfig::new(n, eps, 1.0, 4, Mode::Advanced).derive().unwrap_err();
    println!("d_core = 4 rejected: {err}");
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
