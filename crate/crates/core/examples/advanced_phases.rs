// Watch the advanced policy move through its phases.

use std::error::Error;

use bubble_cuckoo::harness::run_keys;
use bubble_cuckoo::params::{CheckLevel, Mode, ParamConfig};
use bubble_cuckoo::policy::{BubbleUp, InsertOutcome, PolicyConfig};
use bubble_cuckoo::AdvancedBubbleUp;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    // d = 6 with a 3-ary core: d_max is 3, then 6
    let p = ParamConfig::new(1 << 14, (-5.0f64).exp(), 1.0, 3, Mode::Advanced)
        .check(CheckLevel::Off)
        .derive()?;
    let config = PolicyConfig {
        failure_c2: 32.0,
        ..PolicyConfig::default()
    };
    let mut table = AdvancedBubbleUp::new(&p, 3, config);

    let mut phase = table.current_phase();
    println!("phase {} d_max {} core {:?}", phase.q, phase.d_max, phase.core_range);
    for x in run_keys(3).take(p.fill_target()) {
        if let InsertOutcome::Failed { .. } = table.insert_unique(x)? {
            return Err("insertion failed".into());
        }
        let now = table.current_phase();
        if now.q != phase.q {
            println!(
                "phase {} d_max {} core {:?} at load {:.4}; core elements now {}",
                now.q,
                now.d_max,
                now.core_range,
                table.table().load(),
                table.table().core_count()
            );
            phase = now;
        }
    }
    table.snapshot();
    for s in &table.table().metrics.snapshots {
        println!(
            "end of phase {}: load {:.4}, core {} ({:.3} n), first-time probes {}",
            s.q,
            s.live_count as f64 / p.n as f64,
            s.core_count,
            s.core_count as f64 / p.n as f64,
            s.counters.first_time_probes_total
        );
    }
    println!("longest core run {}", table.table().metrics.counters.longest_core_run);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
