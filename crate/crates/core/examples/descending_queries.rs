// Positive queries scan from the top hash down and stay cheap at high load.

use std::error::Error;

use bubble_cuckoo::harness::{fill, query_all};
use bubble_cuckoo::oracle::geometric_tail_check;
use bubble_cuckoo::params::{Mode, ParamConfig};
use bubble_cuckoo::policy::{BubbleUp, PolicyConfig};
use bubble_cuckoo::AdvancedBubbleUp;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let p = ParamConfig::new(1 << 15, 2f64.powi(-6), 1.0, 5, Mode::Advanced).derive()?;
    let config = PolicyConfig {
        failure_c2: 32.0,
        ..PolicyConfig::default()
    };
    let mut table = AdvancedBubbleUp::new(&p, 11, config);
    let f = fill(&mut table, 11, p.fill_target())?;
    assert!(!f.failed);

    let (hist, missing) = query_all(&table, &f.keys);
    assert_eq!(missing, 0);
    let report = geometric_tail_check(&hist, 3.0 * p.d_core as f64)?;
    println!(
        "load {:.4}: mean {:.3} probes, p99 {}, fitted tail ratio {:.3}",
        table.table().load(),
        report.mean,
        hist.percentile(0.99),
        report.ratio
    );
    for k in 1..=p.d {
        println!("  P[probes >= {k}] = {:.5}", hist.tail(k));
    }
    let absent = table.query(u64::MAX);
    println!("absent key: {} probes (d_max = {})", absent.probes, table.current_phase().d_max);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
