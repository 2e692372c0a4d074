// Fill a basic bubble-up table and look at where elements ended up.

use std::error::Error;

use bubble_cuckoo::harness::{fill, run_keys};
use bubble_cuckoo::params::{Mode, ParamConfig};
use bubble_cuckoo::policy::{BubbleUp, PolicyConfig};
use bubble_cuckoo::BasicBubbleUp;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let p = ParamConfig::new(1 << 14, 2f64.powi(-4), 1.0, 2, Mode::Basic).derive()?;
    let mut table = BasicBubbleUp::new(&p, 7, PolicyConfig::default());
    let f = fill(&mut table, 7, p.fill_target())?;
    assert!(!f.failed, "fill failed");

    let t = table.table();
    let mut by_choice = vec![0usize; p.d + 1];
    for (slot, key, _) in t.entries() {
        by_choice[t.choice_of(key, slot)?] += 1;
    }
    println!("d = {}, load {:.4}, failure cap {} core moves", p.d, t.load(), table.failure_threshold());
    for (i, c) in by_choice.iter().enumerate().skip(1) {
        println!("  h_{i:<2} {c:>6}");
    }
    let m = t.metrics.counters.moves_by_type;
    println!("moves by type: {m:?}, core elements {}", t.core_count());

    let probe = run_keys(7).nth(100).unwrap();
    let q = table.lookup(probe);
    println!("key {probe:#x} found at slot {:?} after {} probes", q.slot, q.probes);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
