// Deletions leave tombstones; the table rebuilds once they pile up.

use std::collections::VecDeque;
use std::error::Error;

use bubble_cuckoo::deletion::{DeleteOutcome, Upsert};
use bubble_cuckoo::harness::run_keys;
use bubble_cuckoo::params::{Mode, ParamConfig};
use bubble_cuckoo::policy::{BubbleUp, PolicyConfig};
use bubble_cuckoo::{AdvancedBubbleUp, TombstoneTable};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let p = ParamConfig::new(1 << 14, 2f64.powi(-6), 1.0, 5, Mode::Advanced).derive()?;
    let config = PolicyConfig {
        failure_c2: 32.0,
        ..PolicyConfig::default()
    };
    let mut table = TombstoneTable::new(AdvancedBubbleUp::new(&p, 21, config));
    println!(
        "epsilon' = {:.4}: rebuild at {} of {} slots",
        table.config().epsilon_prime,
        table.rebuild_threshold(),
        p.n
    );

    let mut keys = run_keys(21);
    let mut live = VecDeque::new();
    let target = (p.n as f64 * (1.0 - 2f64.powi(-4))) as usize;
    while live.len() < target {
        let x = keys.next().unwrap();
        table.insert(x)?;
        live.push_back(x);
    }

    // oldest out, newest in
    for _ in 0..20_000 {
        let old = live.pop_front().unwrap();
        assert_eq!(table.delete(old), DeleteOutcome::Deleted);
        let x = keys.next().unwrap();
        table.insert(x)?;
        live.push_back(x);
    }

    let back = live.pop_back().unwrap();
    table.delete(back);
    let again = table.insert(back)?;
    assert!(matches!(again.upsert, Upsert::Unmarked { .. }));

    let t = table.inner().table();
    let cost = table.cost();
    println!(
        "{} rebuilds, live {} / augmented {}, {:.1} probes per operation",
        table.config().rebuild_count,
        t.live_count(),
        t.augmented_count(),
        cost.per_operation()
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
