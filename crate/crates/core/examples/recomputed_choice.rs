// Run without stored choice metadata: the index is recovered from the slot.

use std::error::Error;

use bubble_cuckoo::choice::{choice_prime, is_corrupt};
use bubble_cuckoo::harness::fill;
use bubble_cuckoo::params::{Mode, ParamConfig};
use bubble_cuckoo::policy::{BubbleUp, PolicyConfig};
use bubble_cuckoo::table::ChoiceMode;
use bubble_cuckoo::AdvancedBubbleUp;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let p = ParamConfig::new(1 << 14, 2f64.powi(-6), 1.0, 5, Mode::Advanced).derive()?;
    let config = PolicyConfig {
        failure_c2: 32.0,
        ..PolicyConfig::default().with_choice_mode(ChoiceMode::Recomputed)
    };
    let mut table = AdvancedBubbleUp::new(&p, 5, config);
    let f = fill(&mut table, 5, p.fill_target())?;
    assert!(!f.failed);

    let t = table.table();
    let w = t.window();
    let (mut corrupt, mut agree, mut total) = (0, 0, 0);
    for (slot, key, _) in t.entries() {
        total += 1;
        if is_corrupt(t.oracle(), key, w.d_max, w.d_core) {
            corrupt += 1;
            continue;
        }
        let recovered = choice_prime(t.oracle(), key, slot, w.d_max).result;
        agree += (recovered == t.recorded_choice(slot)) as usize;
    }
    let c = t.metrics.counters;
    println!("{total} residents, {corrupt} corrupt, {agree} non-corrupt with exact recovery");
    println!(
        "{} recovery evaluations during inserts, {} forced core entries",
        c.choice_prime_evaluations, c.corrupt_core_entries
    );
    println!("audit violations: {}", t.audit().len());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
