// Check a filled table against an exact offline matching.

use std::error::Error;

use bubble_cuckoo::harness::{fill, run_keys};
use bubble_cuckoo::oracle::{maximum_matching, offline_feasible, BipartiteInstance};
use bubble_cuckoo::params::{CheckLevel, Mode, ParamConfig};
use bubble_cuckoo::policy::{BubbleUp, PolicyConfig};
use bubble_cuckoo::AdvancedBubbleUp;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let p = ParamConfig::new(64, 0.125, 1.0, 3, Mode::Advanced)
        .check(CheckLevel::Off)
        .derive()?;
    let mut table = AdvancedBubbleUp::new(&p, 8, PolicyConfig::default());
    let f = fill(&mut table, 8, p.fill_target())?;

    let inst = BipartiteInstance::from_oracle(f.keys.clone(), table.table().oracle(), p.d);
    println!("{} keys, {} slots, d = {}", inst.keys.len(), inst.n, inst.d);
    println!("offline feasible: {}", offline_feasible(&inst)?);
    if !f.failed {
        let assignment: Vec<usize> = f.keys.iter().map(|&k| table.query(k).slot.unwrap()).collect();
        println!("table layout is a witness matching: {}", inst.is_witness(&assignment));
    }

    // one more key than slots can never fit
    let over: Vec<_> = run_keys(9).take(p.n + 1).collect();
    let crowded = BipartiteInstance::from_oracle(over, table.table().oracle(), p.d);
    let matched = maximum_matching(crowded.n, &crowded.edges).iter().flatten().count();
    println!("{} keys into {} slots: feasible {}, maximum matching {matched}", crowded.keys.len(), crowded.n, offline_feasible(&crowded)?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
