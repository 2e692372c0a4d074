//! The basic bubble-up policy.
//!
//! Hashes `1..=d-2` are used passively: an element takes the first free one after
//! its current index and never evicts there. Hashes `d-1` and `d` form a 2-ary
//! cuckoo core that evicts freely:
//!
//! | current choice `c` | move                                            |
//! |--------------------|-------------------------------------------------|
//! | `d`                | Type 1: to `h_{d-1}`, evicting                  |
//! | `d-1`              | Type 2: to `h_d`, evicting                      |
//! | `< d-1`            | Type 3: first free of `h_{c+1}..h_{d-2}`; else  |
//! |                    | Type 4: to `h_{d-1}`, evicting                  |
//!
//! Too many Type 1/2 moves in a row is a failure.

use crate::choice::core_collision_check;
use crate::hashing::Key;
use crate::params::{Mode, ParamSet};
use crate::policy::{
    failure_threshold_log, record_success, BubbleUp, InsertOutcome, PolicyConfig, ProbeOrder,
    QueryResult,
};
use crate::table::{ChoiceMode, Element, Table, TableError};

#[derive(Debug, Clone)]
pub struct BasicBubbleUp {
    table: Table,
    config: PolicyConfig,
    failure_threshold: usize,
}

impl BasicBubbleUp {
    pub fn new(params: &ParamSet, seed: u64, config: PolicyConfig) -> Self {
        assert_eq!(params.mode, Mode::Basic, "basic policy needs basic parameters");
        BasicBubbleUp {
            table: Table::new(params, seed, config.choice_mode),
            config,
            failure_threshold: failure_threshold_log(config.failure_c1, params.n),
        }
    }

    /// Maximum consecutive Type 1/2 moves.
    pub fn failure_threshold(&self) -> usize {
        self.failure_threshold
    }

    /// Ascending scan of `h_1(x)..h_d(x)`.
    pub fn lookup(&self, x: Key) -> QueryResult {
        self.query(x)
    }
}

impl BubbleUp for BasicBubbleUp {
    fn table(&self) -> &Table {
        &self.table
    }

    fn table_mut(&mut self) -> &mut Table {
        &mut self.table
    }

    fn probe_order(&self) -> ProbeOrder {
        ProbeOrder::Ascending
    }

    fn fresh(&self, seed: u64) -> Self {
        BasicBubbleUp::new(self.table.params(), seed, self.config)
    }

    fn insert_element(&mut self, elem: Element) -> Result<InsertOutcome, TableError> {
        if self.table.is_failed() {
            return Err(TableError::Failed);
        }
        let d = self.table.params().d;
        let recomputed = self.table.choice_mode() == ChoiceMode::Recomputed;
        let probes_before = self.table.metrics.counters.insert_probes;
        let mut cur = elem;
        let mut chain = 0;
        let mut core_run = 0;

        loop {
            let c = cur.choice;
            let (target, move_type) = if c == d {
                (d - 1, 1)
            } else if c == d - 1 {
                (d, 2)
            } else {
                let mut free = None;
                for i in c + 1..=d - 2 {
                    if recomputed && core_collision_check(self.table.oracle(), cur.key, i, d, 2) {
                        self.table.metrics.counters.corrupt_core_entries += 1;
                        break;
                    }
                    if self.table.probe(&mut cur, i)?.is_empty() {
                        free = Some(i);
                        break;
                    }
                }
                if let Some(i) = free {
                    let evicted = self.table.place(cur, i)?;
                    debug_assert!(evicted.is_none());
                    self.table.metrics.counters.moves_by_type[2] += 1;
                    return Ok(record_success(&mut self.table, chain + 1, probes_before));
                }
                self.table.enter_core(&mut cur);
                (d - 1, 4)
            };

            self.table.probe(&mut cur, target)?;
            let evicted = self.table.place(cur, target)?;
            chain += 1;
            self.table.metrics.counters.moves_by_type[move_type - 1] += 1;
            core_run = if move_type == 4 { 0 } else { core_run + 1 };
            let c = &mut self.table.metrics.counters;
            c.longest_core_run = c.longest_core_run.max(core_run as u64);

            match evicted {
                None => return Ok(record_success(&mut self.table, chain, probes_before)),
                Some(y) => cur = y,
            }
            if core_run >= self.failure_threshold {
                self.table.mark_failed();
                return Ok(InsertOutcome::Failed { homeless: cur });
            }
        }
    }
}
