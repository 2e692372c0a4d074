//! The advanced bubble-up policy.
//!
//! Only the first `d_max` hashes are in use, and `d_max = gamma + q * d_core` grows
//! by `d_core` each time the augmented load reaches `1 - e^(-d_max + alpha)`.
//! The top `d_core` indices of the window form the core, a `d_core`-ary
//! random-walk cuckoo table:
//!
//! * **Type 1** (core element): move to `h_{d_max-k+1}` for uniform `k` in
//!   `[1, d_core]`, evicting whoever is there.
//! * **Type 2** (non-core element): take the first free slot among
//!   `h_i`, `max(1, choice - d_core) <= i <= d_max - d_core`; if there is none,
//!   enter the core with a Type 1 move.
//!
//! A run of Type 1 moves ends when it displaces a non-core element, whose Type 2
//! scan starts a new run; too long a run is a failure.
//!
//! A new phase starts with an empty core since every resident choice is at most
//! the old `d_max`. Positive queries scan downwards from `h_{d_max}`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::choice::core_collision_check;
use crate::hashing::mix64;
use crate::params::{ceil_count, Mode, ParamSet};
use crate::policy::{
    failure_threshold_log2, record_success, BubbleUp, InsertOutcome, PolicyConfig, ProbeOrder,
};
use crate::table::{ChoiceMode, Element, Table, TableError};

const MOVE_STREAM_SALT: u64 = 0x3c6e_f372_fe94_f82b;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseState {
    pub q: usize,
    pub d_max: usize,
    pub phase_end_load: f64,
    /// Inclusive core index range `(d_max - d_core, d_max]`.
    pub core_range: (usize, usize),
}

#[derive(Debug, Clone)]
pub struct AdvancedBubbleUp {
    table: Table,
    config: PolicyConfig,
    q: usize,
    /// Augmented count at which the current phase ends.
    phase_end_count: usize,
    failure_threshold: usize,
    moves: ChaCha8Rng,
}

impl AdvancedBubbleUp {
    pub fn new(params: &ParamSet, seed: u64, config: PolicyConfig) -> Self {
        Self::with_move_seed(params, seed, mix64(seed ^ MOVE_STREAM_SALT), config)
    }

    /// Separate seeds for the hash oracle and for the Type 1 target stream.
    pub fn with_move_seed(params: &ParamSet, seed: u64, move_seed: u64, config: PolicyConfig) -> Self {
        assert_eq!(params.mode, Mode::Advanced, "advanced policy needs advanced parameters");
        let mut a = AdvancedBubbleUp {
            table: Table::new(params, seed, config.choice_mode),
            config,
            q: 1,
            phase_end_count: 0,
            failure_threshold: failure_threshold_log2(config.failure_c2, params.n),
            moves: ChaCha8Rng::seed_from_u64(move_seed),
        };
        a.phase_end_count = a.end_count(1);
        a
    }

    fn end_count(&self, q: usize) -> usize {
        let p = self.table.params();
        ceil_count(p.phase_end_load(q) * p.n as f64)
    }

    /// Maximum consecutive Type 1 moves within one core-table eviction chain.
    pub fn failure_threshold(&self) -> usize {
        self.failure_threshold
    }

    pub fn current_phase(&self) -> PhaseState {
        let w = self.table.window();
        PhaseState {
            q: self.q,
            d_max: w.d_max,
            phase_end_load: self.table.params().phase_end_load(self.q),
            core_range: (w.core_start(), w.d_max),
        }
    }

    /// Augmented count at which the current phase ends.
    pub fn phase_end_count(&self) -> usize {
        self.phase_end_count
    }

    fn is_final_phase(&self) -> bool {
        self.q >= self.table.params().final_phase()
    }

    /// Advances the phase if the augmented load has reached the phase end.
    fn maybe_advance(&mut self) {
        while !self.is_final_phase() && self.table.augmented_count() >= self.phase_end_count {
            self.table.snapshot(self.q);
            self.q += 1;
            let d_max = self.table.params().d_max_for_phase(self.q);
            self.table.set_window(d_max);
            self.phase_end_count = self.end_count(self.q);
        }
    }

    /// Records a snapshot for the current phase, e.g. at the end of a fill.
    pub fn snapshot(&mut self) {
        self.table.snapshot(self.q);
    }

    fn core_target(&mut self) -> usize {
        let w = self.table.window();
        let k = self.moves.random_range(1..=w.d_core);
        w.d_max - k + 1
    }
}

impl BubbleUp for AdvancedBubbleUp {
    fn table(&self) -> &Table {
        &self.table
    }

    fn table_mut(&mut self) -> &mut Table {
        &mut self.table
    }

    fn probe_order(&self) -> ProbeOrder {
        ProbeOrder::Descending
    }

    fn phase(&self) -> usize {
        self.q
    }

    fn fresh(&self, seed: u64) -> Self {
        AdvancedBubbleUp::new(self.table.params(), seed, self.config)
    }

    fn insert_element(&mut self, elem: Element) -> Result<InsertOutcome, TableError> {
        if self.table.is_failed() {
            return Err(TableError::Failed);
        }
        let w = self.table.window();
        let noncore_top = w.d_max - w.d_core;
        let recomputed = self.table.choice_mode() == ChoiceMode::Recomputed;
        let probes_before = self.table.metrics.counters.insert_probes;
        let mut cur = elem;
        let mut chain = 0;
        let mut type1 = 0;

        loop {
            if !w.is_core(cur.choice) {
                let lo = cur.choice.saturating_sub(w.d_core).max(1);
                let mut free = None;
                for i in lo..=noncore_top {
                    if recomputed && core_collision_check(self.table.oracle(), cur.key, i, w.d_max, w.d_core) {
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
                    self.table.metrics.counters.moves_by_type[1] += 1;
                    let out = record_success(&mut self.table, chain + 1, probes_before);
                    self.maybe_advance();
                    return Ok(out);
                }
                self.table.enter_core(&mut cur);
                // a fresh core-table eviction chain starts here
                type1 = 0;
            }

            let target = self.core_target();
            self.table.probe(&mut cur, target)?;
            let evicted = self.table.place(cur, target)?;
            chain += 1;
            type1 += 1;
            let c = &mut self.table.metrics.counters;
            c.moves_by_type[0] += 1;
            c.longest_core_run = c.longest_core_run.max(type1 as u64);

            match evicted {
                None => {
                    let out = record_success(&mut self.table, chain, probes_before);
                    self.maybe_advance();
                    return Ok(out);
                }
                Some(y) => cur = y,
            }
            if type1 >= self.failure_threshold {
                self.table.mark_failed();
                return Ok(InsertOutcome::Failed { homeless: cur });
            }
        }
    }
}
