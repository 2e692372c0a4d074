//! What the two insertion policies have in common.

use crate::hashing::Key;
use crate::table::{ChoiceMode, Element, SlotState, Table, TableError};

/// Default `C1` in the basic failure threshold `ceil(C1 ln n)`.
pub const DEFAULT_FAILURE_C1: f64 = 8.0;
/// Default `C2` in the advanced failure threshold `ceil(C2 (ln n)^2)`.
pub const DEFAULT_FAILURE_C2: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyConfig {
    pub choice_mode: ChoiceMode,
    pub failure_c1: f64,
    pub failure_c2: f64,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        PolicyConfig {
            choice_mode: ChoiceMode::Stored,
            failure_c1: DEFAULT_FAILURE_C1,
            failure_c2: DEFAULT_FAILURE_C2,
        }
    }
}

impl PolicyConfig {
    pub fn with_choice_mode(mut self, mode: ChoiceMode) -> Self {
        self.choice_mode = mode;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InsertOutcome {
    /// `chain_length` placements, `probes` slot inspections.
    Placed { chain_length: usize, probes: u64 },
    AlreadyPresent,
    /// The chain ran past the failure threshold. `homeless` is the element left without a slot.
    Failed { homeless: Element },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QueryResult {
    pub slot: Option<usize>,
    pub probes: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeOrder {
    Ascending,
    Descending,
}

pub trait BubbleUp: Sized {
    fn table(&self) -> &Table;

    fn table_mut(&mut self) -> &mut Table;

    fn probe_order(&self) -> ProbeOrder;

    /// Current phase index `q`; single-phase policies stay at 1.
    fn phase(&self) -> usize {
        1
    }

    /// An empty table with the same parameters and configuration but a new hash seed.
    fn fresh(&self, seed: u64) -> Self;

    /// Runs the eviction chain for `elem`, which must not be resident.
    fn insert_element(&mut self, elem: Element) -> Result<InsertOutcome, TableError>;

    /// Inserts `x` without checking whether it is already present.
    fn insert_unique(&mut self, x: Key) -> Result<InsertOutcome, TableError> {
        self.insert_element(Element::fresh(x))
    }

    /// Inserts `x` unless a lookup finds it first. The lookup counts as a query.
    fn insert(&mut self, x: Key) -> Result<InsertOutcome, TableError> {
        if self.table().is_failed() {
            return Err(TableError::Failed);
        }
        let q = self.query(x);
        self.table_mut().metrics.record_query(q.probes);
        if q.slot.is_some() {
            return Ok(InsertOutcome::AlreadyPresent);
        }
        self.insert_unique(x)
    }

    /// Finds the slot holding live `x`.
    fn query(&self, x: Key) -> QueryResult {
        self.locate(x, SlotState::Occupied)
    }

    /// Scans `x`'s hashes in [`BubbleUp::probe_order`] for a slot holding `x` in `state`.
    fn locate(&self, x: Key, state: SlotState) -> QueryResult {
        let t = self.table();
        let d_max = t.window().d_max;
        let mut probes = 0;
        let mut check = |i: usize| {
            probes += 1;
            let v = t.peek(x, i);
            (v.key == Some(x) && v.state == state).then_some(v.index)
        };
        let slot = match self.probe_order() {
            ProbeOrder::Ascending => (1..=d_max).find_map(&mut check),
            ProbeOrder::Descending => (1..=d_max).rev().find_map(&mut check),
        };
        QueryResult { slot, probes }
    }
}

pub(crate) fn failure_threshold_log(c: f64, n: usize) -> usize {
    (c * (n as f64).ln()).ceil().max(1.0) as usize
}

pub(crate) fn failure_threshold_log2(c: f64, n: usize) -> usize {
    let l = (n as f64).ln();
    (c * l * l).ceil().max(1.0) as usize
}

pub(crate) fn record_success(table: &mut Table, chain: usize, probes_before: u64) -> InsertOutcome {
    let m = &mut table.metrics;
    m.counters.insertions += 1;
    m.chain_lengths.record(chain);
    InsertOutcome::Placed {
        chain_length: chain,
        probes: m.counters.insert_probes - probes_before,
    }
}
