//! The shared slot array, load accounting and first-time-probe bookkeeping.
//!
//! Both insertion policies drive a [`Table`] through three primitives:
//! [`Table::probe`] (evaluate `h_i(x)` and inspect the slot), [`Table::place`]
//! (write an element, returning whoever was there) and [`Table::choice_of`].
//!
//! An element's probe history is a bitmap of the hash indices already inspected
//! during insertions. It moves with the element through eviction chains and
//! survives tombstoning; only a rebuild clears it.

use thiserror::Error;

use crate::choice::{choice_prime, is_corrupt};
use crate::hashing::{HashOracle, IndexError, Key};
use crate::metrics::{Metrics, PhaseSnapshot};
use crate::params::ParamSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChoiceMode {
    /// One index per slot.
    #[default]
    Stored,
    /// Index recovered with `choice'`.
    Recomputed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SlotState {
    #[default]
    Empty,
    Occupied,
    Tombstone,
}

#[derive(Debug, Clone, Copy, Default)]
struct Slot {
    key: Key,
    probed: u64,
    /// Placement index. Only read by the algorithms in stored mode.
    choice: u8,
    state: SlotState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlotView {
    pub index: usize,
    pub state: SlotState,
    pub key: Option<Key>,
}

impl SlotView {
    pub fn is_empty(&self) -> bool {
        self.state == SlotState::Empty
    }
}

/// An element that currently has no slot: a fresh key or an evictee.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Element {
    pub key: Key,
    /// Hash index it was placed with; 0 for a fresh key.
    pub choice: usize,
    pub tombstone: bool,
    probed: u64,
    entering_core: bool,
}

impl Element {
    pub fn fresh(key: Key) -> Self {
        Element {
            key,
            choice: 0,
            tombstone: false,
            probed: 0,
            entering_core: false,
        }
    }

    pub fn probed(&self, i: usize) -> bool {
        self.probed & bit(i) != 0
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TableError {
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error("key {key} is not stored at slot {slot}")]
    NotFound { key: Key, slot: usize },
    #[error("table is in the failed state")]
    Failed,
}

/// The hash indices currently in use: `[1, d_max]`, with `(d_max - d_core, d_max]` the core range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub d_max: usize,
    pub d_core: usize,
}

impl Window {
    pub fn core_start(&self) -> usize {
        self.d_max - self.d_core + 1
    }

    pub fn is_core(&self, i: usize) -> bool {
        i >= self.core_start() && i <= self.d_max
    }

    fn core_mask(&self) -> u64 {
        (self.core_start()..=self.d_max).fold(0, |m, i| m | bit(i))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AuditViolation {
    /// `h_choice(key)` does not point back at the slot.
    Matching { slot: usize, key: Key, choice: Option<usize> },
    Counter { field: &'static str, recorded: usize, scanned: usize },
}

#[inline]
fn bit(i: usize) -> u64 {
    1u64 << (i - 1)
}

#[derive(Debug, Clone)]
pub struct Table {
    slots: Vec<Slot>,
    live_count: usize,
    augmented_count: usize,
    oracle: HashOracle,
    params: ParamSet,
    window: Window,
    choice_mode: ChoiceMode,
    failed: bool,
    pub metrics: Metrics,
}

impl Table {
    pub fn new(params: &ParamSet, seed: u64, choice_mode: ChoiceMode) -> Self {
        Table {
            slots: vec![Slot::default(); params.n],
            live_count: 0,
            augmented_count: 0,
            oracle: HashOracle::new(seed, params.n, params.d),
            params: params.clone(),
            window: Window {
                d_max: params.d_max_for_phase(1),
                d_core: params.d_core,
            },
            choice_mode,
            failed: false,
            metrics: Metrics::default(),
        }
    }

    pub fn n(&self) -> usize {
        self.slots.len()
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn oracle(&self) -> &HashOracle {
        &self.oracle
    }

    pub fn choice_mode(&self) -> ChoiceMode {
        self.choice_mode
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub(crate) fn set_window(&mut self, d_max: usize) {
        assert!(d_max <= self.params.d && d_max >= self.window.d_core);
        self.window.d_max = d_max;
    }

    pub fn live_count(&self) -> usize {
        self.live_count
    }

    pub fn augmented_count(&self) -> usize {
        self.augmented_count
    }

    pub fn load(&self) -> f64 {
        self.live_count as f64 / self.n() as f64
    }

    pub fn augmented_load(&self) -> f64 {
        self.augmented_count as f64 / self.n() as f64
    }

    pub fn is_failed(&self) -> bool {
        self.failed
    }

    pub(crate) fn mark_failed(&mut self) {
        self.failed = true;
        self.metrics.counters.failures += 1;
    }

    pub fn slot_view(&self, index: usize) -> SlotView {
        let s = &self.slots[index];
        SlotView {
            index,
            state: s.state,
            key: (s.state != SlotState::Empty).then_some(s.key),
        }
    }

    fn check_index(&self, i: usize) -> Result<(), IndexError> {
        if i == 0 || i > self.window.d_max {
            return Err(IndexError {
                index: i,
                d: self.window.d_max,
            });
        }
        Ok(())
    }

    /// Evaluates `h_i(x)` and inspects the slot during an insertion.
    ///
    /// The first inspection of each `(x, i)` pair is a first-time probe, classified
    /// core or non-core against the current window.
    pub fn probe(&mut self, elem: &mut Element, i: usize) -> Result<SlotView, IndexError> {
        self.check_index(i)?;
        let c = &mut self.metrics.counters;
        c.insert_probes += 1;
        let core = self.window.is_core(i);
        if core && !elem.entering_core && !self.window.is_core(elem.choice) {
            c.lazy_violations += 1;
        }
        if elem.probed & bit(i) == 0 {
            elem.probed |= bit(i);
            c.first_time_probes_total += 1;
            if core {
                c.first_time_probes_core += 1;
            } else {
                c.first_time_probes_noncore += 1;
            }
        }
        Ok(self.slot_view(self.oracle.slot(elem.key, i)))
    }

    /// Reads `h_i(x)` without any accounting. Used by queries.
    pub fn peek(&self, x: Key, i: usize) -> SlotView {
        self.slot_view(self.oracle.slot(x, i))
    }

    /// Marks the element as about to enter the core, checking that none of its
    /// core-range hashes have been inspected yet.
    pub(crate) fn enter_core(&mut self, elem: &mut Element) {
        if elem.probed & self.window.core_mask() != 0 {
            self.metrics.counters.lazy_violations += 1;
        }
        elem.entering_core = true;
    }

    /// Writes `elem` at `h_i(x)` with choice `i` and returns the previous occupant.
    ///
    /// Tombstones are returned like any other occupant and keep their mark.
    pub fn place(&mut self, mut elem: Element, i: usize) -> Result<Option<Element>, IndexError> {
        self.check_index(i)?;
        let j = self.oracle.slot(elem.key, i);
        elem.choice = i;
        elem.entering_core = false;
        let old = std::mem::replace(
            &mut self.slots[j],
            Slot {
                key: elem.key,
                probed: elem.probed,
                choice: i as u8,
                state: if elem.tombstone {
                    SlotState::Tombstone
                } else {
                    SlotState::Occupied
                },
            },
        );
        if !elem.tombstone {
            self.live_count += 1;
        }
        match old.state {
            SlotState::Empty => {
                self.augmented_count += 1;
                Ok(None)
            }
            state => {
                let tombstone = state == SlotState::Tombstone;
                if !tombstone {
                    self.live_count -= 1;
                }
                let choice = match self.choice_mode {
                    ChoiceMode::Stored => old.choice as usize,
                    ChoiceMode::Recomputed => self.recompute(old.key, j),
                };
                Ok(Some(Element {
                    key: old.key,
                    choice,
                    tombstone,
                    probed: old.probed,
                    entering_core: false,
                }))
            }
        }
    }

    fn recompute(&mut self, x: Key, j: usize) -> usize {
        let r = choice_prime(&self.oracle, x, j, self.window.d_max);
        self.metrics.counters.choice_prime_evaluations += r.hash_evaluations as u64;
        r.result
            .expect("an element always sits at one of its first d_max hashes")
    }

    /// The hash index of the element stored at `at_slot`, as the algorithms see it.
    pub fn choice_of(&self, x: Key, at_slot: usize) -> Result<usize, TableError> {
        let s = self
            .slots
            .get(at_slot)
            .filter(|s| s.state != SlotState::Empty && s.key == x)
            .ok_or(TableError::NotFound { key: x, slot: at_slot })?;
        Ok(match self.choice_mode {
            ChoiceMode::Stored => s.choice as usize,
            ChoiceMode::Recomputed => choice_prime(&self.oracle, x, at_slot, self.window.d_max)
                .result
                .ok_or(TableError::NotFound { key: x, slot: at_slot })?,
        })
    }

    /// The index recorded at placement time, regardless of choice mode.
    pub fn recorded_choice(&self, at_slot: usize) -> Option<usize> {
        let s = &self.slots[at_slot];
        (s.state != SlotState::Empty).then_some(s.choice as usize)
    }

    /// Probe history of the element stored at `at_slot`.
    pub fn probed_at(&self, at_slot: usize) -> u64 {
        self.slots[at_slot].probed
    }

    pub(crate) fn mark_tombstone(&mut self, slot: usize) {
        let s = &mut self.slots[slot];
        debug_assert_eq!(s.state, SlotState::Occupied);
        s.state = SlotState::Tombstone;
        self.live_count -= 1;
    }

    pub(crate) fn unmark(&mut self, slot: usize) {
        let s = &mut self.slots[slot];
        debug_assert_eq!(s.state, SlotState::Tombstone);
        s.state = SlotState::Occupied;
        self.live_count += 1;
    }

    /// `(slot, key, state)` for every non-empty slot, in slot order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, Key, SlotState)> + '_ {
        self.slots
            .iter()
            .enumerate()
            .filter(|(_, s)| s.state != SlotState::Empty)
            .map(|(i, s)| (i, s.key, s.state))
    }

    /// Live keys in slot order.
    pub fn live_keys(&self) -> Vec<Key> {
        self.entries()
            .filter(|e| e.2 == SlotState::Occupied)
            .map(|e| e.1)
            .collect()
    }

    /// Elements (tombstones included) whose choice lies in the current core range.
    pub fn core_count(&self) -> usize {
        self.entries()
            .filter(|&(j, x, _)| {
                self.choice_of(x, j)
                    .map(|c| self.window.is_core(c))
                    .unwrap_or(false)
            })
            .count()
    }

    /// Resident elements that are corrupt under the current window.
    pub fn corrupt_count(&self) -> usize {
        self.entries()
            .filter(|&(_, x, _)| is_corrupt(&self.oracle, x, self.window.d_max, self.window.d_core))
            .count()
    }

    /// Full scan: every non-empty slot `s` holds `x` with `h_choice(x) = s`, and counters match.
    pub fn audit(&self) -> Vec<AuditViolation> {
        let mut out = Vec::new();
        let (mut live, mut aug) = (0, 0);
        for (j, x, state) in self.entries() {
            aug += 1;
            live += (state == SlotState::Occupied) as usize;
            let choice = self.choice_of(x, j).ok();
            let ok = choice.is_some_and(|c| c <= self.params.d && self.oracle.slot(x, c) == j);
            if !ok {
                out.push(AuditViolation::Matching { slot: j, key: x, choice });
            }
        }
        if live != self.live_count {
            out.push(AuditViolation::Counter {
                field: "live_count",
                recorded: self.live_count,
                scanned: live,
            });
        }
        if aug != self.augmented_count {
            out.push(AuditViolation::Counter {
                field: "augmented_count",
                recorded: self.augmented_count,
                scanned: aug,
            });
        }
        out
    }

    pub(crate) fn snapshot(&mut self, q: usize) {
        let snap = PhaseSnapshot {
            q,
            d_max: self.window.d_max,
            live_count: self.live_count,
            augmented_count: self.augmented_count,
            core_count: self.core_count(),
            counters: self.metrics.counters,
            chain_mean: self.metrics.chain_lengths.mean(),
            chain_max: self.metrics.chain_lengths.max(),
        };
        self.metrics.snapshots.push(snap);
    }
}
