//! Tombstone deletions with threshold-triggered rebuilds.
//!
//! A deleted element stays in its slot, marked as a tombstone, and keeps taking
//! part in eviction chains. Reinserting it clears the mark in place. Once the
//! augmented load (live plus tombstones) reaches `1 - epsilon'`, where
//! `epsilon' = e^alpha * epsilon`, the table is rebuilt from its live keys under a
//! fresh hash seed. A failed insertion triggers the same rebuild immediately.

use thiserror::Error;

use crate::hashing::{mix64, Key};
use crate::params::{ceil_count, ParamSet};
use crate::policy::{BubbleUp, InsertOutcome};
use crate::table::{SlotState, TableError};

const REBUILD_SALT: u64 = 0xa54f_f53a_5f1d_36f1;

/// Rebuild attempts (each with a new seed) before giving up.
pub const DEFAULT_REBUILD_RETRIES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeletionConfig {
    pub epsilon_prime: f64,
    pub rebuild_count: u64,
    pub rebuild_probe_cost: u64,
}

impl DeletionConfig {
    pub fn new(params: &ParamSet) -> Self {
        DeletionConfig {
            epsilon_prime: params.alpha.exp() * params.epsilon,
            rebuild_count: 0,
            rebuild_probe_cost: 0,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DeletionError {
    #[error(transparent)]
    Table(#[from] TableError),
    #[error("rebuild failed {attempts} times in a row")]
    RebuildFailed { attempts: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeleteOutcome {
    Deleted,
    NotFound,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RebuildOutcome {
    NoAction,
    Rebuilt { cost_probes: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Upsert {
    Placed { chain_length: usize, probes: u64 },
    AlreadyPresent,
    /// A tombstone for the key was found and cleared.
    Unmarked { slot: usize },
    /// The insertion failed; the key went in through an immediate rebuild.
    Recovered,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InsertReport {
    pub upsert: Upsert,
    pub rebuild: RebuildOutcome,
}

/// Probe totals across the table's lifetime, rebuilds included.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ChurnCost {
    pub insert_probes: u64,
    pub lookup_probes: u64,
    pub rebuild_probes: u64,
    pub operations: u64,
}

impl ChurnCost {
    pub fn total(&self) -> u64 {
        self.insert_probes + self.lookup_probes + self.rebuild_probes
    }

    pub fn per_operation(&self) -> f64 {
        self.total() as f64 / self.operations.max(1) as f64
    }
}

#[derive(Debug, Clone)]
pub struct TombstoneTable<P> {
    inner: P,
    config: DeletionConfig,
    rebuild_at: usize,
    retries: usize,
    next_seed: u64,
    cost: ChurnCost,
    /// Augmented counts observed when each rebuild fired.
    rebuild_loads: Vec<usize>,
}

impl<P: BubbleUp> TombstoneTable<P> {
    pub fn new(inner: P) -> Self {
        let params = inner.table().params();
        let config = DeletionConfig::new(params);
        let rebuild_at = ceil_count((1.0 - config.epsilon_prime) * params.n as f64);
        let next_seed = mix64(inner.table().oracle().seed() ^ REBUILD_SALT);
        TombstoneTable {
            inner,
            config,
            rebuild_at,
            retries: DEFAULT_REBUILD_RETRIES,
            next_seed,
            cost: ChurnCost::default(),
            rebuild_loads: Vec::new(),
        }
    }

    pub fn inner(&self) -> &P {
        &self.inner
    }

    pub fn config(&self) -> &DeletionConfig {
        &self.config
    }

    pub fn cost(&self) -> ChurnCost {
        self.cost
    }

    /// Augmented count at which a rebuild fires: `ceil((1 - epsilon') n)`.
    pub fn rebuild_threshold(&self) -> usize {
        self.rebuild_at
    }

    pub fn rebuild_loads(&self) -> &[usize] {
        &self.rebuild_loads
    }

    pub fn contains(&mut self, x: Key) -> bool {
        self.cost.operations += 1;
        self.lookup(x, SlotState::Occupied).is_some()
    }

    fn lookup(&mut self, x: Key, state: SlotState) -> Option<usize> {
        let q = self.inner.locate(x, state);
        self.cost.lookup_probes += q.probes as u64;
        q.slot
    }

    pub fn delete(&mut self, x: Key) -> DeleteOutcome {
        self.cost.operations += 1;
        match self.lookup(x, SlotState::Occupied) {
            Some(slot) => {
                self.inner.table_mut().mark_tombstone(slot);
                DeleteOutcome::Deleted
            }
            None => DeleteOutcome::NotFound,
        }
    }

    pub fn insert(&mut self, x: Key) -> Result<InsertReport, DeletionError> {
        self.cost.operations += 1;
        if self.lookup(x, SlotState::Occupied).is_some() {
            return Ok(InsertReport {
                upsert: Upsert::AlreadyPresent,
                rebuild: RebuildOutcome::NoAction,
            });
        }
        if let Some(slot) = self.lookup(x, SlotState::Tombstone) {
            self.inner.table_mut().unmark(slot);
            return Ok(InsertReport {
                upsert: Upsert::Unmarked { slot },
                rebuild: RebuildOutcome::NoAction,
            });
        }
        match self.inner.insert_unique(x)? {
            InsertOutcome::Placed { chain_length, probes } => {
                self.cost.insert_probes += probes;
                Ok(InsertReport {
                    upsert: Upsert::Placed { chain_length, probes },
                    rebuild: self.maybe_rebuild()?,
                })
            }
            InsertOutcome::Failed { homeless } => {
                let extra = (!homeless.tombstone).then_some(homeless.key);
                let cost_probes = self.rebuild(extra)?;
                Ok(InsertReport {
                    upsert: Upsert::Recovered,
                    rebuild: RebuildOutcome::Rebuilt { cost_probes },
                })
            }
            InsertOutcome::AlreadyPresent => unreachable!("insert_unique never reports duplicates"),
        }
    }

    pub fn maybe_rebuild(&mut self) -> Result<RebuildOutcome, DeletionError> {
        if self.inner.table().augmented_count() < self.rebuild_at {
            return Ok(RebuildOutcome::NoAction);
        }
        let cost_probes = self.rebuild(None)?;
        Ok(RebuildOutcome::Rebuilt { cost_probes })
    }

    /// Reinserts every live key (plus `extra`) into a fresh table, in slot order.
    fn rebuild(&mut self, extra: Option<Key>) -> Result<u64, DeletionError> {
        self.rebuild_loads.push(self.inner.table().augmented_count());
        let mut keys = self.inner.table().live_keys();
        keys.extend(extra);
        let mut spent = 0;
        for _ in 0..self.retries {
            let seed = self.next_seed;
            self.next_seed = mix64(self.next_seed ^ REBUILD_SALT);
            let mut fresh = self.inner.fresh(seed);
            let mut ok = true;
            for &k in &keys {
                if let InsertOutcome::Failed { .. } = fresh.insert_unique(k)? {
                    ok = false;
                    break;
                }
            }
            spent += fresh.table().metrics.counters.insert_probes;
            if ok {
                self.inner = fresh;
                self.config.rebuild_count += 1;
                self.config.rebuild_probe_cost += spent;
                self.cost.rebuild_probes += spent;
                return Ok(spent);
            }
        }
        self.cost.rebuild_probes += spent;
        Err(DeletionError::RebuildFailed {
            attempts: self.retries,
        })
    }
}
