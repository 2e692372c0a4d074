//! Recovering an element's hash index from its position instead of storing it.
//!
//! `choice'(x, j)` is the largest `i <= d_max` with `h_i(x) = j`. It differs from
//! the true index only for *corrupt* elements, whose non-core hash collides with a
//! later hash. The insertion policies guard against those with
//! [`core_collision_check`]: a scanned index that collides with a core hash sends the
//! element straight into the core without reading the slot.
//!
//! None of these evaluations count as probes.

use crate::hashing::{HashOracle, Key};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChoiceProbeReport {
    pub result: Option<usize>,
    pub hash_evaluations: usize,
}

/// Scans `h_{d_max}(x), h_{d_max-1}(x), ...` and stops at the first hash equal to `j`.
pub fn choice_prime(oracle: &HashOracle, x: Key, j: usize, d_max: usize) -> ChoiceProbeReport {
    let mut evaluations = 0;
    for i in (1..=d_max).rev() {
        evaluations += 1;
        if oracle.slot(x, i) == j {
            return ChoiceProbeReport {
                result: Some(i),
                hash_evaluations: evaluations,
            };
        }
    }
    ChoiceProbeReport {
        result: None,
        hash_evaluations: evaluations,
    }
}

/// True iff some `i1 <= d_max - d_core` and `i1 < i2 <= d_max` have `h_{i1}(x) = h_{i2}(x)`.
pub fn is_corrupt(oracle: &HashOracle, x: Key, d_max: usize, d_core: usize) -> bool {
    let hashes: Vec<usize> = (1..=d_max).map(|i| oracle.slot(x, i)).collect();
    let noncore = d_max.saturating_sub(d_core);
    (0..noncore).any(|a| hashes[a + 1..].contains(&hashes[a]))
}

/// True iff `h_i(x)` equals one of the core hashes `h_j(x)`, `j` in `(d_max - d_core, d_max]`.
pub fn core_collision_check(oracle: &HashOracle, x: Key, i: usize, d_max: usize, d_core: usize) -> bool {
    debug_assert!(i + d_core <= d_max);
    let target = oracle.slot(x, i);
    (d_max - d_core + 1..=d_max).any(|j| oracle.slot(x, j) == target)
}
