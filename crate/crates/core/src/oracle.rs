//! Independent references used to check the tables: exact offline feasibility,
//! the coupon-collector process, and a geometric-tail test for probe counts.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::hashing::{HashOracle, Key};
use crate::metrics::Histogram;
use crate::params::ceil_count;

/// Largest instance (in key-slot edges) that [`offline_feasible`] accepts.
pub const MAX_EDGES: usize = 100_000;

/// Fewest samples [`geometric_tail_check`] accepts.
pub const MIN_TAIL_SAMPLES: u64 = 10_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("instance has {edges} edges; exact matching is limited to {max}")]
    Size { edges: usize, max: usize },
    #[error("{got} samples; at least {need} required")]
    InsufficientSamples { got: u64, need: u64 },
}

/// Keys and the slots each one may occupy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteInstance {
    pub keys: Vec<Key>,
    pub n: usize,
    pub d: usize,
    /// `edges[k]` are the `d` (not necessarily distinct) slots of `keys[k]`.
    pub edges: Vec<Vec<usize>>,
}

impl BipartiteInstance {
    pub fn from_oracle(keys: Vec<Key>, oracle: &HashOracle, d: usize) -> Self {
        let edges = keys
            .iter()
            .map(|&x| oracle.hashes_up_to(x, d).expect("d within oracle range"))
            .collect();
        BipartiteInstance {
            keys,
            n: oracle.n(),
            d,
            edges,
        }
    }

    /// Builds an instance from explicit adjacency lists; keys are numbered `0..`.
    pub fn from_edges(n: usize, edges: Vec<Vec<usize>>) -> Self {
        let d = edges.iter().map(Vec::len).max().unwrap_or(0);
        BipartiteInstance {
            keys: (0..edges.len() as u64).collect(),
            n,
            d,
            edges,
        }
    }

    fn edge_count(&self) -> usize {
        self.edges.iter().map(Vec::len).sum()
    }

    /// True iff `assignment[k]` is one of key `k`'s slots and all slots are distinct.
    pub fn is_witness(&self, assignment: &[usize]) -> bool {
        if assignment.len() != self.keys.len() {
            return false;
        }
        let mut used = HashSet::with_capacity(assignment.len());
        assignment
            .iter()
            .zip(&self.edges)
            .all(|(s, adj)| adj.contains(s) && used.insert(*s))
    }
}

/// Hopcroft-Karp maximum matching. Returns the slot matched to each key, if any.
pub fn maximum_matching(n_right: usize, adj: &[Vec<usize>]) -> Vec<Option<usize>> {
    const UNSEEN: usize = usize::MAX;
    let n_left = adj.len();
    let mut left_of = vec![UNSEEN; n_right];
    let mut right_of = vec![UNSEEN; n_left];
    let mut dist = vec![0usize; n_left];
    let mut queue = Vec::with_capacity(n_left);

    loop {
        // layer free keys by alternating-path distance
        queue.clear();
        for u in 0..n_left {
            if right_of[u] == UNSEEN {
                dist[u] = 0;
                queue.push(u);
            } else {
                dist[u] = UNSEEN;
            }
        }
        let mut found = false;
        let mut head = 0;
        while head < queue.len() {
            let u = queue[head];
            head += 1;
            for &v in &adj[u] {
                match left_of[v] {
                    UNSEEN => found = true,
                    w if dist[w] == UNSEEN => {
                        dist[w] = dist[u] + 1;
                        queue.push(w);
                    }
                    _ => {}
                }
            }
        }
        if !found {
            break;
        }

        let mut next_edge = vec![0usize; n_left];
        for root in 0..n_left {
            if right_of[root] != UNSEEN {
                continue;
            }
            // iterative DFS along the layering
            let mut stack = vec![root];
            while let Some(&u) = stack.last() {
                if next_edge[u] == adj[u].len() {
                    dist[u] = UNSEEN;
                    stack.pop();
                    continue;
                }
                let v = adj[u][next_edge[u]];
                next_edge[u] += 1;
                let w = left_of[v];
                if w == UNSEEN {
                    // augment along the stack
                    let mut slot = v;
                    for &x in stack.iter().rev() {
                        let prev = right_of[x];
                        right_of[x] = slot;
                        left_of[slot] = x;
                        slot = prev;
                    }
                    break;
                }
                if dist[w] == dist[u] + 1 {
                    stack.push(w);
                }
            }
        }
    }
    right_of
        .into_iter()
        .map(|v| (v != UNSEEN).then_some(v))
        .collect()
}

/// True iff every key can be given a distinct slot among its hashes.
pub fn offline_feasible(inst: &BipartiteInstance) -> Result<bool, OracleError> {
    let edges = inst.edge_count();
    if edges > MAX_EDGES {
        return Err(OracleError::Size {
            edges,
            max: MAX_EDGES,
        });
    }
    if inst.keys.len() > inst.n {
        return Ok(false);
    }
    Ok(maximum_matching(inst.n, &inst.edges)
        .iter()
        .all(Option::is_some))
}

/// Draws uniform coupons in `[0, n)` until `(1 - epsilon) n` distinct values are seen.
pub fn coupon_trial(n: usize, epsilon: f64, seed: u64) -> u64 {
    assert!(epsilon > 0.0 && epsilon <= 1.0, "epsilon must lie in (0, 1]");
    let target = ceil_count((1.0 - epsilon) * n as f64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = vec![false; n];
    let (mut distinct, mut draws) = (0, 0u64);
    while distinct < target {
        let c = rng.random_range(0..n);
        draws += 1;
        if !seen[c] {
            seen[c] = true;
            distinct += 1;
        }
    }
    draws
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailReport {
    pub mean: f64,
    pub mean_bound: f64,
    /// Fitted per-step tail ratio `r` in `P[X >= k] ~ A r^k`.
    pub ratio: f64,
    /// Least-squares intercept `A`.
    pub scale: f64,
    /// Smallest `A` for which `P[X >= k] <= A r^k` holds at every fitted `k`.
    pub envelope_scale: f64,
    /// Largest `k` in the fit (the 99.9th percentile).
    pub k_max: usize,
    pub passed: bool,
}

/// Checks that `samples` look geometric: mean at most `mean_bound`, and a
/// log-linear fit of the tail over `k` up to the 99.9th percentile decays (`r < 1`).
pub fn geometric_tail_check(samples: &Histogram, mean_bound: f64) -> Result<TailReport, OracleError> {
    if samples.count() < MIN_TAIL_SAMPLES {
        return Err(OracleError::InsufficientSamples {
            got: samples.count(),
            need: MIN_TAIL_SAMPLES,
        });
    }
    let mean = samples.mean();
    let k_max = samples.percentile(0.999);
    let points: Vec<(f64, f64)> = (1..=k_max)
        .map(|k| (k as f64, samples.tail(k)))
        .filter(|&(_, p)| p > 0.0)
        .map(|(k, p)| (k, p.ln()))
        .collect();

    let (ratio, scale) = if points.len() < 2 {
        // all mass at or below the first fitted point
        (0.0, 1.0)
    } else {
        let m = points.len() as f64;
        let sx: f64 = points.iter().map(|p| p.0).sum();
        let sy: f64 = points.iter().map(|p| p.1).sum();
        let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
        let slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
        let intercept = (sy - slope * sx) / m;
        (slope.exp(), intercept.exp())
    };
    let envelope_scale = if ratio > 0.0 {
        points
            .iter()
            .map(|&(k, lp)| (lp - k * ratio.ln()).exp())
            .fold(0.0, f64::max)
    } else {
        1.0
    };
    Ok(TailReport {
        mean,
        mean_bound,
        ratio,
        scale,
        envelope_scale,
        k_max,
        passed: mean <= mean_bound && ratio < 1.0,
    })
}
