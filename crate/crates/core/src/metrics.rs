/// Dense histogram over small non-negative integers.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Histogram {
    counts: Vec<u64>,
    total: u64,
    sum: u128,
}

impl Histogram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, value: usize) {
        if value >= self.counts.len() {
            self.counts.resize(value + 1, 0);
        }
        self.counts[value] += 1;
        self.total += 1;
        self.sum += value as u128;
    }

    pub fn count(&self) -> u64 {
        self.total
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn mean(&self) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        self.sum as f64 / self.total as f64
    }

    pub fn max(&self) -> usize {
        self.counts.iter().rposition(|&c| c > 0).unwrap_or(0)
    }

    /// Smallest value `v` with `P[X <= v] >= q`.
    pub fn percentile(&self, q: f64) -> usize {
        if self.total == 0 {
            return 0;
        }
        let target = (q * self.total as f64).ceil().max(1.0) as u64;
        let mut seen = 0;
        for (v, &c) in self.counts.iter().enumerate() {
            seen += c;
            if seen >= target {
                return v;
            }
        }
        self.max()
    }

    /// Empirical `P[X >= k]`.
    pub fn tail(&self, k: usize) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        let above: u64 = self.counts.iter().skip(k).sum();
        above as f64 / self.total as f64
    }

    pub fn merge(&mut self, other: &Histogram) {
        if other.counts.len() > self.counts.len() {
            self.counts.resize(other.counts.len(), 0);
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.total += other.total;
        self.sum += other.sum;
    }
}

/// Scalar counters. Copied into every [`PhaseSnapshot`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counters {
    pub first_time_probes_total: u64,
    pub first_time_probes_core: u64,
    pub first_time_probes_noncore: u64,
    /// Slot inspections made by insertions (first-time or repeated).
    pub insert_probes: u64,
    pub insertions: u64,
    /// Index `t - 1` counts Type `t` moves.
    pub moves_by_type: [u64; 4],
    pub failures: u64,
    pub choice_prime_evaluations: u64,
    /// Core-range probes of an element that was neither core nor entering the core.
    pub lazy_violations: u64,
    /// Core entries forced by a collision between a scanned hash and a core hash.
    pub corrupt_core_entries: u64,
    /// Longest run of consecutive core moves (the quantity the failure cap bounds).
    pub longest_core_run: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSnapshot {
    pub q: usize,
    pub d_max: usize,
    pub live_count: usize,
    pub augmented_count: usize,
    pub core_count: usize,
    pub counters: Counters,
    pub chain_mean: f64,
    pub chain_max: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Metrics {
    pub counters: Counters,
    pub chain_lengths: Histogram,
    pub query_probes: Histogram,
    pub snapshots: Vec<PhaseSnapshot>,
}

impl Metrics {
    pub fn record_query(&mut self, probes: usize) {
        self.query_probes.record(probes);
    }
}
