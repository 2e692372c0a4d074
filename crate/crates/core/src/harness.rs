//! Reproducible experiments over the tables, with CSV output.
//!
//! Every experiment is deterministic per seed; only `wall_time_ms` varies
//! between runs. Columns are listed in [`CSV_HEADER`].

use std::collections::HashSet;
use std::fmt;
use std::io;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use thiserror::Error;

use crate::advanced::AdvancedBubbleUp;
use crate::basic::BasicBubbleUp;
use crate::deletion::{DeletionError, TombstoneTable};
use crate::hashing::{mix64, Key};
use crate::metrics::{Histogram, PhaseSnapshot};
use crate::oracle::{coupon_trial, offline_feasible, BipartiteInstance, OracleError};
use crate::params::{CheckLevel, Mode, ParamConfig, ParamError, ParamSet};
use crate::policy::{BubbleUp, InsertOutcome, PolicyConfig, DEFAULT_FAILURE_C1, DEFAULT_FAILURE_C2};
use crate::table::{ChoiceMode, TableError};

const KEY_SALT: u64 = 0xbb67_ae85_84ca_a73b;
const CHURN_SALT: u64 = 0x510e_527f_ade6_82d1;

pub const CSV_HEADER: [&str; 25] = [
    "experiment",
    "seed",
    "phase",
    "d_max",
    "load",
    "live_count",
    "first_time_probes_total",
    "first_time_probes_core",
    "first_time_probes_noncore",
    "moves_type1",
    "moves_type2",
    "moves_type3",
    "moves_type4",
    "chain_mean",
    "chain_max",
    "core_count",
    "query_mean",
    "query_p50",
    "query_p90",
    "query_p99",
    "failures",
    "delta",
    "insert_probe_mean",
    "draws",
    "wall_time_ms",
];

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Deletion(#[from] DeletionError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("csv output: {0}")]
    Io(#[from] io::Error),
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
}

macro_rules! string_enum {
    ($name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq)]
        pub enum $name { $($variant),+ }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(&self) -> &'static str {
                match self { $($name::$variant => $text),+ }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = HarnessError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($text => Ok($name::$variant),)+
                    other => Err(HarnessError::Config(format!(
                        "unknown {} '{other}'", stringify!($name)
                    ))),
                }
            }
        }
    };
}

string_enum!(Experiment {
    Fill => "fill",
    InsertSweep => "insert-sweep",
    QueryDist => "query-dist",
    CoreOccupancy => "core-occupancy",
    CouponCheck => "coupon-check",
    FailureRate => "failure-rate",
    Churn => "churn",
    FeasibilityAudit => "feasibility-audit",
});

string_enum!(Algorithm {
    Basic => "basic",
    Advanced => "advanced",
});

/// Parses `2^-k` (also `2^k`) or a plain decimal.
pub fn parse_epsilon(s: &str) -> Result<f64, HarnessError> {
    let bad = || HarnessError::Config(format!("cannot parse epsilon '{s}'"));
    let v = match s.trim().strip_prefix("2^") {
        Some(exp) => 2f64.powi(exp.parse::<i32>().map_err(|_| bad())?),
        None => s.trim().parse::<f64>().map_err(|_| bad())?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(bad())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub n: usize,
    pub epsilon: f64,
    pub alpha: f64,
    pub d_core: usize,
    pub seed: u64,
    /// Number of seeds: `seed, seed + 1, ...`.
    pub seeds: usize,
    pub algorithm: Algorithm,
    pub choice_mode: ChoiceMode,
    pub enable_deletions: bool,
    pub csv_out: Option<PathBuf>,
    pub failure_c1: f64,
    pub failure_c2: f64,
    pub audit: bool,
    pub check: CheckLevel,
    /// Live load `1 - churn_delta` held during a churn run.
    pub churn_delta: f64,
    pub churn_ops: u64,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        ExperimentConfig {
            experiment,
            n: 1 << 16,
            epsilon: 2f64.powi(-6),
            alpha: 1.0,
            d_core: 5,
            seed: 1,
            seeds: 1,
            algorithm: Algorithm::Advanced,
            choice_mode: ChoiceMode::Stored,
            enable_deletions: false,
            csv_out: None,
            failure_c1: DEFAULT_FAILURE_C1,
            failure_c2: DEFAULT_FAILURE_C2,
            audit: true,
            check: CheckLevel::DeskScale,
            churn_delta: 2f64.powi(-4),
            churn_ops: 1_000_000,
        }
    }

    pub fn params(&self) -> Result<ParamSet, ParamError> {
        let mode = match self.algorithm {
            Algorithm::Basic => Mode::Basic,
            Algorithm::Advanced => Mode::Advanced,
        };
        ParamConfig::new(self.n, self.epsilon, self.alpha, self.d_core, mode)
            .check(self.check)
            .derive()
    }

    fn policy_config(&self) -> PolicyConfig {
        PolicyConfig {
            choice_mode: self.choice_mode,
            failure_c1: self.failure_c1,
            failure_c2: self.failure_c2,
        }
    }

    fn seed_list(&self) -> impl Iterator<Item = u64> {
        let start = self.seed;
        (0..self.seeds as u64).map(move |i| start.wrapping_add(i))
    }
}

/// One CSV row. Columns that do not apply to an experiment stay empty.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsRow {
    pub experiment: String,
    pub seed: u64,
    pub phase: Option<usize>,
    pub d_max: Option<usize>,
    pub load: Option<f64>,
    pub live_count: Option<usize>,
    pub first_time_probes_total: Option<u64>,
    pub first_time_probes_core: Option<u64>,
    pub first_time_probes_noncore: Option<u64>,
    pub moves_by_type: Option<[u64; 4]>,
    pub chain_mean: Option<f64>,
    pub chain_max: Option<usize>,
    pub core_count: Option<usize>,
    pub query_mean: Option<f64>,
    pub query_p50: Option<usize>,
    pub query_p90: Option<usize>,
    pub query_p99: Option<usize>,
    pub failures: u64,
    pub delta: Option<f64>,
    pub insert_probe_mean: Option<f64>,
    pub draws: Option<u64>,
    pub wall_time_ms: f64,
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(T::to_string).unwrap_or_default()
}

impl MetricsRow {
    fn new(experiment: Experiment, seed: u64) -> Self {
        MetricsRow {
            experiment: experiment.to_string(),
            seed,
            ..Default::default()
        }
    }

    fn with_snapshot(mut self, s: &PhaseSnapshot, n: usize) -> Self {
        let c = &s.counters;
        self.phase = Some(s.q);
        self.d_max = Some(s.d_max);
        self.load = Some(s.live_count as f64 / n as f64);
        self.live_count = Some(s.live_count);
        self.first_time_probes_total = Some(c.first_time_probes_total);
        self.first_time_probes_core = Some(c.first_time_probes_core);
        self.first_time_probes_noncore = Some(c.first_time_probes_noncore);
        self.moves_by_type = Some(c.moves_by_type);
        self.chain_mean = Some(s.chain_mean);
        self.chain_max = Some(s.chain_max);
        self.core_count = Some(s.core_count);
        self
    }

    fn with_queries(mut self, h: &Histogram) -> Self {
        self.query_mean = Some(h.mean());
        self.query_p50 = Some(h.percentile(0.5));
        self.query_p90 = Some(h.percentile(0.9));
        self.query_p99 = Some(h.percentile(0.99));
        self
    }

    pub fn record(&self) -> Vec<String> {
        let moves = self.moves_by_type;
        let mv = |t: usize| moves.map(|m| m[t].to_string()).unwrap_or_default();
        vec![
            self.experiment.clone(),
            self.seed.to_string(),
            opt(&self.phase),
            opt(&self.d_max),
            opt(&self.load),
            opt(&self.live_count),
            opt(&self.first_time_probes_total),
            opt(&self.first_time_probes_core),
            opt(&self.first_time_probes_noncore),
            mv(0),
            mv(1),
            mv(2),
            mv(3),
            opt(&self.chain_mean),
            opt(&self.chain_max),
            opt(&self.core_count),
            opt(&self.query_mean),
            opt(&self.query_p50),
            opt(&self.query_p90),
            opt(&self.query_p99),
            self.failures.to_string(),
            opt(&self.delta),
            opt(&self.insert_probe_mean),
            opt(&self.draws),
            format!("{:.3}", self.wall_time_ms),
        ]
    }
}

/// Per-seed churn results.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChurnSummary {
    pub seed: u64,
    pub operations: u64,
    pub lookup_errors: u64,
    pub rebuilds: u64,
    /// Rebuilds that fired at an augmented count other than the threshold.
    pub misplaced_rebuilds: u64,
    pub probes_per_op: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunReport {
    pub rows: Vec<MetricsRow>,
    pub unrecovered_failures: u64,
    pub audit_violations: usize,
    /// Feasibility-audit disagreements (offline infeasible, or table not a witness).
    pub oracle_mismatches: usize,
    pub churn: Vec<ChurnSummary>,
}

impl RunReport {
    /// Process exit code: nonzero iff a run failed without recovery or an audit found a problem.
    pub fn exit_code(&self) -> i32 {
        (self.unrecovered_failures > 0 || self.audit_violations > 0 || self.oracle_mismatches > 0) as i32
    }

    pub fn write_csv<W: io::Write>(&self, out: W) -> Result<(), HarnessError> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(CSV_HEADER)?;
        for row in &self.rows {
            w.write_record(row.record())?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Distinct keys for one run: a bijective mix of a per-seed base and the index.
pub fn run_keys(seed: u64) -> impl Iterator<Item = Key> {
    let base = mix64(seed ^ KEY_SALT);
    (0u64..).map(move |i| mix64(base ^ i))
}

/// Result of filling a table with `target` fresh keys.
#[derive(Debug, Clone, Default)]
pub struct FillResult {
    pub keys: Vec<Key>,
    pub failed: bool,
    /// Per-insertion probe counts, indexed by the number of elements present before the insert.
    pub insert_probes: Vec<u64>,
}

/// Inserts fresh keys until the table holds `target` elements or an insertion fails.
pub fn fill<P: BubbleUp>(p: &mut P, seed: u64, target: usize) -> Result<FillResult, TableError> {
    let mut out = FillResult {
        keys: Vec::with_capacity(target),
        ..Default::default()
    };
    for x in run_keys(seed).take(target) {
        match p.insert_unique(x)? {
            InsertOutcome::Placed { probes, .. } => {
                out.keys.push(x);
                out.insert_probes.push(probes);
            }
            InsertOutcome::Failed { .. } => {
                out.failed = true;
                break;
            }
            InsertOutcome::AlreadyPresent => unreachable!(),
        }
    }
    Ok(out)
}

/// Dyadic load bands `[1 - 2 delta, 1 - delta)` for `delta = 1/2, 1/4, ...` down to `epsilon`.
pub fn dyadic_bands(epsilon: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut delta = 0.5;
    while delta >= epsilon * (1.0 - 1e-12) {
        out.push(delta);
        delta /= 2.0;
    }
    out
}

/// Mean insertion probes per dyadic band, from per-insert probe counts.
pub fn band_means(insert_probes: &[u64], n: usize, bands: &[f64]) -> Vec<Option<f64>> {
    bands
        .iter()
        .map(|&delta| {
            let lo = ((1.0 - 2.0 * delta) * n as f64).ceil().max(0.0) as usize;
            let hi = (((1.0 - delta) * n as f64).ceil() as usize).min(insert_probes.len());
            (hi > lo).then(|| {
                let s: u64 = insert_probes[lo..hi].iter().sum();
                s as f64 / (hi - lo) as f64
            })
        })
        .collect()
}

/// Queries every key once; returns the probe histogram.
pub fn query_all<P: BubbleUp>(p: &P, keys: &[Key]) -> (Histogram, usize) {
    let mut h = Histogram::new();
    let mut missing = 0;
    for &x in keys {
        let q = p.query(x);
        missing += q.slot.is_none() as usize;
        h.record(q.probes);
    }
    (h, missing)
}

pub fn run(config: &ExperimentConfig) -> Result<RunReport, HarnessError> {
    if config.seeds == 0 {
        return Err(HarnessError::Config("seeds must be at least 1".into()));
    }
    let report = match config.experiment {
        Experiment::CouponCheck => coupon_check(config)?,
        _ => {
            let params = config.params()?;
            match config.algorithm {
                Algorithm::Basic => run_tables(config, &params, |seed| {
                    BasicBubbleUp::new(&params, seed, config.policy_config())
                })?,
                Algorithm::Advanced => run_tables(config, &params, |seed| {
                    AdvancedBubbleUp::new(&params, seed, config.policy_config())
                })?,
            }
        }
    };
    if let Some(path) = &config.csv_out {
        report.write_csv(std::fs::File::create(path)?)?;
    }
    Ok(report)
}

fn coupon_check(config: &ExperimentConfig) -> Result<RunReport, HarnessError> {
    if !(config.epsilon > 0.0 && config.epsilon <= 1.0) {
        return Err(HarnessError::Config(format!("epsilon {} not in (0, 1]", config.epsilon)));
    }
    let mut report = RunReport::default();
    for seed in config.seed_list() {
        let start = Instant::now();
        let draws = coupon_trial(config.n, config.epsilon, seed);
        let mut row = MetricsRow::new(config.experiment, seed);
        row.load = Some(1.0 - config.epsilon);
        row.draws = Some(draws);
        row.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
        report.rows.push(row);
    }
    Ok(report)
}

fn run_tables<P: BubbleUp>(
    config: &ExperimentConfig,
    params: &ParamSet,
    make: impl Fn(u64) -> P,
) -> Result<RunReport, HarnessError> {
    let mut report = RunReport::default();
    for seed in config.seed_list() {
        let start = Instant::now();
        let mut table = make(seed);
        let rows_before = report.rows.len();
        match config.experiment {
            Experiment::Churn => churn(config, params, table, seed, &mut report)?,
            Experiment::FeasibilityAudit => {
                let f = fill(&mut table, seed, params.fill_target())?;
                feasibility(config, &table, &f, seed, &mut report)?;
                finish(config, &mut table, &mut report);
            }
            experiment => {
                let f = fill(&mut table, seed, params.fill_target())?;
                if f.failed {
                    report.unrecovered_failures += 1;
                }
                let snapshots = terminal_snapshots(&mut table);
                let mut rows: Vec<MetricsRow> = match experiment {
                    Experiment::InsertSweep => {
                        let bands = dyadic_bands(params.epsilon);
                        band_means(&f.insert_probes, params.n, &bands)
                            .into_iter()
                            .zip(&bands)
                            .map(|(mean, &delta)| {
                                let mut row = MetricsRow::new(experiment, seed);
                                row.delta = Some(delta);
                                row.load = Some(1.0 - delta);
                                row.insert_probe_mean = mean;
                                row
                            })
                            .collect()
                    }
                    Experiment::QueryDist => {
                        let (h, _) = query_all(&table, &f.keys);
                        let last = snapshots.last().expect("terminal snapshot");
                        vec![MetricsRow::new(experiment, seed)
                            .with_snapshot(last, params.n)
                            .with_queries(&h)]
                    }
                    Experiment::FailureRate => {
                        let last = snapshots.last().expect("terminal snapshot");
                        vec![MetricsRow::new(experiment, seed).with_snapshot(last, params.n)]
                    }
                    _ => snapshots
                        .iter()
                        .map(|s| MetricsRow::new(experiment, seed).with_snapshot(s, params.n))
                        .collect(),
                };
                for row in &mut rows {
                    row.failures = f.failed as u64;
                }
                report.rows.extend(rows);
                finish(config, &mut table, &mut report);
            }
        }
        let ms = start.elapsed().as_secs_f64() * 1e3;
        for row in &mut report.rows[rows_before..] {
            row.wall_time_ms = ms;
        }
    }
    Ok(report)
}

/// Snapshot at the end of the run (the end of the last phase reached).
fn terminal_snapshots<P: BubbleUp>(table: &mut P) -> Vec<PhaseSnapshot> {
    let q = table.phase();
    let t = table.table_mut();
    t.snapshot(q);
    t.metrics.snapshots.clone()
}

fn finish<P: BubbleUp>(config: &ExperimentConfig, table: &mut P, report: &mut RunReport) {
    if config.audit {
        report.audit_violations += table.table().audit().len();
    }
}

fn feasibility<P: BubbleUp>(
    config: &ExperimentConfig,
    table: &P,
    f: &crate::harness::FillResult,
    seed: u64,
    report: &mut RunReport,
) -> Result<(), HarnessError> {
    let t = table.table();
    let d = t.params().d;
    let inst = BipartiteInstance::from_oracle(f.keys.clone(), t.oracle(), d);
    let feasible = offline_feasible(&inst)?;
    let mut row = MetricsRow::new(config.experiment, seed);
    row.load = Some(t.load());
    row.live_count = Some(t.live_count());
    row.failures = f.failed as u64;
    if f.failed {
        report.unrecovered_failures += 1;
    } else {
        let assignment: Vec<usize> = f
            .keys
            .iter()
            .map(|&x| table.query(x).slot.unwrap_or(usize::MAX))
            .collect();
        if !feasible || !inst.is_witness(&assignment) {
            report.oracle_mismatches += 1;
        }
    }
    report.rows.push(row);
    Ok(())
}

fn churn<P: BubbleUp>(
    config: &ExperimentConfig,
    params: &ParamSet,
    table: P,
    seed: u64,
    report: &mut RunReport,
) -> Result<(), HarnessError> {
    if !config.enable_deletions {
        return Err(HarnessError::Config("churn needs --enable-deletions".into()));
    }
    let mut t = TombstoneTable::new(table);
    let delta = config.churn_delta;
    if !(delta > t.config().epsilon_prime && delta < 1.0) {
        return Err(HarnessError::Config(format!(
            "churn delta {delta} must exceed epsilon' = {}",
            t.config().epsilon_prime
        )));
    }
    let live_target = crate::params::ceil_count((1.0 - delta) * params.n as f64);
    let mut keys = run_keys(seed);
    let mut live: Vec<Key> = Vec::with_capacity(live_target);
    let mut members: HashSet<Key> = HashSet::with_capacity(live_target);
    let mut deleted: Vec<Key> = Vec::new();
    let mut rng_state = mix64(seed ^ CHURN_SALT);
    let mut lookup_errors = 0u64;

    while live.len() < live_target {
        let x = keys.next().expect("infinite key stream");
        t.insert(x)?;
        live.push(x);
        members.insert(x);
    }

    let mut ops = 0u64;
    while ops < config.churn_ops {
        // delete a uniformly random live key, then insert a fresh one
        rng_state = mix64(rng_state);
        let victim_at = (rng_state % live.len() as u64) as usize;
        let victim = live.swap_remove(victim_at);
        members.remove(&victim);
        t.delete(victim);
        deleted.push(victim);
        let x = keys.next().expect("infinite key stream");
        t.insert(x)?;
        live.push(x);
        members.insert(x);
        ops += 2;

        // spot-check one live and one deleted key
        rng_state = mix64(rng_state);
        let probe_live = live[(rng_state % live.len() as u64) as usize];
        if t.inner().query(probe_live).slot.is_none() {
            lookup_errors += 1;
        }
        let probe_dead = deleted[(rng_state >> 32) as usize % deleted.len()];
        if !members.contains(&probe_dead) && t.inner().query(probe_dead).slot.is_some() {
            lookup_errors += 1;
        }
    }

    // final sweep over every key ever touched
    for &x in &live {
        lookup_errors += t.inner().query(x).slot.is_none() as u64;
    }
    for &x in &deleted {
        lookup_errors += t.inner().query(x).slot.is_some() as u64;
    }

    let threshold = t.rebuild_threshold();
    let misplaced = t.rebuild_loads().iter().filter(|&&c| c != threshold).count() as u64;
    let cost = t.cost();
    let summary = ChurnSummary {
        seed,
        operations: cost.operations,
        lookup_errors,
        rebuilds: t.config().rebuild_count,
        misplaced_rebuilds: misplaced,
        probes_per_op: cost.per_operation(),
        delta,
    };
    report.churn.push(summary);

    let tab = t.inner().table();
    let mut row = MetricsRow::new(config.experiment, seed);
    row.load = Some(tab.load());
    row.live_count = Some(tab.live_count());
    row.delta = Some(delta);
    row.insert_probe_mean = Some(summary.probes_per_op);
    row.failures = lookup_errors;
    report.rows.push(row);
    if config.audit {
        report.audit_violations += tab.audit().len();
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epsilon_forms() {
        assert_eq!(parse_epsilon("2^-6").unwrap(), 0.015625);
        assert_eq!(parse_epsilon("0.25").unwrap(), 0.25);
        assert!(parse_epsilon("2^x").is_err());
        assert!(parse_epsilon("abc").is_err());
    }

    #[test]
    fn names_round_trip() {
        for e in Experiment::ALL {
            assert_eq!(e.as_str().parse::<Experiment>().unwrap(), *e);
        }
        assert!("nope".parse::<Algorithm>().is_err());
    }

    #[test]
    fn bands() {
        let b = dyadic_bands(2f64.powi(-4));
        assert_eq!(b, vec![0.5, 0.25, 0.125, 0.0625]);
        let probes: Vec<u64> = (0..16).collect();
        let m = band_means(&probes, 16, &b);
        // [0, 8), [8, 12), [12, 14), [14, 15)
        assert_eq!(m, vec![Some(3.5), Some(9.5), Some(12.5), Some(14.0)]);
    }

    #[test]
    fn keys_are_distinct() {
        let ks: HashSet<Key> = run_keys(4).take(10_000).collect();
        assert_eq!(ks.len(), 10_000);
    }
}
