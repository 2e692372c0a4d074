use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use bubble_cuckoo::harness::{self, Algorithm, Experiment, ExperimentConfig};
use bubble_cuckoo::params::CheckLevel;
use bubble_cuckoo::policy::{DEFAULT_FAILURE_C1, DEFAULT_FAILURE_C2};
use bubble_cuckoo::table::ChoiceMode;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ExperimentArg {
    Fill,
    InsertSweep,
    QueryDist,
    CoreOccupancy,
    CouponCheck,
    FailureRate,
    Churn,
    FeasibilityAudit,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    Basic,
    Advanced,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ChoiceModeArg {
    Stored,
    Recomputed,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ChecksArg {
    Strict,
    Desk,
    Off,
}

/// Runs bubble-up cuckoo hashing experiments and writes one CSV row per
/// phase end, load band or seed.
#[derive(Debug, Parser)]
#[command(version)]
struct Args {
    #[arg(long, value_enum)]
    experiment: ExperimentArg,
    #[arg(long, default_value_t = 1 << 16)]
    n: usize,
    /// `2^-k` or a decimal.
    #[arg(long, default_value = "2^-6")]
    epsilon: String,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 5)]
    d_core: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    seeds: usize,
    #[arg(long, value_enum, default_value = "advanced")]
    algorithm: AlgorithmArg,
    #[arg(long, value_enum, default_value = "stored")]
    choice_mode: ChoiceModeArg,
    #[arg(long)]
    enable_deletions: bool,
    /// Defaults to stdout.
    #[arg(long)]
    csv_out: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_FAILURE_C1)]
    failure_c1: f64,
    #[arg(long, default_value_t = DEFAULT_FAILURE_C2)]
    failure_c2: f64,
    #[arg(long)]
    no_audit: bool,
    /// Parameter checks: `strict` also enforces the epsilon range.
    #[arg(long, value_enum, default_value = "desk")]
    checks: ChecksArg,
    /// Churn holds live load at `1 - churn_delta`.
    #[arg(long, default_value = "2^-4")]
    churn_delta: String,
    #[arg(long, default_value_t = 1_000_000)]
    churn_ops: u64,
}

fn config(args: &Args) -> Result<ExperimentConfig, harness::HarnessError> {
    let experiment = match args.experiment {
        ExperimentArg::Fill => Experiment::Fill,
        ExperimentArg::InsertSweep => Experiment::InsertSweep,
        ExperimentArg::QueryDist => Experiment::QueryDist,
        ExperimentArg::CoreOccupancy => Experiment::CoreOccupancy,
        ExperimentArg::CouponCheck => Experiment::CouponCheck,
        ExperimentArg::FailureRate => Experiment::FailureRate,
        ExperimentArg::Churn => Experiment::Churn,
        ExperimentArg::FeasibilityAudit => Experiment::FeasibilityAudit,
    };
    let mut c = ExperimentConfig::new(experiment);
    c.n = args.n;
    c.epsilon = harness::parse_epsilon(&args.epsilon)?;
    c.alpha = args.alpha;
    c.d_core = args.d_core;
    c.seed = args.seed;
    c.seeds = args.seeds;
    c.algorithm = match args.algorithm {
        AlgorithmArg::Basic => Algorithm::Basic,
        AlgorithmArg::Advanced => Algorithm::Advanced,
    };
    c.choice_mode = match args.choice_mode {
        ChoiceModeArg::Stored => ChoiceMode::Stored,
        ChoiceModeArg::Recomputed => ChoiceMode::Recomputed,
    };
    c.enable_deletions = args.enable_deletions;
    c.csv_out = args.csv_out.clone();
    c.failure_c1 = args.failure_c1;
    c.failure_c2 = args.failure_c2;
    c.audit = !args.no_audit;
    c.check = match args.checks {
        ChecksArg::Strict => CheckLevel::Strict,
        ChecksArg::Desk => CheckLevel::DeskScale,
        ChecksArg::Off => CheckLevel::Off,
    };
    c.churn_delta = harness::parse_epsilon(&args.churn_delta)?;
    c.churn_ops = args.churn_ops;
    Ok(c)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = config(&args).and_then(|c| {
        let report = harness::run(&c)?;
        if c.csv_out.is_none() {
            report.write_csv(std::io::stdout().lock())?;
        }
        Ok(report)
    });
    match result {
        Ok(report) => {
            if report.unrecovered_failures > 0 {
                eprintln!("{} run(s) failed", report.unrecovered_failures);
            }
            if report.audit_violations > 0 || report.oracle_mismatches > 0 {
                eprintln!(
                    "audit: {} violation(s), {} oracle mismatch(es)",
                    report.audit_violations, report.oracle_mismatches
                );
            }
            ExitCode::from(report.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
