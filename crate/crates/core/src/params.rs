//! Parameter derivation for the bubble-up policies.
//!
//! Everything here is a pure function of `(n, epsilon, alpha, d_core, mode)`.
//! The advanced policy needs three inequalities between `alpha`, `d_core` and
//! `epsilon_core`; [`validate`] evaluates them and reports the margin of each.

use std::fmt;

use thiserror::Error;

/// Largest supported hash count. Per-element probe history is a `u64` bitmap.
pub const MAX_HASHES: usize = 64;

/// Default multiplier applied to `e^(-d_core)` when choosing `epsilon_core`.
pub const DEFAULT_CORE_SLACK: f64 = 1.0;

/// Default safety factor for the random-walk threshold advisory check.
pub const DEFAULT_THRESHOLD_MARGIN: f64 = 1.1;

/// Number of `j` values past `d_core` at which the decreasing-ratio inequality is sampled.
const RATIO_SCAN_WIDTH: usize = 64;

/// Slack for ceilings of quantities that are integers up to rounding (`ln e^-7 + 1`).
const CEIL_TOLERANCE: f64 = 1e-9;

/// Tabulated random-walk load thresholds `c*_d` for `d`-ary cuckoo hashing.
const RANDOM_WALK_THRESHOLDS: [(usize, f64); 4] = [(3, 0.917), (4, 0.976), (5, 0.992), (6, 0.997)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Basic,
    Advanced,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Basic => f.write_str("basic"),
            Mode::Advanced => f.write_str("advanced"),
        }
    }
}

/// How strictly [`ParamConfig::derive`] rejects parameter choices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CheckLevel {
    /// Enforce the epsilon range and, in advanced mode, the parameter inequalities.
    Strict,
    /// Enforce the parameter inequalities only. Desk-scale tables sit outside the asymptotic epsilon range.
    #[default]
    DeskScale,
    /// Enforce only what the algorithms structurally need.
    Off,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("epsilon {epsilon} outside ({low}, {high}]")]
    Range { epsilon: f64, low: f64, high: f64 },
    #[error("parameter constraints violated: {0:?}")]
    Constraint(Vec<ConstraintCheck>),
}

/// The inequality a [`ConstraintCheck`] reports on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Inequality {
    /// `j / e^(j - alpha) <= alpha / 8` for every `j >= d_core`.
    DecreasingRatio,
    /// `ln(1/epsilon_core) + alpha/8 > d_core * (1 + epsilon_core)`.
    CoreSlack,
    /// `epsilon_core < 1/2`.
    CoreFreeFraction,
    /// `epsilon_core >= margin * (1 - c*_{d_core})`. Advisory only.
    RandomWalkThreshold,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintCheck {
    pub inequality: Inequality,
    /// Signed slack; non-negative (positive for strict inequalities) means the inequality holds.
    pub margin: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet {
    pub n: usize,
    pub epsilon: f64,
    pub alpha: f64,
    /// Total number of hash functions.
    pub d: usize,
    pub d_core: usize,
    pub epsilon_core: f64,
    /// Phase offset; `d_max = gamma + q * d_core`. Zero in basic mode.
    pub gamma: usize,
    pub mode: Mode,
}

impl ParamSet {
    /// Index of the last phase, where `d_max == d`. Always 1 in basic mode.
    pub fn final_phase(&self) -> usize {
        match self.mode {
            Mode::Basic => 1,
            Mode::Advanced => (self.d - self.gamma) / self.d_core,
        }
    }

    /// `d_max` during phase `q`.
    pub fn d_max_for_phase(&self, q: usize) -> usize {
        match self.mode {
            Mode::Basic => self.d,
            Mode::Advanced => self.gamma + q * self.d_core,
        }
    }

    /// Load at which phase `q` ends: `1 - e^(-d_max + alpha)`.
    pub fn phase_end_load(&self, q: usize) -> f64 {
        1.0 - (-(self.d_max_for_phase(q) as f64) + self.alpha).exp()
    }

    /// Number of elements `ceil((1 - epsilon) n)` a full fill inserts.
    pub fn fill_target(&self) -> usize {
        ceil_count((1.0 - self.epsilon) * self.n as f64)
    }
}

/// Builder-style parameter request. `derive_params` is the strict shorthand.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamConfig {
    pub n: usize,
    pub epsilon: f64,
    pub alpha: f64,
    pub d_core: usize,
    pub mode: Mode,
    pub core_slack: f64,
    pub threshold_margin: f64,
    pub check: CheckLevel,
}

impl ParamConfig {
    pub fn new(n: usize, epsilon: f64, alpha: f64, d_core: usize, mode: Mode) -> Self {
        ParamConfig {
            n,
            epsilon,
            alpha,
            d_core,
            mode,
            core_slack: DEFAULT_CORE_SLACK,
            threshold_margin: DEFAULT_THRESHOLD_MARGIN,
            check: CheckLevel::default(),
        }
    }

    pub fn check(mut self, level: CheckLevel) -> Self {
        self.check = level;
        self
    }

    pub fn core_slack(mut self, k: f64) -> Self {
        self.core_slack = k;
        self
    }

    pub fn derive(&self) -> Result<ParamSet, ParamError> {
        let ParamConfig { n, epsilon, alpha, .. } = *self;
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(ParamError::Input(format!("epsilon {epsilon} not in (0, 1)")));
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(ParamError::Input(format!("alpha {alpha} not in (0, 1]")));
        }
        if n < 16 {
            return Err(ParamError::Input(format!("n = {n} is below 16")));
        }
        let ln_inv = -epsilon.ln();

        let p = match self.mode {
            Mode::Basic => {
                let d = ceil_tol(3.0 * ln_inv) + 1;
                ParamSet {
                    n,
                    epsilon,
                    alpha,
                    d,
                    d_core: 2,
                    // the core of the basic policy is a 2-ary table run below load 1/2
                    epsilon_core: 0.51,
                    gamma: 0,
                    mode: Mode::Basic,
                }
            }
            Mode::Advanced => {
                let d_core = self.d_core;
                if d_core < 2 {
                    return Err(ParamError::Input(format!("d_core = {d_core} is below 2")));
                }
                let d = ceil_tol(ln_inv + alpha);
                ParamSet {
                    n,
                    epsilon,
                    alpha,
                    d,
                    d_core,
                    epsilon_core: self.core_slack * (-(d_core as f64)).exp(),
                    gamma: d % d_core,
                    mode: Mode::Advanced,
                }
            }
        };

        if p.d > MAX_HASHES {
            return Err(ParamError::Input(format!("d = {} exceeds {MAX_HASHES}", p.d)));
        }
        if p.d < p.d_core + 1 && p.mode == Mode::Basic {
            return Err(ParamError::Input(format!("basic mode needs d >= 3, got {}", p.d)));
        }
        if p.d < p.d_core {
            return Err(ParamError::Input(format!(
                "d = {} is smaller than d_core = {}; no phase fits",
                p.d, p.d_core
            )));
        }

        if self.check == CheckLevel::Strict {
            let (low, high) = epsilon_range(&p);
            if !(epsilon >= low && epsilon <= high) {
                return Err(ParamError::Range { epsilon, low, high });
            }
        }
        if self.check != CheckLevel::Off && p.mode == Mode::Advanced {
            let checks = validate(&p);
            if checks.iter().any(|c| !c.passed) {
                return Err(ParamError::Constraint(checks));
            }
        }
        Ok(p)
    }
}

/// Strict derivation: the epsilon range and all parameter inequalities are enforced.
pub fn derive_params(
    n: usize,
    epsilon: f64,
    alpha: f64,
    d_core: usize,
    mode: Mode,
) -> Result<ParamSet, ParamError> {
    ParamConfig::new(n, epsilon, alpha, d_core, mode)
        .check(CheckLevel::Strict)
        .derive()
}

/// Admissible epsilon interval `[n^(-1/4), e^(-d_core)]` (upper bound 1 in basic mode).
pub fn epsilon_range(p: &ParamSet) -> (f64, f64) {
    let low = (p.n as f64).powf(-0.25);
    let high = match p.mode {
        Mode::Basic => 1.0,
        Mode::Advanced => (-(p.d_core as f64)).exp(),
    };
    (low, high)
}

/// Evaluates the decreasing-ratio, core-slack and core-free-fraction inequalities.
///
/// `j / e^(j - alpha)` has derivative `(1 - j) e^(alpha - j)`, negative for `j > 1`,
/// so the sampled window `[d_core, d_core + 64]` is dominated by its first term;
/// the reported margin is the minimum over the window.
pub fn validate(p: &ParamSet) -> Vec<ConstraintCheck> {
    let alpha = p.alpha;
    let ratio_margin = (p.d_core..=p.d_core + RATIO_SCAN_WIDTH)
        .map(|j| alpha / 8.0 - j as f64 / (j as f64 - alpha).exp())
        .fold(f64::INFINITY, f64::min);

    let ec = p.epsilon_core;
    let slack_margin = (1.0 / ec).ln() + alpha / 8.0 - p.d_core as f64 * (1.0 + ec);
    let free_margin = 0.5 - ec;

    vec![
        ConstraintCheck {
            inequality: Inequality::DecreasingRatio,
            margin: ratio_margin,
            passed: ratio_margin >= 0.0,
        },
        ConstraintCheck {
            inequality: Inequality::CoreSlack,
            margin: slack_margin,
            passed: slack_margin > 0.0,
        },
        ConstraintCheck {
            inequality: Inequality::CoreFreeFraction,
            margin: free_margin,
            passed: free_margin > 0.0,
        },
    ]
}

/// Tabulated random-walk threshold `c*_d`, if known.
pub fn random_walk_threshold(d: usize) -> Option<f64> {
    RANDOM_WALK_THRESHOLDS
        .iter()
        .find(|(k, _)| *k == d)
        .map(|&(_, c)| c)
}

/// Advisory: does the core table stay below the tabulated random-walk threshold with `margin`?
pub fn threshold_check(p: &ParamSet, margin: f64) -> Option<ConstraintCheck> {
    let c = random_walk_threshold(p.d_core)?;
    let m = p.epsilon_core - margin * (1.0 - c);
    Some(ConstraintCheck {
        inequality: Inequality::RandomWalkThreshold,
        margin: m,
        passed: m >= 0.0,
    })
}

pub(crate) fn ceil_tol(x: f64) -> usize {
    (x - CEIL_TOLERANCE).ceil().max(0.0) as usize
}

/// `ceil(x)` for a count computed in floating point.
pub fn ceil_count(x: f64) -> usize {
    ceil_tol(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    const N20: usize = 1 << 20;

    fn check(checks: &[ConstraintCheck], which: Inequality) -> ConstraintCheck {
        *checks.iter().find(|c| c.inequality == which).unwrap()
    }

    #[test]
    fn advanced_d_and_gamma() {
        let p = derive_params(N20, (-8.0f64).exp(), 0.5, 5, Mode::Advanced).unwrap_err();
        // e^-8 is below n^(-1/4) = 2^-5, so the strict path rejects it
        assert!(matches!(p, ParamError::Range { .. }));

        let p = ParamConfig::new(N20, (-8.0f64).exp(), 0.5, 5, Mode::Advanced)
            .derive()
            .unwrap();
        assert_eq!(p.d, 9);
        assert_eq!(p.gamma, 4);
        assert_eq!(p.final_phase(), 1);
    }

    #[test]
    fn basic_d() {
        let p = ParamConfig::new(N20, (-4.0f64).exp(), 1.0, 5, Mode::Basic)
            .derive()
            .unwrap();
        assert_eq!(p.d, 13);
        assert_eq!(p.d_core, 2);
    }

    #[test]
    fn e_minus_seven_validates() {
        let p = ParamConfig::new(N20, (-7.0f64).exp(), 1.0, 5, Mode::Advanced)
            .derive()
            .unwrap();
        assert_eq!(p.d, 8);
        assert_eq!(p.gamma, 3);
        assert!(validate(&p).iter().all(|c| c.passed));
    }

    #[test]
    fn ratio_inequality_values() {
        let mut p = ParamConfig::new(N20, 0.001, 1.0, 5, Mode::Advanced)
            .derive()
            .unwrap();
        let c = check(&validate(&p), Inequality::DecreasingRatio);
        assert!(c.passed);
        assert!((c.margin - (0.125 - 0.091_578_194_443_670_91)).abs() < 1e-12);

        p.d_core = 4;
        let c = check(&validate(&p), Inequality::DecreasingRatio);
        assert!(!c.passed);
        assert!((c.margin - (0.125 - 0.199_148_273_471_455_78)).abs() < 1e-12);
    }

    #[test]
    fn large_core_free_fraction_fails() {
        let mut p = ParamConfig::new(N20, 0.001, 1.0, 5, Mode::Advanced)
            .derive()
            .unwrap();
        p.epsilon_core = 0.6;
        assert!(!check(&validate(&p), Inequality::CoreFreeFraction).passed);
    }

    #[test]
    fn spec_slack_default_breaks_core_slack() {
        let err = ParamConfig::new(N20, 0.001, 1.0, 5, Mode::Advanced)
            .core_slack(1.25)
            .derive()
            .unwrap_err();
        match err {
            ParamError::Constraint(checks) => {
                assert!(!check(&checks, Inequality::CoreSlack).passed)
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn threshold_advisory() {
        let p = ParamConfig::new(N20, 0.001, 1.0, 5, Mode::Advanced)
            .derive()
            .unwrap();
        let c = threshold_check(&p, DEFAULT_THRESHOLD_MARGIN).unwrap();
        assert!(!c.passed);
        assert!(threshold_check(&p, 0.5).unwrap().passed);
        assert!(random_walk_threshold(7).is_none());
    }

    #[test]
    fn strict_range_bounds() {
        // 2^-6 > e^-5
        let err = derive_params(1 << 16, 2f64.powi(-6), 1.0, 5, Mode::Advanced).unwrap_err();
        assert!(matches!(err, ParamError::Range { .. }));
        assert!(derive_params(1 << 16, 0.005, 1.0, 5, Mode::Advanced).is_err());
        // n^(-1/4) = 1/8 at n = 2^12
        assert!(derive_params(1 << 12, 0.006, 1.0, 5, Mode::Advanced).is_err());
        assert!(derive_params(1 << 40, 0.006, 1.0, 5, Mode::Advanced).is_ok());
    }

    #[test]
    fn bad_inputs() {
        assert!(derive_params(N20, 0.0, 1.0, 5, Mode::Advanced).is_err());
        assert!(derive_params(N20, 1.0, 1.0, 5, Mode::Advanced).is_err());
        assert!(derive_params(N20, 0.001, 1.5, 5, Mode::Advanced).is_err());
        assert!(derive_params(8, 0.001, 1.0, 5, Mode::Advanced).is_err());
        assert!(derive_params(N20, 0.001, 1.0, 1, Mode::Advanced).is_err());
        // d = 4 < d_core = 5
        let err = ParamConfig::new(N20, 0.0625, 1.0, 5, Mode::Advanced)
            .check(CheckLevel::Off)
            .derive()
            .unwrap_err();
        assert!(matches!(err, ParamError::Input(_)));
    }

    #[test]
    fn phase_schedule() {
        let p = ParamConfig::new(N20, (-13.0f64).exp(), 1.0, 5, Mode::Advanced)
            .derive()
            .unwrap();
        assert_eq!(p.d, 14);
        assert_eq!(p.gamma, 4);
        assert_eq!(p.final_phase(), 2);
        assert_eq!(p.d_max_for_phase(1), 9);
        assert_eq!(p.d_max_for_phase(2), 14);
        assert!((p.phase_end_load(1) - (1.0 - (-8.0f64).exp())).abs() < 1e-15);
    }
}
