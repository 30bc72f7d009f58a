//! Numerical inversion of the conformal set `{y : s(y) <= qhat}`.
//!
//! The search is anchored at the predictive median. A symmetric geometric
//! grid `anchor + {0, ±h0, ±h0·γ, …, ±h0·γ^(depth-1)}` is scanned for changes
//! in membership (`f(y) <= 0` versus `f(y) > 0`), the outermost crossings are
//! refined by bisection, and a retry/failure policy turns every outcome into
//! a well-formed interval:
//!
//! * two crossings give a two-sided interval, more than two give the hull of
//!   the outermost pair;
//! * fewer than two crossings trigger up to `max_retries` rescans with a
//!   smaller initial step and a deeper grid;
//! * a single remaining crossing yields a degenerate interval at that root,
//!   none yields a degenerate interval at the anchor.

use serde::{Deserialize, Serialize};

use crate::draws::midpoint;
use crate::error::{DcpError, Result};
use crate::scores::ScoreFn;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RootFindConfig {
    /// Initial grid step, in units of y.
    pub h0: f64,
    /// Geometric expansion factor of the grid.
    pub gamma: f64,
    /// Grid levels on each side of the anchor.
    pub depth: usize,
    /// Absolute bisection tolerance.
    pub tol: f64,
    pub max_retries: usize,
    pub retry_h0_shrink: f64,
    pub retry_depth_increase: usize,
}

impl Default for RootFindConfig {
    fn default() -> Self {
        Self {
            h0: 1e-6,
            gamma: 1.167,
            depth: 100,
            tol: 1e-10,
            max_retries: 2,
            retry_h0_shrink: 1e-2,
            retry_depth_increase: 50,
        }
    }
}

impl RootFindConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.h0 > 0.0
            && self.h0.is_finite()
            && self.gamma > 1.0
            && self.gamma.is_finite()
            && self.tol > 0.0
            && self.depth >= 1
            && self.retry_h0_shrink > 0.0;
        if ok {
            Ok(())
        } else {
            Err(DcpError::InvalidConfig(format!(
                "root finder requires h0 > 0, gamma > 1, tol > 0, depth >= 1 and a positive retry shrink; got {self:?}"
            )))
        }
    }

    /// Largest distance from the anchor reached by the initial grid.
    pub fn reach(&self) -> f64 {
        self.h0 * self.gamma.powi(self.depth as i32 - 1)
    }
}

/// How the interval was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalStatus {
    TwoSided,
    SingleRoot,
    MedianFallback,
    OutermostOfMany,
}

impl IntervalStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            IntervalStatus::TwoSided => "two_sided",
            IntervalStatus::SingleRoot => "single_root",
            IntervalStatus::MedianFallback => "median_fallback",
            IntervalStatus::OutermostOfMany => "outermost_of_many",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            IntervalStatus::TwoSided,
            IntervalStatus::SingleRoot,
            IntervalStatus::MedianFallback,
            IntervalStatus::OutermostOfMany,
        ]
        .into_iter()
        .find(|status| status.as_str() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionInterval {
    pub low: f64,
    pub up: f64,
    pub status: IntervalStatus,
}

impl PredictionInterval {
    pub fn degenerate(at: f64, status: IntervalStatus) -> Self {
        Self {
            low: at,
            up: at,
            status,
        }
    }

    pub fn width(&self) -> f64 {
        self.up - self.low
    }

    pub fn contains(&self, y: f64) -> bool {
        self.low <= y && y <= self.up
    }
}

/// Diagnostics of the final bracketing pass.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BracketReport {
    /// Grid evaluations summed over all passes.
    pub grid_points_evaluated: usize,
    /// Adjacent (finite) grid pairs whose membership differs.
    pub sign_changes: Vec<(f64, f64)>,
    pub retries_used: usize,
}

/// `{anchor} ∪ {anchor ± h0·γ^j : j < depth}`, ascending.
pub fn build_grid(anchor: f64, cfg: &RootFindConfig) -> Vec<f64> {
    grid_points(anchor, cfg.h0, cfg.gamma, cfg.depth)
}

fn grid_points(anchor: f64, h0: f64, gamma: f64, depth: usize) -> Vec<f64> {
    let offsets: Vec<f64> = (0..depth).map(|j| h0 * gamma.powi(j as i32)).collect();
    let mut grid = Vec::with_capacity(2 * depth + 1);
    grid.extend(offsets.iter().rev().map(|o| anchor - o));
    grid.push(anchor);
    grid.extend(offsets.iter().map(|o| anchor + o));
    // Offsets below the ulp of a large anchor collapse onto it.
    grid.dedup();
    grid
}

fn is_member(v: f64) -> bool {
    v <= 0.0
}

/// Bisection on a sign-change bracket. Returns the midpoint of the final
/// bracket once it is no wider than `tol`, or an exact zero if one is hit.
pub fn bisect<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let (f_lo, f_hi) = (f(lo), f(hi));
    let invalid = || DcpError::InvalidBracket { lo, hi, f_lo, f_hi };
    if !(lo < hi) || !f_lo.is_finite() || !f_hi.is_finite() {
        return Err(invalid());
    }
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    let lo_positive = f_lo > 0.0;
    if lo_positive == (f_hi > 0.0) {
        return Err(invalid());
    }
    let (mut a, mut b) = (lo, hi);
    while b - a > tol {
        let mid = midpoint(a, b);
        if mid <= a || mid >= b {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        // a non-finite value is treated as outside the set
        if (fm > 0.0 || !fm.is_finite()) == lo_positive {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(midpoint(a, b))
}

/// Bracket and refine the outermost roots of `f`, applying the retry and
/// failure policy.
pub fn find_interval<F: Fn(f64) -> f64>(
    f: F,
    anchor: f64,
    cfg: &RootFindConfig,
) -> PredictionInterval {
    find_interval_with_report(f, anchor, cfg).0
}

pub fn find_interval_with_report<F: Fn(f64) -> f64>(
    f: F,
    anchor: f64,
    cfg: &RootFindConfig,
) -> (PredictionInterval, BracketReport) {
    let mut h0 = cfg.h0;
    let mut depth = cfg.depth;
    let mut report = BracketReport::default();
    loop {
        let grid = grid_points(anchor, h0, cfg.gamma, depth);
        report.grid_points_evaluated += grid.len();
        report.sign_changes = sign_changes(&f, &grid);
        if report.sign_changes.len() >= 2 || report.retries_used >= cfg.max_retries {
            break;
        }
        h0 *= cfg.retry_h0_shrink;
        depth += cfg.retry_depth_increase;
        report.retries_used += 1;
    }

    let refine = |(a, b): (f64, f64)| {
        bisect(&f, a, b, cfg.tol).expect("membership change implies a valid bracket")
    };
    let interval = match report.sign_changes.as_slice() {
        [] => PredictionInterval::degenerate(anchor, IntervalStatus::MedianFallback),
        [only] => PredictionInterval::degenerate(refine(*only), IntervalStatus::SingleRoot),
        [first, .., last] => {
            let status = if report.sign_changes.len() == 2 {
                IntervalStatus::TwoSided
            } else {
                IntervalStatus::OutermostOfMany
            };
            PredictionInterval {
                low: refine(*first),
                up: refine(*last),
                status,
            }
        }
    };
    (interval, report)
}

fn sign_changes<F: Fn(f64) -> f64>(f: &F, grid: &[f64]) -> Vec<(f64, f64)> {
    let mut changes = Vec::new();
    let mut prev: Option<(f64, bool)> = None;
    for &y in grid {
        let v = f(y);
        if !v.is_finite() {
            continue;
        }
        let member = is_member(v);
        if let Some((py, pm)) = prev {
            if pm != member {
                changes.push((py, y));
            }
        }
        prev = Some((y, member));
    }
    changes
}

/// Numerical conformal interval for one score evaluator.
pub fn conformal_interval(score: &ScoreFn<'_>, qhat: f64, cfg: &RootFindConfig) -> PredictionInterval {
    find_interval(|y| score.eval(y) - qhat, score.anchor(), cfg)
}

/// Closed-form conformal interval for the residual, Z and interval families.
/// An empty set (possible for negative `qhat`) collapses to the midpoint of
/// the would-be bounds with status `MedianFallback`.
pub fn analytic_interval(score: &ScoreFn<'_>, qhat: f64) -> Result<PredictionInterval> {
    let family = score.spec().family;
    if !family.has_analytic_inverse() {
        return Err(DcpError::UnsupportedFamily(family.to_string()));
    }
    let slack = qhat * score.scale();
    let (low, up) = match score.band() {
        Some(band) => (band.low - slack, band.up + slack),
        None => {
            let mu = score.draws().mean();
            (mu - slack, mu + slack)
        }
    };
    Ok(if low <= up {
        PredictionInterval {
            low,
            up,
            status: IntervalStatus::TwoSided,
        }
    } else {
        PredictionInterval::degenerate(midpoint(up, low), IntervalStatus::MedianFallback)
    })
}
