//! Interval validity and efficiency metrics, including the modified mean
//! Winkler score that multiplies miss penalties by an exponential
//! undercoverage factor.

use serde::{Deserialize, Serialize};

use crate::error::{DcpError, Result};

/// Target ranges at or below this value are treated as degenerate.
pub const XI_FLOOR: f64 = 1e-12;

/// One evaluated test point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleEval {
    pub y: f64,
    pub low: f64,
    pub up: f64,
    pub covered: bool,
    pub width: f64,
    /// Winkler miss penalty `e_i` (zero when covered).
    pub miss_error: f64,
}

impl SampleEval {
    pub fn new(y: f64, low: f64, up: f64, alpha: f64) -> Self {
        Self {
            y,
            low,
            up,
            covered: low <= y && y <= up,
            width: up - low,
            miss_error: winkler_error(y, low, up, alpha),
        }
    }

    /// Classical Winkler score `width + miss_error`.
    pub fn winkler(&self) -> f64 {
        self.width + self.miss_error
    }
}

/// Miss penalty with slope `2 / alpha` per unit of distance outside the
/// interval. The bounds themselves count as covered.
pub fn winkler_error(y: f64, low: f64, up: f64, alpha: f64) -> f64 {
    if y < low {
        2.0 / alpha * (low - y)
    } else if y > up {
        2.0 / alpha * (y - up)
    } else {
        0.0
    }
}

fn require(samples: &[SampleEval], required: usize) -> Result<()> {
    if samples.len() < required {
        Err(DcpError::EmptySet {
            required,
            got: samples.len(),
        })
    } else {
        Ok(())
    }
}

fn mean(values: impl Iterator<Item = f64>, n: usize) -> f64 {
    values.sum::<f64>() / n as f64
}

/// Prediction interval coverage probability.
pub fn picp(samples: &[SampleEval]) -> Result<f64> {
    require(samples, 1)?;
    Ok(samples.iter().filter(|s| s.covered).count() as f64 / samples.len() as f64)
}

/// Nominal coverage minus a one-sided binomial margin
/// `zeta * sqrt(alpha (1 - alpha) / n)`.
pub fn minimal_acceptable_coverage(n: usize, alpha: f64, zeta: f64) -> f64 {
    (1.0 - alpha) - zeta * ((1.0 - alpha) * alpha / n as f64).sqrt()
}

/// Standard error of the empirical coverage under nominal coverage.
pub fn coverage_standard_error(n: usize, alpha: f64) -> f64 {
    ((1.0 - alpha) * alpha / n as f64).sqrt()
}

/// Range of the ground-truth targets, `max y - min y`.
pub fn target_range(samples: &[SampleEval]) -> f64 {
    let (lo, hi) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s.y), hi.max(s.y)));
    if samples.is_empty() {
        0.0
    } else {
        hi - lo
    }
}

/// Mean interval width divided by the target range `xi`.
pub fn pinaw(samples: &[SampleEval], xi: f64) -> Result<f64> {
    require(samples, 1)?;
    if !(xi > XI_FLOOR) {
        return Err(DcpError::DegenerateRange(xi));
    }
    Ok(mean(samples.iter().map(|s| s.width), samples.len()) / xi)
}

/// Coefficient of variation of the widths (sample standard deviation over
/// the mean).
pub fn cv_width(samples: &[SampleEval]) -> Result<f64> {
    require(samples, 2)?;
    let n = samples.len();
    let mu = mean(samples.iter().map(|s| s.width), n);
    if mu <= 0.0 {
        return Err(DcpError::ZeroMeanWidth);
    }
    let var = samples.iter().map(|s| (s.width - mu).powi(2)).sum::<f64>() / (n - 1) as f64;
    Ok(var.sqrt() / mu)
}

/// `exp(kappa * rho)` with `rho = max(0, c_a - picp) / (1 - picp)`, and
/// `rho = 0` whenever the coverage deficit is zero.
pub fn undercoverage_penalty(picp: f64, c_a: f64, kappa: f64) -> f64 {
    let deficit = (c_a - picp).max(0.0);
    let rho = if deficit == 0.0 {
        0.0
    } else {
        deficit / (1.0 - picp)
    };
    (kappa * rho).exp()
}

/// Aggregate metrics for a set of test intervals. Serialized as a flat JSON
/// object; metrics that are undefined for the sample set are `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub n: usize,
    pub picp: Option<f64>,
    pub c_a: Option<f64>,
    pub pinaw: Option<f64>,
    pub cv_width: Option<f64>,
    pub mean_winkler: Option<f64>,
    pub p_uc: Option<f64>,
    pub mmw: Option<f64>,
    pub xi: Option<f64>,
}

impl EvaluationReport {
    pub fn empty() -> Self {
        Self {
            n: 0,
            picp: None,
            c_a: None,
            pinaw: None,
            cv_width: None,
            mean_winkler: None,
            p_uc: None,
            mmw: None,
            xi: None,
        }
    }
}

/// Metric parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricParams {
    pub alpha: f64,
    pub zeta: f64,
    pub kappa: f64,
    /// Divide widths and miss errors by the target range before averaging
    /// the Winkler scores.
    pub normalize_by_range: bool,
}

impl Default for MetricParams {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            zeta: 1.645,
            kappa: 2.0,
            normalize_by_range: false,
        }
    }
}

/// Modified mean Winkler score and its components. Fails on an empty set, or
/// when range normalization is requested on a degenerate target range.
pub fn mmw(samples: &[SampleEval], params: &MetricParams) -> Result<EvaluationReport> {
    require(samples, 1)?;
    let n = samples.len();
    let coverage = picp(samples)?;
    let c_a = minimal_acceptable_coverage(n, params.alpha, params.zeta);
    let p_uc = undercoverage_penalty(coverage, c_a, params.kappa);

    let xi = target_range(samples);
    let unit = if params.normalize_by_range {
        if !(xi > XI_FLOOR) {
            return Err(DcpError::DegenerateRange(xi));
        }
        xi
    } else {
        1.0
    };
    let mean_winkler = mean(samples.iter().map(|s| (s.width + s.miss_error) / unit), n);
    let mmw = mean(samples.iter().map(|s| (s.width + p_uc * s.miss_error) / unit), n);

    Ok(EvaluationReport {
        n,
        picp: Some(coverage),
        c_a: Some(c_a),
        pinaw: pinaw(samples, xi).ok(),
        cv_width: cv_width(samples).ok(),
        mean_winkler: Some(mean_winkler),
        p_uc: Some(p_uc),
        mmw: Some(mmw),
        xi: Some(xi),
    })
}

/// Like [`mmw`], but an empty sample set yields a report with `n = 0` and
/// null metrics.
pub fn evaluate(samples: &[SampleEval], params: &MetricParams) -> Result<EvaluationReport> {
    if samples.is_empty() {
        Ok(EvaluationReport::empty())
    } else {
        mmw(samples, params)
    }
}
