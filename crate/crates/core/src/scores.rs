//! Nonconformity scores `s(y, draws)` and the uniform [`ScoreFn`] evaluator
//! consumed by calibration and interval inversion.

use crate::bands::{hdi_band, quantile_band, BaseBand};
use crate::config::{ScoreFamily, ScoreSpec};
use crate::draws::{midpoint, DrawVector};
use crate::error::{DcpError, Result};

/// `|y - mean|`.
pub fn score_residual(y: f64, dv: &DrawVector) -> f64 {
    (y - dv.mean()).abs()
}

/// `|y - mean| / max(std, sigma_floor)`.
pub fn score_z(y: f64, dv: &DrawVector, sigma_floor: f64) -> f64 {
    (y - dv.mean()).abs() / dv.std().max(sigma_floor)
}

/// Signed violation of the base band: negative inside, zero on the boundary,
/// positive outside. The scaled variant divides by the band width.
pub fn score_interval(y: f64, band: &BaseBand, scaled: bool, width_floor: f64) -> f64 {
    let raw = (band.low - y).max(y - band.up);
    if scaled {
        raw / band.width().max(width_floor)
    } else {
        raw
    }
}

/// Median of the `k` smallest distances `|y - draw|`.
pub fn knn_distance(y: f64, dv: &DrawVector, k: usize) -> Result<f64> {
    let sorted = dv.sorted();
    if k == 0 || k > sorted.len() {
        return Err(DcpError::KTooLarge { k, m: sorted.len() });
    }
    // The k nearest draws form a contiguous run of the sorted draws; merge
    // outward from the insertion point of y.
    let mut right = sorted.partition_point(|&d| d < y);
    let mut left = right;
    let mut nearest = Vec::with_capacity(k);
    while nearest.len() < k {
        let take_left = match (left > 0, right < sorted.len()) {
            (true, true) => y - sorted[left - 1] <= sorted[right] - y,
            (true, false) => true,
            (false, _) => false,
        };
        if take_left {
            left -= 1;
            nearest.push(y - sorted[left]);
        } else {
            nearest.push(sorted[right] - y);
            right += 1;
        }
    }
    Ok(if k % 2 == 1 {
        nearest[k / 2]
    } else {
        midpoint(nearest[k / 2 - 1], nearest[k / 2])
    })
}

/// Median of all `M^2` pairwise distances between draws, self-distances
/// included.
pub fn knn_normalizer(dv: &DrawVector) -> f64 {
    let sorted = dv.sorted();
    let m = sorted.len();
    let total = m * m;
    if total == 1 {
        return 0.0;
    }
    let mut pairs = Vec::with_capacity(m * (m - 1) / 2);
    for (i, &a) in sorted.iter().enumerate() {
        pairs.extend(sorted[i + 1..].iter().map(|&b| b - a));
    }

    // Order statistic g of the full multiset: m zeros, then every pair twice.
    let mut order_stat = |g: usize| -> f64 {
        if g < m {
            return 0.0;
        }
        let t = (g - m) / 2;
        *pairs.select_nth_unstable_by(t, f64::total_cmp).1
    };
    if total % 2 == 1 {
        order_stat(total / 2)
    } else {
        let lo = order_stat(total / 2 - 1);
        let hi = order_stat(total / 2);
        midpoint(lo, hi)
    }
}

/// `knn_distance / max(knn_normalizer, width_floor)`.
pub fn score_knn(y: f64, dv: &DrawVector, k: usize, width_floor: f64) -> Result<f64> {
    Ok(knn_distance(y, dv, k)? / knn_normalizer(dv).max(width_floor))
}

/// Score evaluator bound to one draw vector. Bands and normalizers are
/// computed once at construction; [`ScoreFn::eval`] is pure.
#[derive(Debug, Clone)]
pub struct ScoreFn<'a> {
    spec: ScoreSpec,
    dv: &'a DrawVector,
    band: Option<BaseBand>,
    /// Divisor applied to the raw score (1 for unscaled families).
    scale: f64,
}

impl<'a> ScoreFn<'a> {
    pub fn new(spec: &ScoreSpec, dv: &'a DrawVector) -> Result<Self> {
        let (band, scale) = match spec.family {
            ScoreFamily::Residual => (None, 1.0),
            ScoreFamily::Z => (None, dv.std().max(spec.sigma_floor)),
            ScoreFamily::IntervalQuantile | ScoreFamily::IntervalHdi => {
                let band = if spec.family == ScoreFamily::IntervalQuantile {
                    quantile_band(dv, spec.band_alpha)
                } else {
                    hdi_band(dv, spec.band_alpha)
                };
                let scale = if spec.scaled {
                    band.width().max(spec.width_floor)
                } else {
                    1.0
                };
                (Some(band), scale)
            }
            ScoreFamily::Knn => {
                if spec.k == 0 || spec.k > dv.len() {
                    return Err(DcpError::KTooLarge {
                        k: spec.k,
                        m: dv.len(),
                    });
                }
                (None, knn_normalizer(dv).max(spec.width_floor))
            }
        };
        Ok(Self {
            spec: spec.clone(),
            dv,
            band,
            scale,
        })
    }

    pub fn eval(&self, y: f64) -> f64 {
        let raw = match self.spec.family {
            ScoreFamily::Residual | ScoreFamily::Z => (y - self.dv.mean()).abs(),
            ScoreFamily::IntervalQuantile | ScoreFamily::IntervalHdi => {
                let band = self.band.as_ref().expect("interval family carries a band");
                (band.low - y).max(y - band.up)
            }
            ScoreFamily::Knn => {
                knn_distance(y, self.dv, self.spec.k).expect("k checked at construction")
            }
        };
        if self.scale == 1.0 {
            raw
        } else {
            raw / self.scale
        }
    }

    pub fn spec(&self) -> &ScoreSpec {
        &self.spec
    }

    pub fn draws(&self) -> &DrawVector {
        self.dv
    }

    /// Base band, for the interval families.
    pub fn band(&self) -> Option<BaseBand> {
        self.band
    }

    /// The positive, y-independent divisor applied to the raw score.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Root-finder anchor: the predictive median.
    pub fn anchor(&self) -> f64 {
        self.dv.median()
    }
}

/// Builds the evaluator for `spec` on `dv`.
pub fn make_score_fn<'a>(spec: &ScoreSpec, dv: &'a DrawVector) -> Result<ScoreFn<'a>> {
    ScoreFn::new(spec, dv)
}
