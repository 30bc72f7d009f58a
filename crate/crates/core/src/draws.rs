//! Draw vectors and the order-statistic helpers shared by every score.

use serde::{Deserialize, Serialize};

use crate::error::{DcpError, Result};

/// The `M` predictive draws for one input together with their cached
/// summary statistics.
///
/// The standard deviation uses the population (divide-by-`M`) convention and
/// the median of an even number of draws is the midpoint of the two central
/// order statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct DrawVector {
    draws: Vec<f64>,
    sorted: Vec<f64>,
    mean: f64,
    std: f64,
    median: f64,
}

impl DrawVector {
    pub fn new(draws: Vec<f64>) -> Result<Self> {
        if draws.is_empty() {
            return Err(DcpError::EmptyDraws);
        }
        check_finite(&draws)?;

        let mut sorted = draws.clone();
        sorted.sort_by(f64::total_cmp);

        let m = draws.len() as f64;
        let mean = mean_of(&sorted);
        // Sum over the sorted copy so that permutations of the input give
        // bit-identical statistics.
        let var = sorted.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / m;
        let median = median_of_sorted(&sorted);

        Ok(Self {
            draws,
            sorted,
            mean,
            std: var.sqrt(),
            median,
        })
    }

    pub fn draws(&self) -> &[f64] {
        &self.draws
    }

    /// Draws in non-decreasing order.
    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn std(&self) -> f64 {
        self.std
    }

    pub fn median(&self) -> f64 {
        self.median
    }

    pub fn min(&self) -> f64 {
        self.sorted[0]
    }

    pub fn max(&self) -> f64 {
        self.sorted[self.sorted.len() - 1]
    }
}

impl TryFrom<Vec<f64>> for DrawVector {
    type Error = DcpError;

    fn try_from(draws: Vec<f64>) -> Result<Self> {
        Self::new(draws)
    }
}

impl From<DrawVector> for Vec<f64> {
    fn from(dv: DrawVector) -> Self {
        dv.draws
    }
}

/// Builds a [`DrawVector`] from a slice of draws.
pub fn summarize_draws(draws: &[f64]) -> Result<DrawVector> {
    DrawVector::new(draws.to_vec())
}

pub(crate) fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(DcpError::NonFinite {
            index,
            value: values[index],
        }),
        None => Ok(()),
    }
}

fn mean_of(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Median of an already sorted, non-empty slice.
pub fn median_of_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    debug_assert!(n > 0);
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        midpoint(sorted[n / 2 - 1], sorted[n / 2])
    }
}

/// Empirical quantile with linear interpolation between the closest order
/// statistics (`h = (n - 1) p`).
pub fn quantile_of_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    debug_assert!(n > 0);
    let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    if lo + 1 >= n {
        return sorted[n - 1];
    }
    let frac = h - lo as f64;
    if frac == 0.0 {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}

pub(crate) fn midpoint(a: f64, b: f64) -> f64 {
    a + (b - a) / 2.0
}

/// `ceil(x)` for rank computations such as `(N + 1)(1 - alpha)` or
/// `(1 - alpha) M`, where `x` is an integer in exact arithmetic but may carry
/// a few ulps of representation error in binary.
pub(crate) fn rank_ceil(x: f64) -> usize {
    let nearest = x.round();
    if (x - nearest).abs() <= 1e-9 * nearest.abs().max(1.0) {
        nearest as usize
    } else {
        x.ceil() as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn three_draws() {
        let dv = summarize_draws(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(dv.mean(), 2.0);
        assert_relative_eq!(dv.std(), (2.0f64 / 3.0).sqrt(), epsilon = 1e-15);
        assert_eq!(dv.median(), 2.0);
    }

    #[test]
    fn single_draw() {
        let dv = summarize_draws(&[5.0]).unwrap();
        assert_eq!((dv.mean(), dv.std(), dv.median()), (5.0, 0.0, 5.0));
    }

    #[test]
    fn even_count_median_is_midpoint() {
        assert_eq!(summarize_draws(&[0.0, 4.0]).unwrap().median(), 2.0);
        assert_eq!(summarize_draws(&[4.0, 0.0, 1.0, 3.0]).unwrap().median(), 2.0);
    }

    #[test]
    fn rejects_empty_and_non_finite() {
        assert_eq!(summarize_draws(&[]), Err(DcpError::EmptyDraws));
        assert!(matches!(
            summarize_draws(&[1.0, f64::NAN]),
            Err(DcpError::NonFinite { index: 1, .. })
        ));
        assert!(matches!(
            summarize_draws(&[f64::INFINITY]),
            Err(DcpError::NonFinite { index: 0, .. })
        ));
    }

    #[test]
    fn serde_round_trip_validates() {
        let dv: DrawVector = serde_json::from_str("[3.0, 1.0, 2.0]").unwrap();
        assert_eq!(dv.sorted(), &[1.0, 2.0, 3.0]);
        assert_eq!(serde_json::to_string(&dv).unwrap(), "[3.0,1.0,2.0]");
        assert!(serde_json::from_str::<DrawVector>("[]").is_err());
    }

    #[test]
    fn interpolated_quantiles() {
        assert_eq!(quantile_of_sorted(&[0.0, 10.0], 0.25), 2.5);
        assert_eq!(quantile_of_sorted(&[0.0, 10.0], 1.0), 10.0);
        assert_eq!(quantile_of_sorted(&[7.0], 0.3), 7.0);
    }

    #[test]
    fn rank_ceil_absorbs_representation_error() {
        assert_eq!(rank_ceil(20.0 * 0.9), 18);
        assert_eq!(rank_ceil(18.000000000000004), 18);
        assert_eq!(rank_ceil(9.9), 10);
        assert_eq!(rank_ceil(450.90000000000003), 451);
    }

    proptest! {
        #[test]
        fn permutation_invariant(mut xs in prop::collection::vec(-1e3f64..1e3, 1..60), seed in any::<u64>()) {
            let a = summarize_draws(&xs).unwrap();
            // deterministic shuffle
            let n = xs.len();
            let mut s = seed;
            for i in (1..n).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                xs.swap(i, (s >> 33) as usize % (i + 1));
            }
            let b = summarize_draws(&xs).unwrap();
            prop_assert_eq!(a.mean(), b.mean());
            prop_assert_eq!(a.std(), b.std());
            prop_assert_eq!(a.median(), b.median());
            prop_assert_eq!(a.sorted(), b.sorted());
        }

        #[test]
        fn affine_equivariant(xs in prop::collection::vec(-100f64..100.0, 1..40), a in 0.1f64..10.0, b in -50f64..50.0) {
            let dv = summarize_draws(&xs).unwrap();
            let mapped: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
            let dm = summarize_draws(&mapped).unwrap();
            prop_assert!((dm.mean() - (a * dv.mean() + b)).abs() <= 1e-9 * (1.0 + dm.mean().abs()));
            prop_assert!((dm.std() - a * dv.std()).abs() <= 1e-9 * (1.0 + dm.std()));
            prop_assert!((dm.median() - (a * dv.median() + b)).abs() <= 1e-9 * (1.0 + dm.median().abs()));
        }
    }
}
