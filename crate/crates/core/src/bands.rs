//! Base inner bands extracted from a draw vector: the central empirical
//! quantile band and the highest-density interval.

use serde::{Deserialize, Serialize};

use crate::draws::{quantile_of_sorted, rank_ceil, DrawVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaseBand {
    pub low: f64,
    pub up: f64,
}

impl BaseBand {
    pub fn new(low: f64, up: f64) -> Self {
        debug_assert!(low <= up, "band [{low}, {up}] is inverted");
        Self { low, up }
    }

    pub fn width(&self) -> f64 {
        self.up - self.low
    }

    pub fn contains(&self, y: f64) -> bool {
        self.low <= y && y <= self.up
    }
}

/// `[Q(band_alpha / 2), Q(1 - band_alpha / 2)]` with linearly interpolated
/// empirical quantiles.
pub fn quantile_band(dv: &DrawVector, band_alpha: f64) -> BaseBand {
    let sorted = dv.sorted();
    let low = quantile_of_sorted(sorted, band_alpha / 2.0);
    let up = quantile_of_sorted(sorted, 1.0 - band_alpha / 2.0);
    BaseBand::new(low, up.max(low))
}

/// Number of draws an HDI at level `1 - band_alpha` must contain.
pub fn hdi_count(m: usize, band_alpha: f64) -> usize {
    rank_ceil((1.0 - band_alpha) * m as f64).clamp(1, m)
}

/// Narrowest window of `ceil((1 - band_alpha) M)` consecutive order
/// statistics. Ties go to the leftmost window.
pub fn hdi_band(dv: &DrawVector, band_alpha: f64) -> BaseBand {
    let sorted = dv.sorted();
    let m = hdi_count(sorted.len(), band_alpha);
    let mut best = 0;
    let mut best_width = f64::INFINITY;
    for (i, window) in sorted.windows(m).enumerate() {
        let width = window[m - 1] - window[0];
        if width < best_width {
            best = i;
            best_width = width;
        }
    }
    BaseBand::new(sorted[best], sorted[best + m - 1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::draws::summarize_draws;
    use proptest::prelude::*;

    fn dv(xs: &[f64]) -> DrawVector {
        summarize_draws(xs).unwrap()
    }

    /// Scans every start index and keeps the strictly narrower window.
    fn brute_force_hdi(xs: &[f64], m: usize) -> (f64, f64) {
        let mut s = xs.to_vec();
        s.sort_by(f64::total_cmp);
        let mut best: Option<(f64, f64)> = None;
        for i in 0..=s.len() - m {
            let cand = (s[i], s[i + m - 1]);
            match best {
                Some(b) if b.1 - b.0 <= cand.1 - cand.0 => {}
                _ => best = Some(cand),
            }
        }
        best.unwrap()
    }

    #[test]
    fn quantile_band_examples() {
        let grid: Vec<f64> = (0..=100).map(f64::from).collect();
        let b = quantile_band(&dv(&grid), 0.1);
        assert_eq!((b.low, b.up), (5.0, 95.0));

        let b = quantile_band(&dv(&[3.5, 3.5, 3.5]), 0.3);
        assert_eq!((b.low, b.up), (3.5, 3.5));

        let b = quantile_band(&dv(&[0.0, 10.0]), 0.5);
        assert_eq!((b.low, b.up), (2.5, 7.5));
    }

    #[test]
    fn hdi_examples() {
        let b = hdi_band(&dv(&[0.0, 1.0, 2.0, 5.0, 9.0]), 0.4);
        assert_eq!((b.low, b.up), (0.0, 2.0));
        // [0, 2] and [1, 3] tie; leftmost wins
        let b = hdi_band(&dv(&[0.0, 1.0, 2.0, 3.0, 10.0]), 0.4);
        assert_eq!((b.low, b.up), (0.0, 2.0));
        let b = hdi_band(&dv(&[4.0]), 0.1);
        assert_eq!((b.low, b.up), (4.0, 4.0));
    }

    #[test]
    fn hdi_count_is_exact_on_round_products() {
        assert_eq!(hdi_count(5, 0.4), 3);
        assert_eq!(hdi_count(100, 0.1), 90);
        assert_eq!(hdi_count(15, 0.1), 14);
        assert_eq!(hdi_count(1, 0.9), 1);
    }

    proptest! {
        #[test]
        fn hdi_matches_exhaustive_scan(
            xs in prop::collection::vec((-50i32..50).prop_map(|v| v as f64 / 4.0), 1..200),
            band_alpha in 0.01f64..0.99,
        ) {
            let d = dv(&xs);
            let m = hdi_count(xs.len(), band_alpha);
            let b = hdi_band(&d, band_alpha);
            prop_assert_eq!((b.low, b.up), brute_force_hdi(&xs, m));
            let inside = xs.iter().filter(|&&x| b.contains(x)).count();
            prop_assert!(inside >= m);
        }

        #[test]
        fn bands_are_affine_equivariant(
            xs in prop::collection::vec(-10f64..10.0, 1..80),
            a in 0.5f64..4.0, shift in -5f64..5.0, band_alpha in 0.05f64..0.5,
        ) {
            let mapped: Vec<f64> = xs.iter().map(|x| a * x + shift).collect();
            let tol = 1e-9;
            let (q, qm) = (quantile_band(&dv(&xs), band_alpha), quantile_band(&dv(&mapped), band_alpha));
            prop_assert!((qm.low - (a * q.low + shift)).abs() < tol);
            prop_assert!((qm.up - (a * q.up + shift)).abs() < tol);
            let (h, hm) = (hdi_band(&dv(&xs), band_alpha), hdi_band(&dv(&mapped), band_alpha));
            prop_assert!((hm.width() - a * h.width()).abs() < tol);
        }

        #[test]
        fn quantile_band_contains_enough_draws_without_interpolation(
            xs in prop::collection::vec(-10f64..10.0, 2..60),
        ) {
            // band_alpha chosen so that both quantile positions land on order statistics
            let m = xs.len();
            let band_alpha = 2.0 / (m - 1) as f64;
            prop_assume!(band_alpha < 1.0);
            let b = quantile_band(&dv(&xs), band_alpha);
            // positions (m - 1) p are integers up to rounding of p itself
            let inside = xs.iter().filter(|&&x| b.low - 1e-9 <= x && x <= b.up + 1e-9).count();
            prop_assert!(inside >= hdi_count(m, band_alpha));
        }
    }
}
