//! Test oracles: data-generating processes with known predictive
//! distributions, and a brute-force conformal set for cross-checking the
//! root finder.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use statrs::distribution::{ContinuousCDF, Normal as StatNormal};

use crate::draws::DrawVector;
use crate::error::{DcpError, Result};
use crate::scores::ScoreFn;

pub type InputFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type QuantileFn = Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum OracleKind {
    /// Draws are i.i.d. `N(mu(x), sigma(x)^2)`.
    GaussianKnown { mu_fn: InputFn, sigma_fn: InputFn },
    /// Draws are the 99 quantiles at levels 0.01, ..., 0.99.
    QuantileGrid { quantile_fn: QuantileFn },
    /// Fixed draws, independent of the input.
    Empirical { draws: Vec<f64> },
}

impl fmt::Debug for OracleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleKind::GaussianKnown { .. } => f.write_str("GaussianKnown"),
            OracleKind::QuantileGrid { .. } => f.write_str("QuantileGrid"),
            OracleKind::Empirical { draws } => write!(f, "Empirical({} draws)", draws.len()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct OracleDgp {
    pub kind: OracleKind,
    pub m_draws: usize,
}

/// Levels 0.01, 0.02, ..., 0.99.
pub fn quantile_levels() -> Vec<f64> {
    (1..=99).map(|i| f64::from(i) / 100.0).collect()
}

impl OracleDgp {
    pub fn gaussian(mu_fn: InputFn, sigma_fn: InputFn, m_draws: usize) -> Self {
        Self {
            kind: OracleKind::GaussianKnown { mu_fn, sigma_fn },
            m_draws,
        }
    }

    pub fn quantile_grid(quantile_fn: QuantileFn) -> Self {
        Self {
            kind: OracleKind::QuantileGrid { quantile_fn },
            m_draws: 99,
        }
    }

    /// Quantile grid of `N(mu(x), sigma(x)^2)`.
    pub fn gaussian_quantile_grid(mu_fn: InputFn, sigma_fn: InputFn) -> Self {
        let std_normal = StatNormal::new(0.0, 1.0).expect("unit normal");
        Self::quantile_grid(Arc::new(move |x: &[f64], p: f64| {
            mu_fn(x) + sigma_fn(x) * std_normal.inverse_cdf(p)
        }))
    }

    pub fn empirical(draws: Vec<f64>) -> Self {
        let m_draws = draws.len();
        Self {
            kind: OracleKind::Empirical { draws },
            m_draws,
        }
    }

    /// Predictive draws for input `x`.
    pub fn draw<R: Rng + ?Sized>(&self, x: &[f64], rng: &mut R) -> Result<DrawVector> {
        match &self.kind {
            OracleKind::GaussianKnown { mu_fn, sigma_fn } => {
                let mu = mu_fn(x);
                let sigma = sigma_fn(x);
                if !(sigma > 0.0 && sigma.is_finite()) {
                    return Err(DcpError::InvalidConfig(format!(
                        "oracle sigma must be positive and finite, got {sigma}"
                    )));
                }
                if !mu.is_finite() {
                    return Err(DcpError::NonFinite { index: 0, value: mu });
                }
                let normal = Normal::new(mu, sigma).expect("checked parameters");
                DrawVector::new((0..self.m_draws).map(|_| normal.sample(rng)).collect())
            }
            OracleKind::QuantileGrid { quantile_fn } => {
                DrawVector::new(quantile_levels().into_iter().map(|p| quantile_fn(x, p)).collect())
            }
            OracleKind::Empirical { draws } => DrawVector::new(draws.clone()),
        }
    }
}

/// Evenly spaced grid from `lo` to `hi` inclusive with `n` points.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (n - 1) as f64;
            (0..n).map(|i| lo + step * i as f64).collect()
        }
    }
}

/// Smallest and largest grid points whose score is at most `qhat`.
pub fn brute_force_conformal_set(score: &ScoreFn<'_>, qhat: f64, y_grid: &[f64]) -> Result<(f64, f64)> {
    let mut members = y_grid.iter().copied().filter(|&y| score.eval(y) <= qhat);
    let first = members.next().ok_or(DcpError::NoMember)?;
    let last = members.next_back().unwrap_or(first);
    Ok((first, last))
}

/// Maximal runs of consecutive grid points inside the conformal set, as
/// `(first, last)` member pairs in grid order.
pub fn conformal_set_runs(score: &ScoreFn<'_>, qhat: f64, y_grid: &[f64]) -> Vec<(f64, f64)> {
    let mut runs = Vec::new();
    let mut current: Option<(f64, f64)> = None;
    for &y in y_grid {
        if score.eval(y) <= qhat {
            current = Some(current.map_or((y, y), |(first, _)| (first, y)));
        } else if let Some(run) = current.take() {
            runs.push(run);
        }
    }
    runs.extend(current);
    runs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ScoreSpec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn constant(v: f64) -> InputFn {
        Arc::new(move |_: &[f64]| v)
    }

    #[test]
    fn gaussian_draw_moments() {
        let oracle = OracleDgp::gaussian(constant(2.0), constant(0.5), 20_000);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let dv = oracle.draw(&[0.0], &mut rng).unwrap();
        assert_eq!(dv.len(), 20_000);
        assert!((dv.mean() - 2.0).abs() < 0.02);
        assert!((dv.std() - 0.5).abs() < 0.02);
    }

    #[test]
    fn gaussian_rejects_non_positive_sigma() {
        let oracle = OracleDgp::gaussian(constant(0.0), constant(0.0), 10);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(oracle.draw(&[0.0], &mut rng), Err(DcpError::InvalidConfig(_))));
    }

    #[test]
    fn quantile_grid_is_the_normal_quantile_function() {
        let oracle = OracleDgp::gaussian_quantile_grid(constant(1.0), constant(2.0));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let dv = oracle.draw(&[], &mut rng).unwrap();
        assert_eq!(dv.len(), 99);
        assert!((dv.median() - 1.0).abs() < 1e-9);
        // level 0.97, Phi^-1(0.97) = 1.8807936081512506
        let q = dv.draws()[96];
        let expected = 1.0 + 2.0 * 1.880_793_608_151_250_6;
        assert!((q - expected).abs() < 1e-8, "{q}");
    }

    #[test]
    fn levels() {
        let l = quantile_levels();
        assert_eq!(l.len(), 99);
        assert_eq!((l[0], l[49], l[98]), (0.01, 0.5, 0.99));
    }

    #[test]
    fn brute_force_set() {
        let dv = DrawVector::new(vec![1.0, 2.0, 3.0]).unwrap();
        let score = ScoreFn::new(&ScoreSpec::split_cp(), &dv).unwrap();
        let grid = linspace(-10.0, 10.0, 2001);
        let (lo, hi) = brute_force_conformal_set(&score, 1.5, &grid).unwrap();
        assert!((lo - 0.5).abs() < 1e-9 && (hi - 3.5).abs() < 1e-9);
        assert_eq!(brute_force_conformal_set(&score, -1.0, &grid), Err(DcpError::NoMember));
    }

    #[test]
    fn runs_split_at_gaps() {
        let dv = DrawVector::new(vec![-3.0, -3.0, 3.0, 3.0]).unwrap();
        let spec = ScoreSpec { k: 1, ..ScoreSpec::knn(1) };
        let score = ScoreFn::new(&spec, &dv).unwrap();
        let grid = linspace(-5.0, 5.0, 101);
        // unit normalizer: median pairwise distance of {0 x 8, 6 x 8} is 3
        let runs = conformal_set_runs(&score, 0.5 / 3.0 + 1e-12, &grid);
        assert_eq!(runs.len(), 2);
        assert!((runs[0].0 + 3.5).abs() < 1e-9 && (runs[0].1 + 2.5).abs() < 1e-9);
        assert!((runs[1].0 - 2.5).abs() < 1e-9 && (runs[1].1 - 3.5).abs() < 1e-9);
        let hull = brute_force_conformal_set(&score, 0.5 / 3.0 + 1e-12, &grid).unwrap();
        assert_eq!(hull, (runs[0].0, runs[1].1));
    }
}
