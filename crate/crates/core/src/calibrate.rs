//! Conformal threshold: static split calibration and the online sliding
//! window.

use std::collections::VecDeque;

use crate::draws::rank_ceil;
use crate::error::{DcpError, Result};

/// Rank `ceil((n + 1)(1 - alpha))` of the conformal quantile among `n`
/// calibration scores (1-based).
pub fn conformal_rank(n: usize, alpha: f64) -> usize {
    rank_ceil((n as f64 + 1.0) * (1.0 - alpha)).max(1)
}

/// The `ceil((N + 1)(1 - alpha))`-th smallest score.
pub fn threshold(scores: &[f64], alpha: f64) -> Result<f64> {
    let mut sorted = scores.to_vec();
    sort_scores(&mut sorted)?;
    threshold_of_sorted(&sorted, alpha)
}

fn sort_scores(scores: &mut [f64]) -> Result<()> {
    if let Some(&bad) = scores.iter().find(|s| !s.is_finite()) {
        return Err(DcpError::NonFiniteScore(bad));
    }
    scores.sort_by(f64::total_cmp);
    Ok(())
}

fn threshold_of_sorted(sorted: &[f64], alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(DcpError::InvalidConfig(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let n = sorted.len();
    let rank = conformal_rank(n, alpha);
    if rank > n {
        return Err(DcpError::InsufficientCalibration { rank, n, alpha });
    }
    Ok(sorted[rank - 1])
}

/// Fixed-capacity FIFO of calibration scores with its current threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationWindow {
    scores: VecDeque<f64>,
    capacity: usize,
    alpha: f64,
    qhat: f64,
}

impl CalibrationWindow {
    /// Starts a window holding exactly `initial_scores`.
    pub fn new(initial_scores: &[f64], alpha: f64) -> Result<Self> {
        let qhat = threshold(initial_scores, alpha)?;
        Ok(Self {
            scores: initial_scores.iter().copied().collect(),
            capacity: initial_scores.len(),
            alpha,
            qhat,
        })
    }

    /// Evicts the oldest score, appends `score` and recomputes the threshold.
    /// A non-finite score is rejected and leaves the window untouched.
    pub fn update(&mut self, score: f64) -> Result<()> {
        if !score.is_finite() {
            return Err(DcpError::NonFiniteScore(score));
        }
        if self.scores.len() == self.capacity {
            self.scores.pop_front();
        }
        self.scores.push_back(score);
        let mut sorted: Vec<f64> = self.scores.iter().copied().collect();
        sorted.sort_by(f64::total_cmp);
        self.qhat = threshold_of_sorted(&sorted, self.alpha)?;
        Ok(())
    }

    pub fn qhat(&self) -> f64 {
        self.qhat
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Scores from oldest to newest.
    pub fn scores(&self) -> impl Iterator<Item = f64> + '_ {
        self.scores.iter().copied()
    }
}

pub fn window_init(initial_scores: &[f64], alpha: f64) -> Result<CalibrationWindow> {
    CalibrationWindow::new(initial_scores, alpha)
}

pub fn window_update(mut window: CalibrationWindow, new_score: f64) -> Result<CalibrationWindow> {
    window.update(new_score)?;
    Ok(window)
}
