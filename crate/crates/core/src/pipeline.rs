//! End-to-end run: score the calibration set, derive the threshold, invert
//! the conformal set for every test record and evaluate the intervals.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibrate::{threshold, CalibrationWindow};
use crate::config::Config;
use crate::draws::DrawVector;
use crate::error::{DcpError, Result};
use crate::metrics::{evaluate, EvaluationReport, MetricParams, SampleEval};
use crate::rootfind::{analytic_interval, conformal_interval, PredictionInterval};
use crate::scores::ScoreFn;

/// One forecast: predictive draws plus the realized target, when known.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrawRecord {
    pub id: String,
    #[serde(default)]
    pub y: Option<f64>,
    pub draws: Vec<f64>,
}

impl DrawRecord {
    pub fn new(id: impl Into<String>, y: Option<f64>, draws: Vec<f64>) -> Self {
        Self {
            id: id.into(),
            y,
            draws,
        }
    }
}

/// Outcome for one test record. `interval` is `None` when the record could
/// not be scored; `error` then holds the reason.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalRow {
    pub id: String,
    pub y: Option<f64>,
    pub interval: Option<PredictionInterval>,
    /// Threshold used for this record.
    pub qhat: f64,
    pub error: Option<String>,
}

impl IntervalRow {
    /// Evaluation sample, for rows with both a target and an interval.
    pub fn sample(&self, alpha: f64) -> Option<SampleEval> {
        match (self.y, &self.interval) {
            (Some(y), Some(iv)) => Some(SampleEval::new(y, iv.low, iv.up, alpha)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub rows: Vec<IntervalRow>,
    /// Threshold before the first test record.
    pub initial_qhat: f64,
    pub report: EvaluationReport,
}

impl RunOutput {
    pub fn qhat_trace(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.qhat).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Inversion {
    /// Grid bracketing plus bisection, valid for every family.
    #[default]
    Numeric,
    /// Closed form where the family has one, numeric otherwise.
    Analytic,
}

impl Config {
    pub fn metric_params(&self) -> MetricParams {
        MetricParams {
            alpha: self.alpha,
            zeta: self.zeta,
            kappa: self.kappa,
            normalize_by_range: self.normalize_by_range,
        }
    }
}

/// Nonconformity scores of labelled records. Any invalid record is an error.
pub fn calibration_scores(records: &[DrawRecord], cfg: &Config) -> Result<Vec<f64>> {
    records
        .par_iter()
        .map(|rec| {
            let y = rec.y.ok_or_else(|| {
                DcpError::InvalidConfig(format!("calibration record {:?} has no target", rec.id))
            })?;
            let dv = DrawVector::new(rec.draws.clone())?;
            let score = ScoreFn::new(&cfg.score, &dv)?.eval(y);
            if score.is_finite() {
                Ok(score)
            } else {
                Err(DcpError::NonFiniteScore(score))
            }
        })
        .collect()
}

fn predict(rec: &DrawRecord, qhat: f64, cfg: &Config, inversion: Inversion) -> (IntervalRow, Option<f64>) {
    let mut row = IntervalRow {
        id: rec.id.clone(),
        y: rec.y,
        interval: None,
        qhat,
        error: None,
    };
    let scored = DrawVector::new(rec.draws.clone()).and_then(|dv| {
        let score = ScoreFn::new(&cfg.score, &dv)?;
        let interval = match inversion {
            Inversion::Analytic if cfg.score.family.has_analytic_inverse() => analytic_interval(&score, qhat)?,
            _ => conformal_interval(&score, qhat, &cfg.root),
        };
        Ok((interval, rec.y.map(|y| score.eval(y))))
    });
    match scored {
        Ok((interval, realized)) => {
            row.interval = Some(interval);
            (row, realized)
        }
        Err(e) => {
            row.error = Some(e.to_string());
            (row, None)
        }
    }
}

/// Calibrates on `calib` and produces one row per `test` record, in order.
///
/// Static mode scores test records in parallel with a fixed threshold. Online
/// mode processes them sequentially and, after each record with a known
/// target, pushes its score into the sliding window.
pub fn run(calib: &[DrawRecord], test: &[DrawRecord], cfg: &Config, inversion: Inversion) -> Result<RunOutput> {
    cfg.validate()?;
    let mut scores = calibration_scores(calib, cfg)?;
    if let Some(len) = cfg.window_len {
        if len < scores.len() {
            scores.drain(..scores.len() - len);
        }
    }

    let (initial_qhat, rows): (f64, Vec<IntervalRow>) = if cfg.online {
        let mut window = CalibrationWindow::new(&scores, cfg.alpha)?;
        let initial = window.qhat();
        let rows = test
            .iter()
            .map(|rec| {
                let (mut row, realized) = predict(rec, window.qhat(), cfg, inversion);
                if let Some(s) = realized {
                    if let Err(e) = window.update(s) {
                        row.error = Some(format!("window not updated: {e}"));
                    }
                }
                row
            })
            .collect();
        (initial, rows)
    } else {
        let qhat = threshold(&scores, cfg.alpha)?;
        let rows = test
            .par_iter()
            .map(|rec| predict(rec, qhat, cfg, inversion).0)
            .collect();
        (qhat, rows)
    };

    let report = report_for(&rows, cfg)?;
    Ok(RunOutput {
        rows,
        initial_qhat,
        report,
    })
}

/// Metrics over rows with both a target and an interval.
pub fn report_for(rows: &[IntervalRow], cfg: &Config) -> Result<EvaluationReport> {
    let samples: Vec<SampleEval> = rows.iter().filter_map(|r| r.sample(cfg.alpha)).collect();
    evaluate(&samples, &cfg.metric_params())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{ScoreFamily, ScoreSpec};
    use crate::rootfind::IntervalStatus;

    fn rec(id: usize, y: Option<f64>, center: f64) -> DrawRecord {
        let draws = (0..21).map(|j| center + (j as f64 - 10.0) * 0.1).collect();
        DrawRecord::new(format!("r{id}"), y, draws)
    }

    fn calib(n: usize) -> Vec<DrawRecord> {
        (0..n).map(|i| rec(i, Some(((i * 37) % 100) as f64 / 100.0 - 0.5), 0.0)).collect()
    }

    #[test]
    fn static_run_uses_one_threshold() {
        let cfg = Config::default();
        let test: Vec<DrawRecord> = (0..5).map(|i| rec(i, Some(0.1), i as f64)).collect();
        let out = run(&calib(50), &test, &cfg, Inversion::Numeric).unwrap();
        assert_eq!(out.rows.len(), 5);
        let scores = calibration_scores(&calib(50), &cfg).unwrap();
        let q = threshold(&scores, 0.1).unwrap();
        assert_eq!(out.initial_qhat, q);
        for (i, row) in out.rows.iter().enumerate() {
            assert_eq!(row.qhat, q);
            let iv = row.interval.unwrap();
            assert_eq!(iv.status, IntervalStatus::TwoSided);
            assert!((iv.low - (i as f64 - q)).abs() < 1e-8);
            assert!((iv.up - (i as f64 + q)).abs() < 1e-8);
        }
        assert_eq!(out.report.n, 5);
    }

    #[test]
    fn analytic_and_numeric_agree() {
        let mut cfg = Config::default();
        cfg.score = ScoreSpec::cqr().with_scaled(true);
        let test: Vec<DrawRecord> = (0..5).map(|i| rec(i, None, i as f64 * 0.3)).collect();
        let a = run(&calib(40), &test, &cfg, Inversion::Analytic).unwrap();
        let n = run(&calib(40), &test, &cfg, Inversion::Numeric).unwrap();
        for (ra, rn) in a.rows.iter().zip(&n.rows) {
            let (ia, inn) = (ra.interval.unwrap(), rn.interval.unwrap());
            assert!((ia.low - inn.low).abs() < 1e-8 && (ia.up - inn.up).abs() < 1e-8);
        }
        assert_eq!(a.report, EvaluationReport::empty());
    }

    #[test]
    fn online_run_tracks_window() {
        let mut cfg = Config::default();
        cfg.online = true;
        let test: Vec<DrawRecord> = (0..30).map(|i| rec(i, Some(5.0), 0.0)).collect();
        let out = run(&calib(20), &test, &cfg, Inversion::Numeric).unwrap();
        let trace = out.qhat_trace();
        assert_eq!(trace[0], out.initial_qhat);
        // large residuals enter the window and the threshold grows
        assert!(trace.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(*trace.last().unwrap(), 5.0);

        let mut reference = CalibrationWindow::new(&calibration_scores(&calib(20), &cfg).unwrap(), 0.1).unwrap();
        for (row, _) in out.rows.iter().zip(&test) {
            assert_eq!(row.qhat, reference.qhat());
            reference.update(5.0).unwrap();
        }
    }

    #[test]
    fn window_len_keeps_most_recent_scores() {
        let mut cfg = Config::default();
        cfg.online = true;
        cfg.window_len = Some(9);
        let cal = calib(30);
        let out = run(&cal, &[rec(0, None, 0.0)], &cfg, Inversion::Numeric).unwrap();
        let scores = calibration_scores(&cal, &cfg).unwrap();
        assert_eq!(out.initial_qhat, threshold(&scores[21..], 0.1).unwrap());
    }

    #[test]
    fn bad_test_records_become_error_rows() {
        let mut cfg = Config::default();
        cfg.score = ScoreSpec::knn(15);
        let mut test = vec![rec(0, Some(0.0), 0.0), DrawRecord::new("short", Some(0.0), vec![1.0, 2.0])];
        test.push(DrawRecord::new("empty", Some(0.0), vec![]));
        let out = run(&calib(30), &test, &cfg, Inversion::Numeric).unwrap();
        assert!(out.rows[0].interval.is_some());
        assert!(out.rows[1].error.as_deref().unwrap().contains("k = 15"));
        assert!(out.rows[2].error.is_some());
        assert_eq!(out.report.n, 1);
    }

    #[test]
    fn calibration_errors() {
        let cfg = Config::default();
        let mut cal = calib(30);
        cal[3].y = None;
        assert!(matches!(run(&cal, &[], &cfg, Inversion::Numeric), Err(DcpError::InvalidConfig(_))));
        assert!(matches!(
            run(&calib(5), &[], &cfg, Inversion::Numeric),
            Err(DcpError::InsufficientCalibration { .. })
        ));
        let mut cal = calib(30);
        cal[0].draws[2] = f64::NAN;
        assert!(matches!(run(&cal, &[], &cfg, Inversion::Numeric), Err(DcpError::NonFinite { .. })));
    }

    #[test]
    fn every_family_runs() {
        for family in ScoreFamily::ALL {
            let mut cfg = Config::default();
            cfg.score = ScoreSpec::new(family);
            let test: Vec<DrawRecord> = (0..3).map(|i| rec(i, Some(0.05), 0.0)).collect();
            let out = run(&calib(30), &test, &cfg, Inversion::Analytic).unwrap();
            assert!(out.rows.iter().all(|r| r.interval.is_some()), "{family}");
        }
    }
}
