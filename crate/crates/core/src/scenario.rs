//! Benchmark scenarios: a synthetic series, its windowed split, and a
//! Gaussian forecaster with known error structure that supplies predictive
//! draws for the calibration and test records.
//!
//! The forecaster predicts the base waveform with an i.i.d. model error of
//! standard deviation `model_sigma` per target. Its predictive spread is
//! `sqrt(noise_sigma(t)^2 + model_sigma^2)` when it knows the observation
//! noise, and is widened by `|shift(t)|` when it is shift aware. All values
//! are in scaled (min-max) units.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{DcpError, Result};
use crate::oracles::OracleDgp;
use crate::pipeline::DrawRecord;
use crate::synth::{gen_signal, noise_sigma, window_xy, split_and_scale, NoiseSpec, SeriesSpec, SplitData, SplitSpec, XyPair};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForecasterSpec {
    /// Standard deviation of the forecaster's own error, in raw units.
    pub model_sigma: f64,
    /// Include the observation-noise scale in the predictive spread.
    pub match_noise: bool,
    /// Widen the predictive spread by the magnitude of the unseen shift.
    pub shift_aware: bool,
    pub m_draws: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub series: SeriesSpec,
    #[serde(default)]
    pub split: SplitSpec,
    pub forecaster: ForecasterSpec,
}

impl ScenarioSpec {
    pub fn aleatoric() -> Self {
        Self {
            series: SeriesSpec::aleatoric(),
            split: SplitSpec::default(),
            forecaster: ForecasterSpec {
                model_sigma: 0.01,
                match_noise: true,
                shift_aware: false,
                m_draws: 100,
            },
        }
    }

    pub fn epistemic(shift_aware: bool) -> Self {
        Self {
            series: SeriesSpec::epistemic(),
            split: SplitSpec::default(),
            forecaster: ForecasterSpec {
                model_sigma: 0.02,
                match_noise: true,
                shift_aware,
                m_draws: 100,
            },
        }
    }

    /// `aleatoric`, `epistemic` (shift unaware) or `epistemic_aware`.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "aleatoric" => Ok(Self::aleatoric()),
            "epistemic" => Ok(Self::epistemic(false)),
            "epistemic_aware" => Ok(Self::epistemic(true)),
            other => Err(DcpError::InvalidConfig(format!("unknown scenario preset {other:?}"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.series.validate()?;
        self.split.validate()?;
        let f = &self.forecaster;
        if !(f.model_sigma > 0.0 && f.model_sigma.is_finite()) {
            return Err(DcpError::InvalidConfig(format!(
                "model_sigma must be positive, got {}",
                f.model_sigma
            )));
        }
        if f.m_draws == 0 {
            return Err(DcpError::InvalidConfig("m_draws must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub clean: Vec<f64>,
    pub observed: Vec<f64>,
    pub data: SplitData,
    pub calib: Vec<DrawRecord>,
    pub test: Vec<DrawRecord>,
}

/// Generates the series, splits it and draws forecasts for the calibration
/// and test targets. Deterministic per seed.
pub fn build_scenario(spec: &ScenarioSpec, seed: u64) -> Result<Scenario> {
    spec.validate()?;
    let series = &spec.series;
    let clean = gen_signal(series);
    let base = series.base_signal();
    let shift = series.shift_signal();
    let noise = match series.noise {
        NoiseSpec::None => vec![0.0; clean.len()],
        NoiseSpec::Heteroscedastic { snr_target, p } => noise_sigma(&clean, snr_target, p),
    };
    let mut noise_rng = ChaCha8Rng::seed_from_u64(seed);
    let observed: Vec<f64> = clean
        .iter()
        .zip(&noise)
        .map(|(z, s)| {
            let e: f64 = StandardNormal.sample(&mut noise_rng);
            z + s * e
        })
        .collect();

    let pairs = window_xy(&observed, &spec.split)?;
    let data = split_and_scale(&pairs, &spec.split)?;

    let f = spec.forecaster.clone();
    let scaler = data.scaler;
    let mut model_rng = ChaCha8Rng::seed_from_u64(seed);
    model_rng.set_stream(1);
    let mu: Vec<f64> = base
        .iter()
        .map(|b| {
            let e: f64 = StandardNormal.sample(&mut model_rng);
            scaler.transform(b + f.model_sigma * e)
        })
        .collect();
    let sigma: Vec<f64> = noise
        .iter()
        .zip(&shift)
        .map(|(n, s)| {
            let n = if f.match_noise { *n } else { 0.0 };
            let spread = (n * n + f.model_sigma * f.model_sigma).sqrt();
            let widened = if f.shift_aware { spread + s.abs() } else { spread };
            widened / scaler.range()
        })
        .collect();
    let (mu, sigma) = (Arc::new(mu), Arc::new(sigma));
    let oracle = OracleDgp::gaussian(
        Arc::new(move |x: &[f64]| mu[x[0] as usize]),
        Arc::new(move |x: &[f64]| sigma[x[0] as usize]),
        f.m_draws,
    );

    let mut draw_rng = ChaCha8Rng::seed_from_u64(seed);
    draw_rng.set_stream(2);
    let mut records = |part: &[XyPair]| -> Result<Vec<DrawRecord>> {
        part.iter()
            .map(|p| {
                let dv = oracle.draw(&[p.target_index as f64], &mut draw_rng)?;
                Ok(DrawRecord::new(format!("t{}", p.target_index), Some(p.y), dv.draws().to_vec()))
            })
            .collect()
    };
    let calib = records(&data.calib)?;
    let test = records(&data.test)?;
    Ok(Scenario {
        clean,
        observed,
        data,
        calib,
        test,
    })
}
