//! Synthetic sinusoidal benchmarks and the shared windowing, chronological
//! split and min-max scaling pipeline.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{DcpError, Result};

/// `amplitude * sin(2π frequency t + phase)`, `t` in days.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Harmonic {
    pub amplitude: f64,
    /// Cycles per day.
    pub frequency: f64,
    /// Radians.
    pub phase: f64,
}

impl Harmonic {
    pub fn new(amplitude: f64, frequency: f64, phase: f64) -> Self {
        Self {
            amplitude,
            frequency,
            phase,
        }
    }

    pub fn at(&self, t: f64) -> f64 {
        self.amplitude * (2.0 * PI * self.frequency * t + self.phase).sin()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseSpec {
    None,
    /// Gaussian noise with `sigma(t) = sigma_n |z(t)|^p`, `sigma_n` set from
    /// the target signal-to-noise ratio.
    Heteroscedastic { snr_target: f64, p: f64 },
}

/// Harmonics switched on from `start_fraction * days` onwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftSpec {
    pub extra_harmonics: Vec<Harmonic>,
    pub start_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesSpec {
    pub harmonics: Vec<Harmonic>,
    pub days: f64,
    pub samples_per_day: usize,
    pub noise: NoiseSpec,
    #[serde(default)]
    pub shift: Option<ShiftSpec>,
}

impl SeriesSpec {
    /// Heteroscedastic-noise scenario: one daily sine over 30 days,
    /// 288 samples per day, SNR 15 and exponent 0.8.
    pub fn aleatoric() -> Self {
        Self {
            harmonics: vec![Harmonic::new(1.0, 1.0, 0.0)],
            days: 30.0,
            samples_per_day: 288,
            noise: NoiseSpec::Heteroscedastic {
                snr_target: 15.0,
                p: 0.8,
            },
            shift: None,
        }
    }

    /// Distribution-shift scenario: a clean daily sine over 10 days whose
    /// last 10 % gains two unseen harmonics.
    pub fn epistemic() -> Self {
        Self {
            harmonics: vec![Harmonic::new(1.0, 1.0, 0.0)],
            days: 10.0,
            samples_per_day: 288,
            noise: NoiseSpec::None,
            shift: Some(ShiftSpec {
                extra_harmonics: vec![Harmonic::new(0.5, 0.03, PI), Harmonic::new(0.15, 6.0, 0.0)],
                start_fraction: 0.9,
            }),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(DcpError::InvalidConfig(msg));
        if self.samples_per_day == 0 {
            return bad("samples_per_day must be at least 1".into());
        }
        if !(self.days > 0.0 && self.days.is_finite()) {
            return bad(format!("days must be positive, got {}", self.days));
        }
        let harmonics = self
            .harmonics
            .iter()
            .chain(self.shift.iter().flat_map(|s| s.extra_harmonics.iter()));
        for h in harmonics {
            if !h.amplitude.is_finite() || !(h.frequency >= 0.0) || !h.phase.is_finite() {
                return bad(format!("invalid harmonic {h:?}"));
            }
        }
        if let Some(shift) = &self.shift {
            if !(shift.start_fraction > 0.0 && shift.start_fraction < 1.0) {
                return bad(format!(
                    "shift start_fraction must lie in (0, 1), got {}",
                    shift.start_fraction
                ));
            }
        }
        if let NoiseSpec::Heteroscedastic { snr_target, p } = self.noise {
            if !(snr_target > 0.0) || !p.is_finite() {
                return bad(format!("invalid noise snr_target {snr_target} / p {p}"));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        (self.days * self.samples_per_day as f64).round() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Sample times in days.
    pub fn times(&self) -> Vec<f64> {
        let step = self.samples_per_day as f64;
        (0..self.len()).map(|i| i as f64 / step).collect()
    }

    /// Base waveform without the shift harmonics.
    pub fn base_signal(&self) -> Vec<f64> {
        self.times()
            .into_iter()
            .map(|t| self.harmonics.iter().map(|h| h.at(t)).sum())
            .collect()
    }

    /// Contribution of the shift harmonics (zero before the switch-on time).
    pub fn shift_signal(&self) -> Vec<f64> {
        let times = self.times();
        match &self.shift {
            None => vec![0.0; times.len()],
            Some(shift) => {
                let start = shift.start_fraction * self.days;
                times
                    .into_iter()
                    .map(|t| {
                        if t >= start {
                            shift.extra_harmonics.iter().map(|h| h.at(t)).sum()
                        } else {
                            0.0
                        }
                    })
                    .collect()
            }
        }
    }
}

/// Clean signal: base waveform plus any active shift harmonics.
pub fn gen_signal(spec: &SeriesSpec) -> Vec<f64> {
    spec.base_signal()
        .into_iter()
        .zip(spec.shift_signal())
        .map(|(b, s)| b + s)
        .collect()
}

/// Noise scale `sigma_n` such that `mean(z^2) / mean(sigma(t)^2)` equals
/// `snr_target`. Zero for an all-zero signal or an infinite target.
pub fn noise_scale(signal: &[f64], snr_target: f64, p: f64) -> f64 {
    if signal.is_empty() || snr_target.is_infinite() {
        return 0.0;
    }
    let n = signal.len() as f64;
    let power = signal.iter().map(|z| z * z).sum::<f64>() / n;
    let shape = signal.iter().map(|z| z.abs().powf(2.0 * p)).sum::<f64>() / n;
    if shape == 0.0 {
        return 0.0;
    }
    (power / (snr_target * shape)).sqrt()
}

/// Per-sample noise standard deviation `sigma_n |z(t)|^p`.
pub fn noise_sigma(signal: &[f64], snr_target: f64, p: f64) -> Vec<f64> {
    let scale = noise_scale(signal, snr_target, p);
    signal.iter().map(|z| scale * z.abs().powf(p)).collect()
}

/// Adds `N(0, sigma(t)^2)` noise, deterministic per seed.
pub fn add_heteroscedastic_noise(signal: &[f64], snr_target: f64, p: f64, seed: u64) -> Vec<f64> {
    let sigma = noise_sigma(signal, snr_target, p);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    signal
        .iter()
        .zip(sigma)
        .map(|(z, s)| {
            let e: f64 = StandardNormal.sample(&mut rng);
            z + s * e
        })
        .collect()
}

/// Observed series: the clean signal with the spec's noise applied.
pub fn gen_series(spec: &SeriesSpec, seed: u64) -> Vec<f64> {
    let clean = gen_signal(spec);
    match spec.noise {
        NoiseSpec::None => clean,
        NoiseSpec::Heteroscedastic { snr_target, p } => {
            add_heteroscedastic_noise(&clean, snr_target, p, seed)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSpec {
    pub horizon: usize,
    pub lookback: usize,
    pub train: f64,
    pub calib: f64,
    pub test: f64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            horizon: 1,
            lookback: 3,
            train: 0.7,
            calib: 0.2,
            test: 0.1,
        }
    }
}

impl SplitSpec {
    /// Lookback of three times the horizon.
    pub fn for_horizon(horizon: usize) -> Self {
        Self {
            horizon,
            lookback: 3 * horizon,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 || self.lookback == 0 {
            return Err(DcpError::InvalidConfig("horizon and lookback must be positive".into()));
        }
        let fractions = [self.train, self.calib, self.test];
        if fractions.iter().any(|f| !(*f >= 0.0)) || ((fractions.iter().sum::<f64>()) - 1.0).abs() > 1e-9 {
            return Err(DcpError::InvalidConfig(format!(
                "split fractions must be non-negative and sum to 1, got {fractions:?}"
            )));
        }
        Ok(())
    }
}

/// One supervised sample: `lookback` inputs and the value `horizon` steps
/// after the window end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XyPair {
    pub x: Vec<f64>,
    pub y: f64,
    /// Series index of the target.
    pub target_index: usize,
}

/// Stride-1 sliding windows over the series.
pub fn window_xy(series: &[f64], split: &SplitSpec) -> Result<Vec<XyPair>> {
    let span = split.lookback + split.horizon;
    if split.lookback == 0 || split.horizon == 0 || series.len() < span {
        return Err(DcpError::SeriesTooShort {
            len: series.len(),
            lookback: split.lookback,
            horizon: split.horizon,
        });
    }
    Ok((0..=series.len() - span)
        .map(|i| XyPair {
            x: series[i..i + split.lookback].to_vec(),
            y: series[i + span - 1],
            target_index: i + span - 1,
        })
        .collect())
}

/// Min-max scaler mapping `[min, max]` onto `[0, 1]`; values outside the
/// fitted range are not clipped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    pub min: f64,
    pub max: f64,
}

impl MinMaxScaler {
    pub fn fit(values: &[f64]) -> Result<Self> {
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(max > min) {
            return Err(DcpError::DegenerateScale(min));
        }
        Ok(Self { min, max })
    }

    pub fn range(&self) -> f64 {
        self.max - self.min
    }

    pub fn transform(&self, v: f64) -> f64 {
        (v - self.min) / self.range()
    }

    pub fn inverse(&self, v: f64) -> f64 {
        v * self.range() + self.min
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitData {
    pub train: Vec<XyPair>,
    pub calib: Vec<XyPair>,
    pub test: Vec<XyPair>,
    pub scaler: MinMaxScaler,
}

/// Chronological train/calibration/test split; the scaler is fitted on the
/// training targets and applied to inputs and targets of every subset.
pub fn split_and_scale(pairs: &[XyPair], split: &SplitSpec) -> Result<SplitData> {
    split.validate()?;
    let n = pairs.len();
    let n_train = ((n as f64 * split.train).round() as usize).min(n);
    let n_calib = ((n as f64 * split.calib).round() as usize).min(n - n_train);
    let (train, rest) = pairs.split_at(n_train);
    let (calib, test) = rest.split_at(n_calib);
    for (name, part) in [("train", train), ("calib", calib), ("test", test)] {
        if part.is_empty() {
            return Err(DcpError::EmptySplit(name));
        }
    }

    let targets: Vec<f64> = train.iter().map(|p| p.y).collect();
    let scaler = MinMaxScaler::fit(&targets)?;
    let scale = |part: &[XyPair]| -> Vec<XyPair> {
        part.iter()
            .map(|p| XyPair {
                x: p.x.iter().map(|&v| scaler.transform(v)).collect(),
                y: scaler.transform(p.y),
                target_index: p.target_index,
            })
            .collect()
    };
    Ok(SplitData {
        train: scale(train),
        calib: scale(calib),
        test: scale(test),
        scaler,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn single(h: Harmonic, days: f64, per_day: usize) -> SeriesSpec {
        SeriesSpec {
            harmonics: vec![h],
            days,
            samples_per_day: per_day,
            noise: NoiseSpec::None,
            shift: None,
        }
    }

    #[test]
    fn sine_values() {
        let z = gen_signal(&single(Harmonic::new(1.0, 1.0, 0.0), 1.0, 4));
        assert_eq!(z[0], 0.0);
        assert_abs_diff_eq!(z[1], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn presets() {
        let a = SeriesSpec::aleatoric();
        a.validate().unwrap();
        assert_eq!(gen_signal(&a).len(), 8640);

        let e = SeriesSpec::epistemic();
        e.validate().unwrap();
        let base = e.base_signal();
        let shift = e.shift_signal();
        assert_eq!(base.len(), 2880);
        let start = shift.iter().position(|&s| s != 0.0).unwrap();
        assert_eq!(start, 2592);
        let t = start as f64 / 288.0;
        let expected = 0.5 * (2.0 * PI * 0.03 * t + PI).sin() + 0.15 * (2.0 * PI * 6.0 * t).sin();
        assert_abs_diff_eq!(shift[start], expected, epsilon = 1e-15);
    }

    #[test]
    fn invalid_specs() {
        let mut s = SeriesSpec::epistemic();
        s.shift.as_mut().unwrap().start_fraction = 1.0;
        assert!(s.validate().is_err());
        let mut s = SeriesSpec::aleatoric();
        s.samples_per_day = 0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn infinite_snr_is_identity() {
        let z = gen_signal(&SeriesSpec::aleatoric());
        assert_eq!(add_heteroscedastic_noise(&z, f64::INFINITY, 0.8, 3), z);
    }

    #[test]
    fn zero_signal_gets_zero_noise() {
        let z = vec![0.0; 100];
        assert_eq!(add_heteroscedastic_noise(&z, 15.0, 0.8, 3), z);
    }

    #[test]
    fn constant_signal_noise_variance() {
        // sigma_n = c^(1 - p) / sqrt(15), realized variance ~ c^2 / 15
        let c = 2.0;
        let z = vec![c; 1_000_000];
        assert_abs_diff_eq!(noise_scale(&z, 15.0, 0.8), c.powf(0.2) / 15f64.sqrt(), epsilon = 1e-9);
        let noisy = add_heteroscedastic_noise(&z, 15.0, 0.8, 11);
        let var = noisy.iter().map(|v| (v - c).powi(2)).sum::<f64>() / z.len() as f64;
        assert!((var / (c * c / 15.0) - 1.0).abs() < 0.01, "variance {var}");
    }

    #[test]
    fn realized_snr_near_target_on_base_waveform() {
        let spec = SeriesSpec::aleatoric();
        let days = 400.0; // 115200 samples
        let spec = SeriesSpec { days, ..spec };
        let z = gen_signal(&spec);
        let noisy = add_heteroscedastic_noise(&z, 15.0, 0.8, 5);
        let signal_power = z.iter().map(|v| v * v).sum::<f64>();
        let noise_power = noisy.iter().zip(&z).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        let snr = signal_power / noise_power;
        assert!((snr / 15.0 - 1.0).abs() < 0.05, "snr {snr}");
    }

    #[test]
    fn noise_is_deterministic_per_seed() {
        let z = gen_signal(&SeriesSpec::aleatoric());
        assert_eq!(add_heteroscedastic_noise(&z, 15.0, 0.8, 9), add_heteroscedastic_noise(&z, 15.0, 0.8, 9));
        assert_ne!(add_heteroscedastic_noise(&z, 15.0, 0.8, 9), add_heteroscedastic_noise(&z, 15.0, 0.8, 10));
    }

    #[test]
    fn windowing() {
        let pairs = window_xy(&[1.0, 2.0, 3.0, 4.0, 5.0], &SplitSpec::default()).unwrap();
        assert_eq!(pairs.len(), 2);
        assert_eq!((pairs[0].x.as_slice(), pairs[0].y), (&[1.0, 2.0, 3.0][..], 4.0));
        assert_eq!((pairs[1].x.as_slice(), pairs[1].y), (&[2.0, 3.0, 4.0][..], 5.0));
        assert_eq!(window_xy(&[1.0, 2.0, 3.0, 4.0], &SplitSpec::default()).unwrap().len(), 1);
        assert!(matches!(window_xy(&[1.0, 2.0, 3.0], &SplitSpec::default()), Err(DcpError::SeriesTooShort { .. })));
        assert_eq!(SplitSpec::for_horizon(1).lookback, 3);
        assert_eq!(SplitSpec::for_horizon(4).lookback, 12);
    }

    fn pairs_from(ys: &[f64]) -> Vec<XyPair> {
        ys.iter()
            .enumerate()
            .map(|(i, &y)| XyPair { x: vec![y], y, target_index: i })
            .collect()
    }

    #[test]
    fn split_counts_and_scaling() {
        let ys: Vec<f64> = (0..100).map(|i| 2.0 + 2.0 * (i as f64 / 69.0)).collect();
        let mut pairs = pairs_from(&ys);
        pairs[95].y = 5.0;
        let data = split_and_scale(&pairs, &SplitSpec::default()).unwrap();
        assert_eq!((data.train.len(), data.calib.len(), data.test.len()), (70, 20, 10));
        assert_eq!(data.scaler, MinMaxScaler { min: 2.0, max: 4.0 });
        let lo = data.train.iter().map(|p| p.y).fold(f64::INFINITY, f64::min);
        let hi = data.train.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max);
        assert_eq!((lo, hi), (0.0, 1.0));
        assert_eq!(data.test[5].y, 1.5);
        assert!(data.calib.last().unwrap().target_index < data.test[0].target_index);
    }

    #[test]
    fn split_errors() {
        let constant = pairs_from(&[3.0; 20]);
        assert!(matches!(split_and_scale(&constant, &SplitSpec::default()), Err(DcpError::DegenerateScale(_))));
        let few = pairs_from(&[1.0, 2.0, 3.0]);
        assert!(matches!(split_and_scale(&few, &SplitSpec::default()), Err(DcpError::EmptySplit(_))));
        let bad = SplitSpec { train: 0.8, ..SplitSpec::default() };
        assert!(matches!(split_and_scale(&pairs_from(&[1.0, 2.0]), &bad), Err(DcpError::InvalidConfig(_))));
    }

    proptest! {
        #[test]
        fn scaler_round_trip(lo in -100f64..100.0, w in 0.01f64..100.0, v in -300f64..300.0) {
            let s = MinMaxScaler::fit(&[lo, lo + w]).unwrap();
            let back = s.inverse(s.transform(v));
            prop_assert!((back - v).abs() <= 1e-12 * v.abs().max(lo.abs()).max(w).max(1.0) * 10.0);
        }
    }
}
