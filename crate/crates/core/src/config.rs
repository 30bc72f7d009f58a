//! Run configuration: score selection, root-finder constants and metric
//! parameters.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{DcpError, Result};
use crate::rootfind::RootFindConfig;

/// Nonconformity score family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScoreFamily {
    /// Absolute residual around the draw mean.
    #[serde(rename = "residual")]
    Residual,
    /// Residual standardized by the draw standard deviation.
    #[serde(rename = "z")]
    Z,
    /// Interval violation against the empirical quantile band.
    #[serde(rename = "qis", alias = "interval_quantile")]
    IntervalQuantile,
    /// Interval violation against the highest-density interval.
    #[serde(rename = "hdi", alias = "interval_hdi")]
    IntervalHdi,
    /// Median k-nearest-neighbour distance over the median pairwise distance.
    #[serde(rename = "knn")]
    Knn,
}

impl ScoreFamily {
    pub const ALL: [ScoreFamily; 5] = [
        ScoreFamily::Residual,
        ScoreFamily::Z,
        ScoreFamily::IntervalQuantile,
        ScoreFamily::IntervalHdi,
        ScoreFamily::Knn,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScoreFamily::Residual => "residual",
            ScoreFamily::Z => "z",
            ScoreFamily::IntervalQuantile => "qis",
            ScoreFamily::IntervalHdi => "hdi",
            ScoreFamily::Knn => "knn",
        }
    }

    /// Whether the conformal set has a closed form for this family.
    pub fn has_analytic_inverse(self) -> bool {
        !matches!(self, ScoreFamily::Knn)
    }
}

impl fmt::Display for ScoreFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScoreFamily {
    type Err = DcpError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "residual" | "r" => Ok(ScoreFamily::Residual),
            "z" | "zscore" => Ok(ScoreFamily::Z),
            "qis" | "interval_quantile" => Ok(ScoreFamily::IntervalQuantile),
            "hdi" | "interval_hdi" => Ok(ScoreFamily::IntervalHdi),
            "knn" => Ok(ScoreFamily::Knn),
            other => Err(DcpError::InvalidConfig(format!(
                "unknown score family `{other}` (expected residual, z, qis, hdi or knn)"
            ))),
        }
    }
}

/// Which score to evaluate and how. Shared verbatim by calibration and
/// inference so both phases see the same function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoreSpec {
    pub family: ScoreFamily,
    /// Divide interval violations by the base band width.
    pub scaled: bool,
    /// Neighbour count for the KNN score.
    pub k: usize,
    /// Nominal miscoverage of the base band (0.1 gives the 0.05/0.95 band).
    pub band_alpha: f64,
    pub sigma_floor: f64,
    pub width_floor: f64,
}

impl Default for ScoreSpec {
    fn default() -> Self {
        Self {
            family: ScoreFamily::Residual,
            scaled: false,
            k: 10,
            band_alpha: 0.1,
            sigma_floor: 1e-9,
            width_floor: 1e-9,
        }
    }
}

impl ScoreSpec {
    pub fn new(family: ScoreFamily) -> Self {
        Self {
            family,
            ..Self::default()
        }
    }

    /// Classical split conformal: absolute residual around the point forecast.
    pub fn split_cp() -> Self {
        Self::new(ScoreFamily::Residual)
    }

    /// MC-CP style: variance-scaled residual on stochastic draws.
    pub fn mc_cp() -> Self {
        Self::new(ScoreFamily::Z)
    }

    /// CQR: interval violation against conditional quantiles. Pair with
    /// quantile pseudo-draws.
    pub fn cqr() -> Self {
        Self::new(ScoreFamily::IntervalQuantile)
    }

    /// CMC: interval violation against the HDI of Monte Carlo dropout draws.
    pub fn cmc() -> Self {
        Self::new(ScoreFamily::IntervalHdi)
    }

    pub fn knn(k: usize) -> Self {
        Self {
            k,
            ..Self::new(ScoreFamily::Knn)
        }
    }

    /// Looks up a named preset (`split_cp`, `mc_cp`, `cqr`, `cmc`, `knn`).
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "split_cp" => Ok(Self::split_cp()),
            "mc_cp" => Ok(Self::mc_cp()),
            "cqr" => Ok(Self::cqr()),
            "cmc" => Ok(Self::cmc()),
            "knn" => Ok(Self::knn(10)),
            other => Err(DcpError::InvalidConfig(format!("unknown preset `{other}`"))),
        }
    }

    pub fn with_scaled(mut self, scaled: bool) -> Self {
        self.scaled = scaled;
        self
    }

    pub fn with_band_alpha(mut self, band_alpha: f64) -> Self {
        self.band_alpha = band_alpha;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(DcpError::InvalidConfig("k must be at least 1".into()));
        }
        if !(self.band_alpha > 0.0 && self.band_alpha < 1.0) {
            return Err(DcpError::InvalidConfig(format!(
                "band_alpha must lie in (0, 1), got {}",
                self.band_alpha
            )));
        }
        if !(self.sigma_floor > 0.0 && self.width_floor > 0.0) {
            return Err(DcpError::InvalidConfig(
                "sigma_floor and width_floor must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Full configuration of a calibration/prediction/evaluation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Nominal miscoverage rate.
    pub alpha: f64,
    /// Confidence-margin multiplier for the minimal acceptable coverage.
    pub zeta: f64,
    /// Growth factor of the undercoverage penalty.
    pub kappa: f64,
    pub root: RootFindConfig,
    pub score: ScoreSpec,
    /// Sliding-window recalibration after every revealed test target.
    pub online: bool,
    /// Window capacity for online mode. Defaults to the calibration set size;
    /// a smaller value keeps only the most recent calibration scores.
    pub window_len: Option<usize>,
    /// Divide widths and miss distances by the test-target range before
    /// aggregating the Winkler scores.
    pub normalize_by_range: bool,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            zeta: 1.645,
            kappa: 2.0,
            root: RootFindConfig::default(),
            score: ScoreSpec::default(),
            online: false,
            window_len: None,
            normalize_by_range: false,
        }
    }
}

impl Config {
    /// Parses a JSON config. Keys that are absent take their defaults; an
    /// absent `score.band_alpha` follows `alpha`.
    pub fn from_json_str(s: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(s)
            .map_err(|e| DcpError::InvalidConfig(format!("config JSON: {e}")))?;
        let band_alpha_given = value
            .get("score")
            .and_then(|score| score.get("band_alpha"))
            .is_some();
        let mut cfg: Config = serde_json::from_value(value)
            .map_err(|e| DcpError::InvalidConfig(format!("config JSON: {e}")))?;
        if !band_alpha_given {
            cfg.score.band_alpha = cfg.alpha;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets `alpha`, moving `score.band_alpha` along when it was tracking the
    /// previous value.
    pub fn set_alpha(&mut self, alpha: f64) {
        if self.score.band_alpha == self.alpha {
            self.score.band_alpha = alpha;
        }
        self.alpha = alpha;
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(DcpError::InvalidConfig(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if !(self.zeta >= 0.0 && self.zeta.is_finite()) {
            return Err(DcpError::InvalidConfig(format!("zeta must be >= 0, got {}", self.zeta)));
        }
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return Err(DcpError::InvalidConfig(format!("kappa must be >= 0, got {}", self.kappa)));
        }
        if self.window_len == Some(0) {
            return Err(DcpError::InvalidConfig("window_len must be positive".into()));
        }
        self.root.validate()?;
        self.score.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let cfg = Config::default();
        assert_eq!((cfg.alpha, cfg.zeta, cfg.kappa), (0.1, 1.645, 2.0));
        assert_eq!(cfg.root.depth, 100);
        assert_eq!(cfg.root.h0, 1e-6);
        assert_eq!(cfg.root.gamma, 1.167);
        assert_eq!(cfg.root.tol, 1e-10);
        assert_eq!(cfg.score.k, 10);
        cfg.validate().unwrap();
    }

    #[test]
    fn band_alpha_follows_alpha_unless_given() {
        let cfg = Config::from_json_str(r#"{"alpha": 0.2, "score": {"family": "qis"}}"#).unwrap();
        assert_eq!(cfg.score.band_alpha, 0.2);
        assert_eq!(cfg.score.family, ScoreFamily::IntervalQuantile);

        let cfg =
            Config::from_json_str(r#"{"alpha": 0.2, "score": {"band_alpha": 0.05}}"#).unwrap();
        assert_eq!(cfg.score.band_alpha, 0.05);

        let mut cfg = Config::default();
        cfg.set_alpha(0.05);
        assert_eq!(cfg.score.band_alpha, 0.05);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(Config::from_json_str(r#"{"alpha": 1.5}"#).is_err());
        assert!(Config::from_json_str(r#"{"kappa": -1}"#).is_err());
        assert!(Config::from_json_str(r#"{"root": {"gamma": 1.0}}"#).is_err());
        assert!(Config::from_json_str(r#"{"score": {"k": 0}}"#).is_err());
        assert!(Config::from_json_str(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn family_names_round_trip() {
        for fam in ScoreFamily::ALL {
            assert_eq!(fam.as_str().parse::<ScoreFamily>().unwrap(), fam);
            let json = serde_json::to_string(&fam).unwrap();
            assert_eq!(serde_json::from_str::<ScoreFamily>(&json).unwrap(), fam);
        }
        assert!("bogus".parse::<ScoreFamily>().is_err());
    }

    #[test]
    fn presets() {
        assert_eq!(ScoreSpec::preset("cqr").unwrap().family, ScoreFamily::IntervalQuantile);
        assert_eq!(ScoreSpec::preset("cmc").unwrap().family, ScoreFamily::IntervalHdi);
        assert_eq!(ScoreSpec::preset("mc_cp").unwrap().family, ScoreFamily::Z);
        assert!(!ScoreSpec::cqr().scaled);
        assert!(ScoreSpec::preset("enbpi").is_err());
    }
}
