use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use dcp_core::scenario::{build_scenario, ScenarioSpec};
use dcp_core::{evaluate, Config, EvaluationReport, Inversion, RunOutput};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::io;
use crate::{MetricArgs, OutputError, ReportArgs, RunArgs, SynthArgs};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub role: String,
    pub path: String,
    pub sha256: String,
    pub records: usize,
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub config: Config,
    pub seed: u64,
    pub analytic: bool,
    pub inputs: Vec<InputDigest>,
    /// Seconds since the Unix epoch; `SOURCE_DATE_EPOCH` when set.
    pub created: u64,
}

fn timestamp() -> u64 {
    std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or_else(|| {
            SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs())
        })
}

fn digest(role: &str, path: &Path, records: usize) -> Result<InputDigest> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(InputDigest {
        role: role.to_string(),
        path: path.display().to_string(),
        sha256: hex::encode(Sha256::digest(&bytes)),
        records,
    })
}

fn write_output(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| anyhow::Error::new(e).context(OutputError(path.to_path_buf())))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| anyhow::Error::new(e).context(OutputError(dir.to_path_buf())))
}

/// Config file (or defaults) with the metric flags applied.
pub fn load_config(path: Option<&Path>, metrics: &MetricArgs) -> Result<Config> {
    let mut cfg = match path {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
            Config::from_json_str(&text).with_context(|| format!("config {}", p.display()))?
        }
        None => Config::default(),
    };
    if let Some(alpha) = metrics.alpha {
        cfg.set_alpha(alpha);
    }
    if let Some(zeta) = metrics.zeta {
        cfg.zeta = zeta;
    }
    if let Some(kappa) = metrics.kappa {
        cfg.kappa = kappa;
    }
    if metrics.normalize {
        cfg.normalize_by_range = true;
    }
    Ok(cfg)
}

fn run_config(args: &RunArgs, config: Option<&Path>) -> Result<Config> {
    let mut cfg = load_config(config, &args.metrics)?;
    if let Some(family) = args.score {
        cfg.score.family = family;
    }
    if args.scaled {
        cfg.score.scaled = true;
    }
    if let Some(k) = args.k {
        cfg.score.k = k;
    }
    if args.online {
        cfg.online = true;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Calibrates on `--calib`, predicts `--test` and writes `intervals.csv`,
/// `report.json`, `qhat_trace.csv` and `manifest.json` into `--out-dir`.
pub fn cmd_run(args: &RunArgs, config: Option<&Path>, seed: u64) -> Result<RunOutput> {
    let cfg = run_config(args, config)?;
    let calib = io::read_records(&args.calib)?;
    let test = io::read_records(&args.test)?;
    let inversion = if args.analytic { Inversion::Analytic } else { Inversion::Numeric };
    let out = dcp_core::run(&calib, &test, &cfg, inversion)?;

    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        seed,
        analytic: args.analytic,
        inputs: vec![digest("calib", &args.calib, calib.len())?, digest("test", &args.test, test.len())?],
        created: timestamp(),
    };

    create_dir(&args.out_dir)?;
    let mut csv = Vec::new();
    io::write_intervals(&mut csv, &out.rows, cfg.alpha)?;
    write_output(&args.out_dir.join("intervals.csv"), csv)?;
    write_output(&args.out_dir.join("report.json"), io::report_json(&out.report))?;
    let mut trace = Vec::new();
    io::write_qhat_trace(&mut trace, &out.rows)?;
    write_output(&args.out_dir.join("qhat_trace.csv"), trace)?;
    let manifest_json = serde_json::to_string_pretty(&manifest)? + "\n";
    write_output(&args.out_dir.join("manifest.json"), manifest_json)?;
    Ok(out)
}

/// Recomputes the report from an intervals CSV alone.
pub fn cmd_report(args: &ReportArgs, config: Option<&Path>) -> Result<EvaluationReport> {
    let cfg = load_config(config, &args.metrics)?;
    cfg.validate()?;
    let rows = io::read_intervals(&args.intervals)?;
    let samples = io::samples_from_csv(&rows, cfg.alpha);
    let report = evaluate(&samples, &cfg.metric_params())?;
    let json = io::report_json(&report);
    match &args.out {
        Some(path) => write_output(path, json)?,
        None => print!("{json}"),
    }
    Ok(report)
}

fn scenario_spec(args: &SynthArgs) -> Result<ScenarioSpec> {
    let mut spec = match &args.spec {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("scenario spec {}", path.display()))?
        }
        None => ScenarioSpec::preset(&args.preset)?,
    };
    if let Some(m) = args.draws {
        spec.forecaster.m_draws = m;
    }
    if let Some(f) = &args.fractions {
        if let [train, calib, test] = f.as_slice() {
            spec.split.train = *train;
            spec.split.calib = *calib;
            spec.split.test = *test;
        } else {
            bail!("--fractions takes exactly three values");
        }
    }
    spec.validate()?;
    Ok(spec)
}

#[derive(Debug, Serialize)]
struct SynthManifest<'a> {
    version: &'a str,
    spec: &'a ScenarioSpec,
    seed: u64,
    scaler: dcp_core::synth::MinMaxScaler,
    counts: [usize; 3],
    created: u64,
}

pub struct SynthSummary {
    pub out_dir: PathBuf,
    pub series: usize,
    pub train: usize,
    pub calib: usize,
    pub test: usize,
}

impl std::fmt::Display for SynthSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}: series {} points, train {} / calib {} / test {} pairs",
            self.out_dir.display(),
            self.series,
            self.train,
            self.calib,
            self.test
        )
    }
}

/// Writes `series.jsonl`, `train.jsonl`, `calib.jsonl`, `test.jsonl` and
/// `manifest.json`. Pair files carry scaled values; `calib` and `test`
/// records hold the forecaster's draws.
pub fn cmd_synth(args: &SynthArgs, seed: u64) -> Result<SynthSummary> {
    let spec = scenario_spec(args)?;
    let sc = build_scenario(&spec, seed)?;
    create_dir(&args.out_dir)?;

    let times = spec.series.times();
    let mut series = String::new();
    for (i, ((t, clean), value)) in times.iter().zip(&sc.clean).zip(&sc.observed).enumerate() {
        series.push_str(&format!(
            "{{\"index\":{i},\"t\":{},\"clean\":{},\"value\":{}}}\n",
            io::fmt_num(*t),
            io::fmt_num(*clean),
            io::fmt_num(*value)
        ));
    }
    write_output(&args.out_dir.join("series.jsonl"), series)?;

    let mut train = String::new();
    for p in &sc.data.train {
        train.push_str(&io::pair_line(&format!("t{}", p.target_index), p.y, &p.x));
        train.push('\n');
    }
    write_output(&args.out_dir.join("train.jsonl"), train)?;

    for (name, pairs, records) in [("calib", &sc.data.calib, &sc.calib), ("test", &sc.data.test, &sc.test)] {
        let mut text = String::new();
        for (p, rec) in pairs.iter().zip(records.iter()) {
            text.push_str(&io::record_line(rec, Some(&p.x)));
            text.push('\n');
        }
        write_output(&args.out_dir.join(format!("{name}.jsonl")), text)?;
    }

    let manifest = SynthManifest {
        version: env!("CARGO_PKG_VERSION"),
        spec: &spec,
        seed,
        scaler: sc.data.scaler,
        counts: [sc.data.train.len(), sc.calib.len(), sc.test.len()],
        created: timestamp(),
    };
    write_output(&args.out_dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;

    Ok(SynthSummary {
        out_dir: args.out_dir.clone(),
        series: sc.observed.len(),
        train: sc.data.train.len(),
        calib: sc.calib.len(),
        test: sc.test.len(),
    })
}
