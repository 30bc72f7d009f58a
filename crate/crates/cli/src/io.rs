//! File formats: JSON-lines draw records, the intervals CSV and the flat
//! report JSON. Every real number is written with 17 significant digits so
//! that parsing recovers the exact value.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use dcp_core::{EvaluationReport, IntervalRow, IntervalStatus, SampleEval};
use dcp_core::pipeline::DrawRecord;

/// `d.dddddddddddddddde±x`; `null` for non-finite values.
pub fn fmt_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".to_string()
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "null".to_string(), fmt_num)
}

fn json_array(values: &[f64]) -> String {
    let mut out = String::with_capacity(values.len() * 24 + 2);
    out.push('[');
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&fmt_num(*v));
    }
    out.push(']');
    out
}

/// One JSON-lines record `{"id", "y", "draws"}`, with an optional `x`.
pub fn record_line(rec: &DrawRecord, x: Option<&[f64]>) -> String {
    let mut line = format!(
        "{{\"id\":{},\"y\":{},",
        serde_json::Value::String(rec.id.clone()),
        fmt_opt(rec.y)
    );
    if let Some(x) = x {
        let _ = write!(line, "\"x\":{},", json_array(x));
    }
    let _ = write!(line, "\"draws\":{}}}", json_array(&rec.draws));
    line
}

/// Training pair `{"id", "y", "x"}`.
pub fn pair_line(id: &str, y: f64, x: &[f64]) -> String {
    format!(
        "{{\"id\":{},\"y\":{},\"x\":{}}}",
        serde_json::Value::String(id.to_string()),
        fmt_num(y),
        json_array(x)
    )
}

pub fn write_records(path: &Path, records: &[DrawRecord]) -> Result<()> {
    let mut out = String::new();
    for rec in records {
        out.push_str(&record_line(rec, None));
        out.push('\n');
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

/// Reads JSON-lines draw records; blank lines are skipped. Errors name the
/// offending line.
pub fn read_records(path: &Path) -> Result<Vec<DrawRecord>> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.with_context(|| format!("{}:{}: read failed", path.display(), i + 1))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: DrawRecord = serde_json::from_str(&line)
            .with_context(|| format!("{}:{}: invalid draw record", path.display(), i + 1))?;
        if rec.draws.is_empty() {
            bail!("{}:{}: draws must be non-empty", path.display(), i + 1);
        }
        records.push(rec);
    }
    Ok(records)
}

pub const CSV_HEADER: [&str; 11] = [
    "id", "y", "low", "up", "status", "width", "covered", "miss_error", "winkler", "qhat", "note",
];

pub const ERROR_STATUS: &str = "error";

fn csv_opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

pub fn write_intervals<W: Write>(out: W, rows: &[IntervalRow], alpha: f64) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for row in rows {
        let (low, up, status, width) = match &row.interval {
            Some(iv) => (Some(iv.low), Some(iv.up), iv.status.as_str(), Some(iv.width())),
            None => (None, None, ERROR_STATUS, None),
        };
        let sample = row.sample(alpha);
        let covered = sample.map(|s| if s.covered { "1" } else { "0" }).unwrap_or_default();
        w.write_record([
            row.id.clone(),
            csv_opt(row.y),
            csv_opt(low),
            csv_opt(up),
            status.to_string(),
            csv_opt(width),
            covered.to_string(),
            csv_opt(sample.map(|s| s.miss_error)),
            csv_opt(sample.map(|s| s.winkler())),
            fmt_num(row.qhat),
            row.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Parsed intervals-CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub id: String,
    pub y: Option<f64>,
    pub low: Option<f64>,
    pub up: Option<f64>,
    pub status: String,
}

fn parse_opt(field: &str, name: &str, line: u64) -> Result<Option<f64>> {
    if field.is_empty() {
        return Ok(None);
    }
    field
        .parse::<f64>()
        .map(Some)
        .map_err(|e| anyhow!("line {line}: column {name}: {e}"))
}

pub fn read_intervals(path: &Path) -> Result<Vec<CsvRow>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let headers = r.headers()?.clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| anyhow!("{}: missing column {name:?}", path.display()))
    };
    let (c_id, c_y, c_low, c_up, c_status) = (col("id")?, col("y")?, col("low")?, col("up")?, col("status")?);
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.with_context(|| format!("{}: malformed CSV", path.display()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let status = rec[c_status].to_string();
        if status != ERROR_STATUS && IntervalStatus::parse(&status).is_none() {
            bail!("{}: line {line}: unknown status {status:?}", path.display());
        }
        let row = CsvRow {
            id: rec[c_id].to_string(),
            y: parse_opt(&rec[c_y], "y", line)?,
            low: parse_opt(&rec[c_low], "low", line)?,
            up: parse_opt(&rec[c_up], "up", line)?,
            status,
        };
        if row.status != ERROR_STATUS && (row.low.is_none() || row.up.is_none()) {
            bail!("{}: line {line}: interval bounds missing", path.display());
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Evaluation samples of the scored rows that have a target.
pub fn samples_from_csv(rows: &[CsvRow], alpha: f64) -> Vec<SampleEval> {
    rows.iter()
        .filter(|r| r.status != ERROR_STATUS)
        .filter_map(|r| match (r.y, r.low, r.up) {
            (Some(y), Some(low), Some(up)) => Some(SampleEval::new(y, low, up, alpha)),
            _ => None,
        })
        .collect()
}

pub fn report_json(report: &EvaluationReport) -> String {
    let fields = [
        ("picp", report.picp),
        ("c_a", report.c_a),
        ("pinaw", report.pinaw),
        ("cv_width", report.cv_width),
        ("mean_winkler", report.mean_winkler),
        ("p_uc", report.p_uc),
        ("mmw", report.mmw),
        ("xi", report.xi),
    ];
    let mut out = format!("{{\n  \"n\": {}", report.n);
    for (name, value) in fields {
        let _ = write!(out, ",\n  \"{name}\": {}", fmt_opt(value));
    }
    out.push_str("\n}\n");
    out
}

pub fn read_report(path: &Path) -> Result<EvaluationReport> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("{}: invalid report", path.display()))
}

pub fn write_qhat_trace<W: Write>(out: W, rows: &[IntervalRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["index", "id", "qhat"])?;
    for (i, row) in rows.iter().enumerate() {
        w.write_record([i.to_string(), row.id.clone(), fmt_num(row.qhat)])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use dcp_core::PredictionInterval;

    #[test]
    fn number_format_round_trips() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 1e300, 0.0, 123456789.12345679, f64::MIN_POSITIVE] {
            let s = fmt_num(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
            let v: f64 = serde_json::from_str(&s).unwrap();
            assert_eq!(v, x);
        }
        assert_eq!(fmt_num(0.5), "5.0000000000000000e-1");
        assert_eq!(fmt_num(f64::NAN), "null");
    }

    #[test]
    fn record_line_round_trip() {
        let rec = DrawRecord::new("a\"b", None, vec![0.1, -3.0, 1e-9]);
        let line = record_line(&rec, Some(&[1.0, 2.0]));
        let back: DrawRecord = serde_json::from_str(&line).unwrap();
        assert_eq!(back, rec);
        let rec = DrawRecord::new("c", Some(2.0 / 3.0), vec![1.0]);
        assert_eq!(serde_json::from_str::<DrawRecord>(&record_line(&rec, None)).unwrap(), rec);
    }

    #[test]
    fn report_json_parses_back() {
        let samples: Vec<SampleEval> = (0..4).map(|i| SampleEval::new(i as f64 * 0.3, 0.0, 0.5, 0.1)).collect();
        let report = dcp_core::evaluate(&samples, &Default::default()).unwrap();
        let back: EvaluationReport = serde_json::from_str(&report_json(&report)).unwrap();
        assert_eq!(back, report);
        let empty = report_json(&EvaluationReport::empty());
        assert_eq!(serde_json::from_str::<EvaluationReport>(&empty).unwrap(), EvaluationReport::empty());
    }

    #[test]
    fn csv_round_trip() {
        let rows = vec![
            IntervalRow {
                id: "x,1".into(),
                y: Some(0.7),
                interval: Some(PredictionInterval { low: 0.1, up: 0.6, status: IntervalStatus::TwoSided }),
                qhat: 0.25,
                error: None,
            },
            IntervalRow { id: "x2".into(), y: None, interval: None, qhat: 0.25, error: Some("bad, draws".into()) },
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("i.csv");
        write_intervals(fs::File::create(&path).unwrap(), &rows, 0.1).unwrap();
        let parsed = read_intervals(&path).unwrap();
        assert_eq!(parsed.len(), 2);
        assert_eq!(parsed[0].id, "x,1");
        assert_eq!((parsed[0].y, parsed[0].low, parsed[0].up), (Some(0.7), Some(0.1), Some(0.6)));
        assert_eq!(parsed[1].status, ERROR_STATUS);
        let samples = samples_from_csv(&parsed, 0.1);
        assert_eq!(samples, vec![rows[0].sample(0.1).unwrap()]);
    }
}
