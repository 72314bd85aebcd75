//! CSV and JSON serialization. Floats are written with 17 significant digits
//! (`{:.16e}`). CSV never contains wall-clock data, so identical runs produce
//! byte-identical files.

use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;
use serde_json::{Number, Value};

use crate::error::{Error, Result};
use crate::model::{Component, SampleSet};

use super::experiments::{CellSummary, SweepRow, TraceMean, TracePoint};
use super::lemmas::LemmaCheck;
use super::trial::TrialRecord;

pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

fn opt<T>(v: Option<T>, f: impl Fn(T) -> String) -> String {
    v.map(f).unwrap_or_default()
}

/// One CSV row type with a fixed column set.
pub trait CsvRow {
    const HEADER: &'static [&'static str];
    fn fields(&self) -> Vec<String>;
}

impl CsvRow for TrialRecord {
    const HEADER: &'static [&'static str] = &[
        "seed",
        "k",
        "n",
        "p1",
        "delta",
        "init_method",
        "resample",
        "t0",
        "iterations_used",
        "final_err",
        "exact",
        "degenerate_fallback",
        "failure",
    ];
    fn fields(&self) -> Vec<String> {
        vec![
            self.seed.to_string(),
            self.k.to_string(),
            self.n.to_string(),
            fmt_f64(self.p1),
            opt(self.delta, fmt_f64),
            self.init_method.as_str().to_string(),
            self.resample.to_string(),
            self.t0.to_string(),
            self.iterations_used.to_string(),
            opt(self.final_err, fmt_f64),
            self.exact.to_string(),
            self.degenerate_fallback.to_string(),
            self.failure.clone().unwrap_or_default(),
        ]
    }
}

impl CsvRow for CellSummary {
    const HEADER: &'static [&'static str] = &[
        "k",
        "n",
        "ratio",
        "init_method",
        "trials",
        "successes",
        "failed",
        "success_rate",
        "wilson_low",
        "wilson_high",
        "median_iterations",
        "mean_final_err",
    ];
    fn fields(&self) -> Vec<String> {
        vec![
            self.k.to_string(),
            self.n.to_string(),
            fmt_f64(self.ratio),
            self.init_method.as_str().to_string(),
            self.trials.to_string(),
            self.successes.to_string(),
            self.failed.to_string(),
            fmt_f64(self.success_rate),
            fmt_f64(self.wilson_low),
            fmt_f64(self.wilson_high),
            opt(self.median_iterations, fmt_f64),
            opt(self.mean_final_err, fmt_f64),
        ]
    }
}

impl CsvRow for SweepRow {
    const HEADER: &'static [&'static str] = &[
        "k",
        "n_star",
        "success_rate",
        "wilson_low",
        "wilson_high",
        "trials",
        "censored",
        "low_confidence",
    ];
    fn fields(&self) -> Vec<String> {
        vec![
            self.k.to_string(),
            opt(self.n_star, |n| n.to_string()),
            opt(self.success_rate, fmt_f64),
            opt(self.wilson_low, fmt_f64),
            opt(self.wilson_high, fmt_f64),
            self.trials.to_string(),
            self.censored.to_string(),
            self.low_confidence.to_string(),
        ]
    }
}

impl CsvRow for TraceMean {
    const HEADER: &'static [&'static str] = &["init_method", "iteration", "mean_err", "trials"];
    fn fields(&self) -> Vec<String> {
        vec![
            self.init_method.as_str().to_string(),
            self.iteration.to_string(),
            fmt_f64(self.mean_err),
            self.trials.to_string(),
        ]
    }
}

impl CsvRow for TracePoint {
    const HEADER: &'static [&'static str] = &["init_method", "seed", "iteration", "err"];
    fn fields(&self) -> Vec<String> {
        vec![
            self.init_method.as_str().to_string(),
            self.seed.to_string(),
            self.iteration.to_string(),
            fmt_f64(self.err),
        ]
    }
}

impl CsvRow for LemmaCheck {
    const HEADER: &'static [&'static str] = &["suite", "case", "quantity", "value", "bound", "passed"];
    fn fields(&self) -> Vec<String> {
        vec![
            self.suite.as_str().to_string(),
            self.case.clone(),
            self.quantity.clone(),
            fmt_f64(self.value),
            fmt_f64(self.bound),
            self.passed.to_string(),
        ]
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// Writes a header and one record per row, RFC-4180 quoted, `\n` terminated.
pub fn write_csv<T: CsvRow, W: Write>(out: W, rows: &[T]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(T::HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record(r.fields()).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string<T: CsvRow>(rows: &[T]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(&mut buf, rows)?;
    String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
}

pub fn write_csv_file<T: CsvRow>(path: &Path, rows: &[T]) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    write_csv(std::io::BufWriter::new(f), rows)
}

/// Samples as `x1..xk, y, z` with `z` = 1 for the first component.
pub fn write_samples_csv<W: Write>(out: W, samples: &SampleSet) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let obs = samples.observations();
    let mut header: Vec<String> = (1..=obs.k()).map(|j| format!("x{j}")).collect();
    header.extend(["y".to_string(), "z".to_string()]);
    w.write_record(&header).map_err(csv_err)?;
    for (i, label) in samples.labels().iter().enumerate() {
        let mut row: Vec<String> = obs.x(i).iter().map(|v| fmt_f64(*v)).collect();
        row.push(fmt_f64(obs.y(i)));
        row.push(if *label == Component::First { "1" } else { "0" }.to_string());
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// JSON number with 17 significant digits; non-finite values become `null`.
pub fn json_f64(x: f64) -> Value {
    if x.is_finite() {
        Value::Number(Number::from_str(&format!("{x:.16e}")).expect("formatted float parses"))
    } else {
        Value::Null
    }
}

/// Rewrites every non-integer number in `v` with 17 significant digits.
pub fn normalize_floats(v: Value) -> Value {
    match v {
        Value::Number(n) => {
            let text = n.to_string();
            if text.contains(['.', 'e', 'E']) {
                n.as_f64().map_or(Value::Number(n), json_f64)
            } else {
                Value::Number(n)
            }
        }
        Value::Array(a) => Value::Array(a.into_iter().map(normalize_floats).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, normalize_floats(v))).collect()),
        other => other,
    }
}

/// Serializes `value` to pretty JSON with normalized floats.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value).map_err(|e| Error::Io(e.to_string()))?;
    serde_json::to_string_pretty(&normalize_floats(v)).map_err(|e| Error::Io(e.to_string()))
}

pub fn write_json_file<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = to_json(value)?;
    std::fs::write(path, text + "\n").map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::LemmaSuite;

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(json_f64(0.5).to_string(), "5.0000000000000000e-1");
        assert_eq!(json_f64(f64::NAN), Value::Null);
        let v = normalize_floats(serde_json::json!({"a": 3, "b": [0.25]}));
        assert_eq!(v.to_string(), r#"{"a":3,"b":[2.5000000000000000e-1]}"#);
        // Round trip is exact.
        let x = 0.1 + 0.2;
        assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn csv_quotes_per_rfc4180() {
        let row = LemmaCheck {
            suite: LemmaSuite::Cone,
            case: "u=e1,v=e2".into(),
            quantity: "say \"hi\"".into(),
            value: 1.0,
            bound: 2.0,
            passed: true,
        };
        let s = csv_string(&[row]).unwrap();
        let line = s.lines().nth(1).unwrap();
        assert!(line.starts_with(r#"cone,"u=e1,v=e2","say ""hi""","#), "{line}");
    }
}
