//! Long-format result tables, CSV output and run manifests.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::config::ExperimentSpec;
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 9] = ["x_name", "x", "y_name", "y", "metric", "value", "trials", "half_width", "note"];

/// One metric at one sweep point. `y` is the second axis of two-dimensional
/// sweeps and empty otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub x_name: String,
    pub x: f64,
    pub y_name: String,
    pub y: Option<f64>,
    pub metric: String,
    pub value: f64,
    pub trials: usize,
    pub half_width: f64,
    pub note: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultTable {
    pub rows: Vec<Row>,
}

/// A sweep coordinate, one- or two-dimensional.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub x_name: &'static str,
    pub x: f64,
    pub y: Option<(&'static str, f64)>,
}

impl Point {
    pub fn new(x_name: &'static str, x: f64) -> Self {
        Self { x_name, x, y: None }
    }

    pub fn with_y(mut self, name: &'static str, y: f64) -> Self {
        self.y = Some((name, y));
        self
    }
}

impl ResultTable {
    pub fn push(&mut self, p: &Point, metric: &str, value: f64, trials: usize, half_width: f64) {
        self.rows.push(Row {
            x_name: p.x_name.into(),
            x: p.x,
            y_name: p.y.map(|y| y.0.to_string()).unwrap_or_default(),
            y: p.y.map(|y| y.1),
            metric: metric.into(),
            value,
            trials,
            half_width,
            note: String::new(),
        });
    }

    /// Marks a sweep point that could not be run; the run continues.
    pub fn push_error(&mut self, p: &Point, trials: usize, message: &str) {
        self.push(p, "error", f64::NAN, trials, f64::NAN);
        self.rows.last_mut().expect("just pushed").note = message.into();
    }

    pub fn extend(&mut self, other: ResultTable) {
        self.rows.extend(other.rows);
    }

    /// Rows of one metric, in table order.
    pub fn metric(&self, name: &str) -> Vec<&Row> {
        self.rows.iter().filter(|r| r.metric == name).collect()
    }

    /// Value of `metric` at the point with the given coordinates.
    pub fn value(&self, metric: &str, x: f64, y: Option<f64>) -> Option<f64> {
        self.rows.iter().find(|r| r.metric == metric && r.x == x && r.y == y).map(|r| r.value)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(CSV_HEADER)?;
        for r in &self.rows {
            out.write_record([
                r.x_name.clone(),
                fmt_sig9(r.x),
                r.y_name.clone(),
                r.y.map(fmt_sig9).unwrap_or_default(),
                r.metric.clone(),
                fmt_sig9(r.value),
                r.trials.to_string(),
                fmt_sig9(r.half_width),
                r.note.clone(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Nine significant digits in the style of `%.9g`.
pub fn fmt_sig9(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.8e}");
    let (mant, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(&format!("{v:.decimals$}"))
    } else {
        let m = trim_zeros(mant);
        format!("{m}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    kind: &'static str,
    seed: u64,
    trials: usize,
    csv: String,
    rows: usize,
    spec: &'a ExperimentSpec,
}

/// Run manifest: the resolved configuration, seed and tool version.
pub fn manifest_toml(spec: &ExperimentSpec, csv_path: &Path, table: &ResultTable) -> Result<String> {
    let m = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        kind: spec.kind.name(),
        seed: spec.seed,
        trials: spec.trials,
        csv: csv_path.display().to_string(),
        rows: table.rows.len(),
        spec,
    };
    toml::to_string(&m).map_err(|e| Error::Config(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(fmt_sig9(-20.5), "-20.5");
        assert_eq!(fmt_sig9(5.3827e-7), "5.3827e-07");
        assert_eq!(fmt_sig9(1.0 / 3.0), "0.333333333");
        assert_eq!(fmt_sig9(123456789.0), "123456789");
        assert_eq!(fmt_sig9(1.234567891e9), "1.23456789e+09");
        assert_eq!(fmt_sig9(0.0), "0");
        assert_eq!(fmt_sig9(1e-4), "0.0001");
        assert_eq!(fmt_sig9(f64::NAN), "nan");
    }

    proptest::proptest! {
        #[test]
        fn formatting_keeps_nine_digits(v in -1e12f64..1e12) {
            let back: f64 = fmt_sig9(v).parse().unwrap();
            proptest::prop_assert!((back - v).abs() <= 5e-9 * v.abs().max(1e-300));
        }
    }

    #[test]
    fn csv_has_header_and_error_rows() {
        let mut t = ResultTable::default();
        let p = Point::new("scnr_db", -3.0);
        t.push(&p, "pd", 0.5, 10, 0.31);
        t.push_error(&Point::new("cpi_s", 1e-5).with_y("frames", 3.0), 0, "frame too short");
        let s = t.to_csv_string().unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "x_name,x,y_name,y,metric,value,trials,half_width,note");
        assert_eq!(lines[1], "scnr_db,-3,,,pd,0.5,10,0.31,");
        assert_eq!(lines[2], "cpi_s,1e-05,frames,3,error,nan,0,nan,frame too short");
    }
}
