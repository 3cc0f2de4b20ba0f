//! Convergence reports over residual-sweep and drift tables.

use hitchin_core::fit::{linear_fit, LinearFit};
use hitchin_core::Error;
use serde::Serialize;
use std::fmt;
use std::str::FromStr;

/// Smallest R² accepted for a residual decay fit.
pub const MIN_R_SQUARED: f64 = 0.99;
/// Largest accepted ratio max/min of `drift·log t`.
pub const MAX_DRIFT_VARIATION: f64 = 2.0;

/// Abscissa of a fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Abscissa {
    /// `t^{2/3}`.
    T23,
    /// `t`.
    T,
    /// `1/log t`.
    InvLogT,
    /// The `t_pow` column of a residual sweep.
    TPow,
}

impl Abscissa {
    fn eval(self, t: f64, t_pow: Option<f64>) -> Option<f64> {
        match self {
            Abscissa::T23 => Some(t.powf(2.0 / 3.0)),
            Abscissa::T => Some(t),
            Abscissa::InvLogT => Some(1.0 / t.ln()),
            Abscissa::TPow => t_pow,
        }
    }
}

impl fmt::Display for Abscissa {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Abscissa::T23 => "t23",
            Abscissa::T => "t",
            Abscissa::InvLogT => "invlogt",
            Abscissa::TPow => "tpow",
        })
    }
}

impl FromStr for Abscissa {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "t23" => Ok(Abscissa::T23),
            "t" => Ok(Abscissa::T),
            "invlogt" => Ok(Abscissa::InvLogT),
            "tpow" => Ok(Abscissa::TPow),
            other => Err(format!(
                "unknown series tag '{other}' (expected t23, t, invlogt or tpow)"
            )),
        }
    }
}

/// Kind of table, recognized from its header.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SeriesKind {
    Residual,
    Drift,
}

/// A parsed table: `t`, the optional `t_pow` column and the fitted quantity.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub kind: SeriesKind,
    pub t: Vec<f64>,
    pub t_pow: Option<Vec<f64>>,
    pub y: Vec<f64>,
}

/// Parses a residual (`t, t_pow, max_residual`) or drift (`t, drift, …`) CSV.
/// Errors name the offending 1-based line.
pub fn parse_series(text: &str) -> Result<Series, Error> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = rdr
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let t_col = col("t").ok_or(Error::Parse {
        line: 1,
        message: "missing column 't'".into(),
    })?;
    let (kind, y_col) = match (col("max_residual"), col("drift")) {
        (Some(c), _) => (SeriesKind::Residual, c),
        (None, Some(c)) => (SeriesKind::Drift, c),
        (None, None) => {
            return Err(Error::Parse {
                line: 1,
                message: "expected a 'max_residual' or 'drift' column".into(),
            })
        }
    };
    let tp_col = col("t_pow");
    let mut s = Series {
        kind,
        t: Vec::new(),
        t_pow: tp_col.map(|_| Vec::new()),
        y: Vec::new(),
    };
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let field = |c: usize| -> Result<f64, Error> {
            let raw = rec.get(c).unwrap_or("");
            raw.parse::<f64>().map_err(|_| Error::Parse {
                line,
                message: format!("'{}' in column '{}' is not a number", raw, &headers[c]),
            })
        };
        s.t.push(field(t_col)?);
        s.y.push(field(y_col)?);
        if let (Some(c), Some(v)) = (tp_col, s.t_pow.as_mut()) {
            v.push(field(c)?);
        }
    }
    if s.t.is_empty() {
        return Err(Error::Parse {
            line: 2,
            message: "no data rows".into(),
        });
    }
    Ok(s)
}

/// Verdict on one series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesReport {
    pub input: String,
    pub kind: SeriesKind,
    pub abscissa: Abscissa,
    pub n: usize,
    /// Fit of `log y` against the abscissa; absent for an all-zero series.
    pub fit: Option<LinearFit>,
    /// `max/min` of `drift·log t` for drift series.
    pub drift_variation: Option<f64>,
    pub status: &'static str,
    pub note: String,
}

/// Whole report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub series: Vec<SeriesReport>,
    pub overall: &'static str,
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

/// Fits and judges one series. The default abscissa is `t_pow` when present,
/// otherwise `t^{2/3}` for residuals and `1/log t` for drift.
pub fn assess(input: &str, s: &Series, tag: Option<Abscissa>) -> Result<SeriesReport, Error> {
    let abscissa = tag.unwrap_or(match (s.kind, &s.t_pow) {
        (SeriesKind::Residual, Some(_)) => Abscissa::TPow,
        (SeriesKind::Residual, None) => Abscissa::T23,
        (SeriesKind::Drift, _) => Abscissa::InvLogT,
    });
    let mut x = Vec::with_capacity(s.t.len());
    for (k, &t) in s.t.iter().enumerate() {
        let tp = s.t_pow.as_ref().map(|v| v[k]);
        x.push(
            abscissa.eval(t, tp).ok_or_else(|| {
                Error::Config(format!("{input}: tag 'tpow' needs a 't_pow' column"))
            })?,
        );
    }
    let mut report = SeriesReport {
        input: input.to_string(),
        kind: s.kind,
        abscissa,
        n: s.t.len(),
        fit: None,
        drift_variation: None,
        status: "FAIL",
        note: String::new(),
    };
    if s.kind == SeriesKind::Drift && s.y.iter().all(|&y| y == 0.0) {
        report.status = "PASS";
        report.note = "all-zero drift".into();
        return Ok(report);
    }
    if s.y.iter().any(|&y| y.is_nan() || y <= 0.0) {
        report.note = "non-positive values cannot be fitted on a log scale".into();
        return Ok(report);
    }
    let logy: Vec<f64> = s.y.iter().map(|y| y.ln()).collect();
    let fit = linear_fit(&x, &logy)?;
    report.fit = Some(fit);
    match s.kind {
        SeriesKind::Residual => {
            report.status = verdict(fit.slope < 0.0 && fit.r_squared >= MIN_R_SQUARED);
            report.note = format!("slope < 0 and R² ≥ {MIN_R_SQUARED}");
        }
        SeriesKind::Drift => {
            let prods: Vec<f64> = s.t.iter().zip(&s.y).map(|(t, y)| y * t.ln()).collect();
            let hi = prods.iter().cloned().fold(f64::MIN, f64::max);
            let lo = prods.iter().cloned().fold(f64::MAX, f64::min);
            let var = hi / lo;
            report.drift_variation = Some(var);
            report.status = verdict(lo > 0.0 && var <= MAX_DRIFT_VARIATION);
            report.note = format!("max/min of drift·log t ≤ {MAX_DRIFT_VARIATION}");
        }
    }
    Ok(report)
}

/// Combines per-series verdicts.
pub fn combine(series: Vec<SeriesReport>) -> ConvergenceReport {
    let overall = verdict(series.iter().all(|s| s.status == "PASS"));
    ConvergenceReport { series, overall }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exponential_slope() {
        let mut text = String::from("t,t_pow,max_residual\n");
        for t in [4.0f64, 8.0, 16.0, 32.0] {
            let tp = t.powf(2.0 / 3.0);
            text += &format!("{t},{tp},{}\n", (0.3 - 1.7 * tp).exp());
        }
        let s = parse_series(&text).unwrap();
        let r = assess("x", &s, None).unwrap();
        let fit = r.fit.unwrap();
        assert!((fit.slope + 1.7).abs() < 1e-6);
        assert_eq!(r.status, "PASS");
    }

    #[test]
    fn zero_drift_passes_trivially() {
        let s = parse_series("t,drift,drift_times_log_t\n100,0,0\n10000,0,0\n").unwrap();
        let r = assess("d", &s, None).unwrap();
        assert_eq!(r.status, "PASS");
        assert!(r.fit.is_none());
    }

    #[test]
    fn drift_variation_is_judged() {
        let s = parse_series("t,drift\n100,0.1\n10000,0.2\n").unwrap();
        let r = assess("d", &s, None).unwrap();
        assert!((r.drift_variation.unwrap() - 4.0).abs() < 1e-12);
        assert_eq!(r.status, "FAIL");
    }

    #[test]
    fn malformed_row_names_its_line() {
        let err = parse_series("t,t_pow,max_residual\n1,1,0.5\n2,oops,0.25\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err:?}");
        let err = parse_series("t,t_pow,max_residual\n1,1,0.5\n2,2\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err:?}");
    }

    #[test]
    fn header_must_name_a_series() {
        assert!(matches!(
            parse_series("t,y\n1,2\n"),
            Err(Error::Parse { line: 1, .. })
        ));
    }
}
