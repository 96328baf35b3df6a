//! Rendering of command results as JSON or CSV.

use serde::Serialize;
use warpcurv::{EstimateReport, GraphPointReport};

use crate::config::Format;
use crate::CliError;

/// Decimal rendering with 15 significant digits; scientific outside
/// `1e-5 ≤ |v| < 1e15`.
pub fn num(v: f64) -> String {
    if v.is_nan() {
        return "NaN".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.14e}", v);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let e: i32 = exp.parse().expect("exponent is an integer");
    if (-5..15).contains(&e) {
        let s = format!("{:.*}", (14 - e) as usize, v);
        trim_zeros(&s)
    } else {
        format!("{}e{}", trim_zeros(mantissa), e)
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

#[derive(Debug, Clone, Serialize)]
pub struct SliceRow {
    pub t: f64,
    #[serde(rename = "H")]
    pub h: f64,
    #[serde(rename = "Kperp")]
    pub kperp: f64,
    pub sigma_numeric: f64,
    pub sigma_closed: Option<f64>,
    pub residual: Option<f64>,
}

/// One verification report together with the graph it was run on.
#[derive(Debug, Clone, Serialize)]
pub struct Entry {
    pub graph: String,
    #[serde(flatten)]
    pub report: EstimateReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelInfo {
    pub name: String,
    pub notes: String,
    pub interval: [Option<f64>; 2],
    pub ambient_sectional: Option<f64>,
}

pub enum Document {
    Point(GraphPointReport),
    SliceTable(Vec<SliceRow>),
    Verify(Vec<Entry>),
    Models(Vec<ModelInfo>),
}

fn csv_string(header: &[String], rows: Vec<Vec<String>>) -> Result<String, CliError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
    w.write_record(header).map_err(|e| CliError::Io(e.to_string()))?;
    for r in rows {
        w.write_record(&r).map_err(|e| CliError::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))
}

fn json<T: Serialize>(v: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| CliError::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

impl Document {
    pub fn render(&self, format: Format) -> Result<String, CliError> {
        match format {
            Format::Json => match self {
                Document::Point(r) => json(r),
                Document::SliceTable(rows) => json(rows),
                Document::Verify(entries) => json(entries),
                Document::Models(models) => json(models),
            },
            Format::Csv => self.csv(),
        }
    }

    fn csv(&self) -> Result<String, CliError> {
        let h = |names: &[&str]| names.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        match self {
            Document::Point(r) => {
                let mut rows = Vec::new();
                let mut push = |k: String, v: f64| rows.push(vec![k, num(v)]);
                for (i, v) in r.x.iter().enumerate() {
                    push(format!("x{}", i + 1), *v);
                }
                push("f".into(), r.f_val);
                push("W".into(), r.w);
                push("theta".into(), r.theta);
                for (i, v) in r.eta.iter().enumerate() {
                    push(format!("eta{}", i + 1), *v);
                }
                for (i, v) in r.lambdas.iter().enumerate() {
                    push(format!("lambda{}", i + 1), *v);
                }
                push("H".into(), r.h);
                if let Some(v) = r.h2 {
                    push("H2".into(), v);
                }
                if let Some(v) = r.r {
                    push("R".into(), v);
                }
                push("normA".into(), r.norm_a);
                push("fhat".into(), r.fhat);
                push("What".into(), r.what);
                for (i, v) in r.lambdahats.iter().enumerate() {
                    push(format!("lambdahat{}", i + 1), *v);
                }
                push("Hhat".into(), r.hhat);
                csv_string(&h(&["quantity", "value"]), rows)
            }
            Document::SliceTable(rows) => csv_string(
                &h(&["t", "H", "Kperp", "sigma_numeric", "sigma_closed", "residual"]),
                rows.iter()
                    .map(|r| {
                        vec![num(r.t), num(r.h), num(r.kperp), num(r.sigma_numeric), opt(r.sigma_closed), opt(r.residual)]
                    })
                    .collect(),
            ),
            Document::Verify(entries) => csv_string(
                &h(&["graph", "name", "verdict", "lhs", "rhs", "margin", "tolerance", "branch"]),
                entries
                    .iter()
                    .map(|e| {
                        let r = &e.report;
                        vec![
                            e.graph.clone(),
                            r.name.clone(),
                            verdict_name(r),
                            num(r.lhs),
                            num(r.rhs),
                            num(r.margin),
                            num(r.tolerance),
                            r.branch.clone(),
                        ]
                    })
                    .collect(),
            ),
            Document::Models(models) => csv_string(
                &h(&["name", "interval_lo", "interval_hi", "ambient_sectional", "notes"]),
                models
                    .iter()
                    .map(|m| vec![m.name.clone(), opt(m.interval[0]), opt(m.interval[1]), opt(m.ambient_sectional), m.notes.clone()])
                    .collect(),
            ),
        }
    }
}

pub fn verdict_name(r: &EstimateReport) -> String {
    serde_json::to_value(r.verdict)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fifteen_significant_digits() {
        assert_eq!(num(std::f64::consts::FRAC_PI_2), "1.5707963267949");
        assert_eq!(num(0.7615941559557649), "0.761594155955765");
        assert_eq!(num(1.0), "1");
        assert_eq!(num(-1.0), "-1");
        assert_eq!(num(0.0), "0");
        assert_eq!(num(1.5e-9), "1.5e-9");
        assert_eq!(num(2.5e20), "2.5e20");
        assert_eq!(num(f64::NAN), "NaN");
        assert_eq!(num(123456.789), "123456.789");
    }
}
