//! Scan tables and their CSV form.
//!
//! Column order is fixed: `value`, `quantum_roughness`, `spade_roughness`,
//! `direct_imaging_roughness`, `empirical_rescaled_variance`,
//! `empirical_ratio`, `status`. Numbers carry 12 significant digits; missing
//! values are empty fields.

use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const COLUMNS: [&str; 7] = [
    "value",
    "quantum_roughness",
    "spade_roughness",
    "direct_imaging_roughness",
    "empirical_rescaled_variance",
    "empirical_ratio",
    "status",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RowStatus {
    Ok,
    /// The roughness parametrization is singular at this grid point.
    Divergent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub value: f64,
    pub quantum_roughness: Option<f64>,
    pub spade_roughness: Option<f64>,
    pub direct_imaging_roughness: Option<f64>,
    pub empirical_rescaled_variance: Option<f64>,
    pub empirical_ratio: Option<f64>,
    pub status: RowStatus,
}

/// `x` with 12 significant digits, like C's `%.12g`.
pub fn format_sig(x: f64) -> String {
    const DIGITS: i32 = 12;
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..DIGITS).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    } else {
        trim_zeros(&format!("{:.*}", (DIGITS - 1 - exp) as usize, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn cell(x: Option<f64>) -> String {
    x.map(format_sig).unwrap_or_default()
}

pub fn write_csv(rows: &[ScanRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(COLUMNS).map_err(io)?;
    for r in rows {
        let status = match r.status {
            RowStatus::Ok => "ok",
            RowStatus::Divergent => "divergent",
        };
        w.write_record([
            format_sig(r.value),
            cell(r.quantum_roughness),
            cell(r.spade_roughness),
            cell(r.direct_imaging_roughness),
            cell(r.empirical_rescaled_variance),
            cell(r.empirical_ratio),
            status.to_string(),
        ])
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn parse_csv(text: &str) -> Result<Vec<ScanRow>> {
    let bad = |msg: String| CliError::Validation(format!("scan csv: {msg}"));
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| bad(e.to_string()))?;
    if header.iter().ne(COLUMNS) {
        return Err(bad(format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let num = |i: usize| -> Result<Option<f64>> {
            let f = &rec[i];
            if f.is_empty() {
                return Ok(None);
            }
            f.parse()
                .map(Some)
                .map_err(|_| bad(format!("row {}: column {} is not a number: {f:?}", line + 1, COLUMNS[i])))
        };
        let status = match &rec[6] {
            "ok" => RowStatus::Ok,
            "divergent" => RowStatus::Divergent,
            s => return Err(bad(format!("row {}: unknown status {s:?}", line + 1))),
        };
        rows.push(ScanRow {
            value: num(0)?.ok_or_else(|| bad(format!("row {}: missing value", line + 1)))?,
            quantum_roughness: num(1)?,
            spade_roughness: num(2)?,
            direct_imaging_roughness: num(3)?,
            empirical_rescaled_variance: num(4)?,
            empirical_ratio: num(5)?,
            status,
        });
    }
    Ok(rows)
}
