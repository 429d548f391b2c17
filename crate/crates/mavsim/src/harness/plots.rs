//! Columnar plot-data emission: one header line, numeric columns in a
//! fixed order, locale-independent formatting. Presets reproduce the
//! flight-log figures (gyro vs correction, height trace, wall distance vs
//! steering, start/landing profile).

use super::runlog::RunLog;
use crate::SimError;

/// Figure-reproduction presets and their column selections.
pub const PRESETS: &[(&str, &[&str])] = &[
    ("gyro_vs_correction", &["t", "gyro_x", "cmd_roll"]),
    ("height_trace", &["t", "us_down"]),
    ("wall_distance", &["t", "us_side", "cmd_roll"]),
    ("start_landing", &["t", "us_down", "cmd_throttle"]),
];

pub fn preset_columns(name: &str) -> Result<&'static [&'static str], SimError> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, cols)| *cols)
        .ok_or_else(|| SimError::UnknownSeries {
            name: name.to_string(),
            available: PRESETS
                .iter()
                .map(|(n, _)| *n)
                .collect::<Vec<_>>()
                .join(", "),
        })
}

/// Emit the selected series as columnar text. Errors on an empty selection
/// or unknown series name, listing the catalog.
pub fn emit_plot_data(log: &RunLog, selection: &[&str]) -> Result<String, SimError> {
    if selection.is_empty() {
        return Err(SimError::UnknownSeries {
            name: "<empty selection>".to_string(),
            available: super::runlog::COLUMNS.join(", "),
        });
    }
    let mut columns = Vec::with_capacity(selection.len());
    for name in selection {
        columns.push(log.series(name)?);
    }
    let mut out = String::new();
    out.push_str(&selection.join(" "));
    out.push('\n');
    let rows = columns.first().map(|c| c.len()).unwrap_or(0);
    for i in 0..rows {
        let fields: Vec<String> = columns
            .iter()
            .map(|c| {
                let v = c[i];
                if v.is_nan() {
                    "nan".to_string()
                } else {
                    format!("{v}")
                }
            })
            .collect();
        out.push_str(&fields.join(" "));
        out.push('\n');
    }
    Ok(out)
}

/// Parse a plot file back into (header names, column data).
pub fn parse_plot_data(s: &str) -> Result<(Vec<String>, Vec<Vec<f64>>), SimError> {
    let mut lines = s.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| SimError::Parse("empty plot file".into()))?
        .split_whitespace()
        .map(str::to_string)
        .collect();
    let mut columns = vec![Vec::new(); header.len()];
    for line in lines {
        for (i, field) in line.split_whitespace().enumerate() {
            if i >= columns.len() {
                return Err(SimError::Parse("plot row too wide".into()));
            }
            let v = if field == "nan" {
                f64::NAN
            } else {
                field
                    .parse()
                    .map_err(|_| SimError::Parse(format!("bad plot field `{field}`")))?
            };
            columns[i].push(v);
        }
    }
    Ok((header, columns))
}
