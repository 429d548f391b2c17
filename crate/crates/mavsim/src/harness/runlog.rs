//! Columnar run log: uniform-rate time series of truth, sensors, estimate,
//! commands and battery, plus time-stamped event annotations. The text
//! serialization is deterministic byte for byte for a given run.

use crate::SimError;

/// Column names, fixed order. Lost-sensor samples are recorded as NaN.
pub const COLUMNS: &[&str] = &[
    "t",
    "pos_x",
    "pos_y",
    "pos_z",
    "vel_x",
    "vel_y",
    "vel_z",
    "roll",
    "pitch",
    "yaw",
    "gyro_x",
    "gyro_y",
    "gyro_z",
    "accel_x",
    "accel_y",
    "us_down",
    "us_side",
    "est_roll",
    "est_pitch",
    "est_bias_x",
    "est_bias_y",
    "cmd_throttle",
    "cmd_nick",
    "cmd_roll",
    "cmd_yaw",
    "motor_front",
    "motor_rear",
    "motor_right",
    "motor_left",
    "batt_v",
    "batt_mah",
    "height_contrib",
    "wall_corr",
];

pub const N_COLUMNS: usize = 33;

#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    /// One row per log tick, each exactly `N_COLUMNS` wide.
    pub rows: Vec<[f64; N_COLUMNS]>,
    /// (time, text) event annotations: faults, parameter updates,
    /// rejections, simulation milestones.
    pub annotations: Vec<(f64, String)>,
}

fn fmt_value(v: f64) -> String {
    // Display prints the shortest decimal that parses back to the exact
    // f64, and is locale-independent
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v}")
    }
}

impl RunLog {
    pub fn new() -> Self {
        Self {
            rows: Vec::new(),
            annotations: Vec::new(),
        }
    }

    pub fn column_index(name: &str) -> Option<usize> {
        COLUMNS.iter().position(|&c| c == name)
    }

    pub fn series(&self, name: &str) -> Result<Vec<f64>, SimError> {
        let idx = Self::column_index(name).ok_or_else(|| SimError::UnknownSeries {
            name: name.to_string(),
            available: COLUMNS.join(", "),
        })?;
        Ok(self.rows.iter().map(|r| r[idx]).collect())
    }

    /// Deterministic text form: header, column names, rows, annotations.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("# mavsim runlog v1\n");
        out.push_str(&COLUMNS.join(" "));
        out.push('\n');
        for row in &self.rows {
            let fields: Vec<String> = row.iter().map(|&v| fmt_value(v)).collect();
            out.push_str(&fields.join(" "));
            out.push('\n');
        }
        for (t, text) in &self.annotations {
            out.push_str(&format!("# event t={t:.6} {text}\n"));
        }
        out
    }

    pub fn from_text(s: &str) -> Result<Self, SimError> {
        let mut lines = s.lines();
        match lines.next() {
            Some("# mavsim runlog v1") => {}
            _ => return Err(SimError::Parse("missing runlog header".into())),
        }
        let header = lines
            .next()
            .ok_or_else(|| SimError::Parse("missing column line".into()))?;
        if header != COLUMNS.join(" ") {
            return Err(SimError::Parse("unexpected column set".into()));
        }
        let mut rows = Vec::new();
        let mut annotations = Vec::new();
        for line in lines {
            if let Some(rest) = line.strip_prefix("# event t=") {
                let (t_str, text) = rest
                    .split_once(' ')
                    .ok_or_else(|| SimError::Parse("malformed annotation".into()))?;
                let t: f64 = t_str
                    .parse()
                    .map_err(|_| SimError::Parse("bad annotation time".into()))?;
                annotations.push((t, text.to_string()));
                continue;
            }
            let mut row = [0.0; N_COLUMNS];
            let mut n = 0;
            for (i, field) in line.split_whitespace().enumerate() {
                if i >= N_COLUMNS {
                    return Err(SimError::Parse("row too wide".into()));
                }
                row[i] = if field == "nan" {
                    f64::NAN
                } else {
                    field
                        .parse()
                        .map_err(|_| SimError::Parse(format!("bad field `{field}`")))?
                };
                n += 1;
            }
            if n != N_COLUMNS {
                return Err(SimError::Parse(format!("row has {n} fields")));
            }
            rows.push(row);
        }
        Ok(Self { rows, annotations })
    }

    pub fn save(&self, path: &std::path::Path) -> Result<(), SimError> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self, SimError> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

impl Default for RunLog {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn column_count_matches() {
        assert_eq!(COLUMNS.len(), N_COLUMNS);
    }

    #[test]
    fn text_round_trip_exact() {
        let mut log = RunLog::new();
        let mut row = [0.0; N_COLUMNS];
        row[0] = 0.01;
        row[5] = -1.25e-3;
        row[15] = f64::NAN;
        log.rows.push(row);
        log.annotations.push((0.5, "fault sensor=accel".into()));
        let text = log.to_text();
        let back = RunLog::from_text(&text).unwrap();
        assert_eq!(back.rows.len(), 1);
        assert!(back.rows[0][15].is_nan());
        assert_eq!(back.rows[0][5], row[5]);
        assert_eq!(back.annotations, log.annotations);
        // serialization of the parse is byte-identical
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn unknown_series_lists_catalog() {
        let log = RunLog::new();
        let err = log.series("warp_factor").unwrap_err();
        assert!(err.to_string().contains("us_down"));
    }
}
