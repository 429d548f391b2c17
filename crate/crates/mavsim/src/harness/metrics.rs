//! Run metrics and threshold-driven pass/fail. Thresholds live in the
//! scenario file, never here.

use std::collections::BTreeMap;

use super::config::ScenarioConfig;
use super::runlog::RunLog;

/// One threshold check.
#[derive(Debug, Clone)]
pub struct ThresholdResult {
    pub metric: String,
    pub value: f64,
    pub bound: String,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct MetricsReport {
    /// Metric name -> value; deterministic iteration order.
    pub values: BTreeMap<String, f64>,
    pub checks: Vec<ThresholdResult>,
    pub pass: bool,
}

impl MetricsReport {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }

    /// Structured text form, one `name = value` per line plus the verdicts.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# mavsim metrics v1\n");
        for (k, v) in &self.values {
            out.push_str(&format!("{k} = {v}\n"));
        }
        for c in &self.checks {
            out.push_str(&format!(
                "check {} = {} against {} -> {}\n",
                c.metric,
                c.value,
                c.bound,
                if c.pass { "pass" } else { "FAIL" }
            ));
        }
        out.push_str(&format!("pass = {}\n", self.pass));
        out
    }
}

fn rms(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut n = 0usize;
    for v in values {
        if v.is_finite() {
            sum += v * v;
            n += 1;
        }
    }
    if n == 0 {
        0.0
    } else {
        (sum / n as f64).sqrt()
    }
}

fn median(mut values: Vec<f64>) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    values[values.len() / 2]
}

fn peak_to_peak(values: &[f64]) -> f64 {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &v in values {
        if v.is_finite() {
            min = min.min(v);
            max = max.max(v);
        }
    }
    if min > max {
        0.0
    } else {
        max - min
    }
}

/// Extra facts the runner knows that are not in the log rows.
#[derive(Debug, Clone, Default)]
pub struct RunnerStats {
    pub deadline_miss_count: u64,
    pub max_jitter_us: u64,
    pub dropout_count_down: u64,
    pub dropout_count_side: u64,
    pub rejected_filter_updates: u64,
    pub telemetry_delivered: u64,
    pub telemetry_dropped: u64,
    pub endurance_estimate_min: f64,
}

/// Compute every metric from the finished log and check the thresholds.
pub fn compute_metrics(
    config: &ScenarioConfig,
    log: &RunLog,
    stats: &RunnerStats,
) -> MetricsReport {
    let mut values = BTreeMap::new();
    let t = log.series("t").unwrap();
    let roll = log.series("roll").unwrap();
    let pitch = log.series("pitch").unwrap();
    let pos_x = log.series("pos_x").unwrap();
    let pos_y = log.series("pos_y").unwrap();
    let pos_z = log.series("pos_z").unwrap();
    let us_down = log.series("us_down").unwrap();
    let us_side = log.series("us_side").unwrap();

    values.insert(
        "rms_roll_deg".into(),
        rms(roll.iter().map(|r| r.to_degrees())),
    );
    values.insert(
        "rms_pitch_deg".into(),
        rms(pitch.iter().map(|p| p.to_degrees())),
    );
    values.insert(
        "rms_attitude_deg".into(),
        rms(roll
            .iter()
            .zip(&pitch)
            .map(|(r, p)| (r * r + p * p).sqrt().to_degrees())),
    );

    // height statistics exclude zero readings (invisibility errors) and
    // lost-sensor NaNs
    let target = config.control.height.target_height;
    let height_errors: Vec<f64> = us_down
        .iter()
        .filter(|v| v.is_finite() && **v != 0.0)
        .map(|v| v - target)
        .collect();
    values.insert(
        "max_height_error_m".into(),
        height_errors.iter().fold(0.0f64, |m, e| m.max(e.abs())),
    );
    values.insert(
        "mean_height_error_m".into(),
        if height_errors.is_empty() {
            0.0
        } else {
            height_errors.iter().map(|e| e.abs()).sum::<f64>() / height_errors.len() as f64
        },
    );

    // altitude excursion against the starting altitude (truth)
    let z0 = pos_z.first().copied().unwrap_or(0.0);
    values.insert(
        "max_altitude_excursion_m".into(),
        pos_z.iter().fold(0.0f64, |m, z| m.max((z - z0).abs())),
    );

    // horizontal drift from the starting point
    let (x0, y0) = (
        pos_x.first().copied().unwrap_or(0.0),
        pos_y.first().copied().unwrap_or(0.0),
    );
    let drift: Vec<f64> = pos_x
        .iter()
        .zip(&pos_y)
        .map(|(x, y)| ((x - x0).powi(2) + (y - y0).powi(2)).sqrt())
        .collect();
    values.insert(
        "drift_distance_m".into(),
        drift.iter().fold(0.0f64, |m, d| m.max(*d)),
    );

    // wall metrics from truth when a wall exists
    if let Some(wall_y) = config.wall_y {
        let distances: Vec<f64> = pos_y.iter().map(|y| (y - wall_y).abs()).collect();
        let min_d = distances.iter().fold(f64::INFINITY, |m, d| m.min(*d));
        values.insert("min_wall_distance_m".into(), min_d);
        // transient after the closest approach: peak-to-peak distance over
        // the following 4 s
        let min_idx = distances
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(i, _)| i)
            .unwrap_or(0);
        let t_min = t.get(min_idx).copied().unwrap_or(0.0);
        let window: Vec<f64> = t
            .iter()
            .zip(&distances)
            .filter(|(ti, _)| **ti >= t_min && **ti <= t_min + 4.0)
            .map(|(_, d)| *d)
            .collect();
        values.insert("wall_transient_p2p_m".into(), peak_to_peak(&window));
    }

    // oscillation of truth altitude over the final 10 s
    let t_end = t.last().copied().unwrap_or(0.0);
    let tail: Vec<f64> = t
        .iter()
        .zip(&pos_z)
        .filter(|(ti, _)| **ti >= t_end - 10.0)
        .map(|(_, z)| *z)
        .collect();
    values.insert("altitude_p2p_last10s_m".into(), peak_to_peak(&tail));

    // reading dip between configured windows (chair-step reproduction)
    if let (Some(base), Some(dip)) = (config.dip_baseline_window, config.dip_window) {
        let in_window = |w: super::config::TimeWindow, ti: f64| ti >= w.from_s && ti <= w.to_s;
        let base_vals: Vec<f64> = t
            .iter()
            .zip(&us_down)
            .filter(|(ti, v)| in_window(base, **ti) && v.is_finite() && **v != 0.0)
            .map(|(_, v)| *v)
            .collect();
        let dip_vals: Vec<f64> = t
            .iter()
            .zip(&us_down)
            .filter(|(ti, v)| in_window(dip, **ti) && v.is_finite() && **v != 0.0)
            .map(|(_, v)| *v)
            .collect();
        values.insert("reading_dip_m".into(), median(base_vals) - median(dip_vals));
    }

    let count_zeros = |s: &[f64]| s.iter().filter(|v| **v == 0.0).count() as f64;
    values.insert("logged_zero_readings_down".into(), count_zeros(&us_down));
    values.insert("logged_zero_readings_side".into(), count_zeros(&us_side));
    values.insert("dropout_count_down".into(), stats.dropout_count_down as f64);
    values.insert("dropout_count_side".into(), stats.dropout_count_side as f64);
    values.insert(
        "deadline_miss_count".into(),
        stats.deadline_miss_count as f64,
    );
    values.insert("max_jitter_us".into(), stats.max_jitter_us as f64);
    values.insert(
        "rejected_filter_updates".into(),
        stats.rejected_filter_updates as f64,
    );
    values.insert(
        "telemetry_delivered".into(),
        stats.telemetry_delivered as f64,
    );
    values.insert("telemetry_dropped".into(), stats.telemetry_dropped as f64);
    values.insert(
        "endurance_estimate_min".into(),
        stats.endurance_estimate_min,
    );

    let mut checks = Vec::new();
    let mut pass = true;
    for (name, bound) in &config.thresholds {
        let value = values.get(name).copied().unwrap_or(f64::NAN);
        let mut ok = value.is_finite();
        let mut desc = Vec::new();
        if let Some(max) = bound.max {
            ok &= value <= max;
            desc.push(format!("max {max}"));
        }
        if let Some(min) = bound.min {
            ok &= value >= min;
            desc.push(format!("min {min}"));
        }
        pass &= ok;
        checks.push(ThresholdResult {
            metric: name.clone(),
            value,
            bound: desc.join(", "),
            pass: ok,
        });
    }

    MetricsReport {
        values,
        checks,
        pass,
    }
}
