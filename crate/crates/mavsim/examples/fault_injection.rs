//! Fault handling end to end: losing the accelerometer degrades the
//! estimate gracefully, losing the gyro cuts the motors, and a lost output
//! timer either runs away or gets clamped by the watchdog.
//!
//! Run with: cargo run --example fault_injection

use std::path::PathBuf;

use mavsim::harness::{run_scenario, ScenarioConfig};

fn show(name: &str) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(format!("../../scenarios/{name}.toml"));
    let config = ScenarioConfig::load(&path).unwrap();
    let (log, report) = run_scenario(&config).unwrap();
    println!("`{name}`:");
    for (t, text) in &log.annotations {
        println!("  [{t:8.3}s] {text}");
    }
    for metric in ["drift_distance_m", "max_altitude_excursion_m", "rms_attitude_deg"] {
        if let Some(v) = report.get(metric) {
            println!("  {metric} = {v:.3}");
        }
    }
    println!();
}

fn main() {
    show("fusion_accel_loss");
    show("timing_fault");
    show("timing_fault_watchdog");
}
