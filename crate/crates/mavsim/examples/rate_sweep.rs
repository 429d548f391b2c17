//! Sweep the regulation frequency over seeded hover runs: higher control
//! rates hold attitude visibly tighter under the same turbulence and
//! sensor defects.
//!
//! Run with: cargo run --release --example rate_sweep

use std::path::PathBuf;

use mavsim::harness::{run_scenario, ScenarioConfig};

fn main() {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/rate_hover.toml");
    let base = ScenarioConfig::load(&path).unwrap();

    println!("rms attitude error over 10 seeded 30 s hovers:");
    println!("  rate     mean      min      max");
    for rate in [50.0, 100.0, 200.0, 300.0] {
        let mut values = Vec::new();
        for seed in 1..=10 {
            let mut config = base.clone();
            config.control_rate_hz = rate;
            config.seed = seed;
            let (_, report) = run_scenario(&config).unwrap();
            values.push(report.get("rms_attitude_deg").unwrap());
        }
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        println!("  {rate:3.0} Hz  {mean:6.3}   {min:6.3}   {max:6.3}  deg");
    }
}
