//! Export plot-ready columnar data from a finished run: the four figure
//! presets plus a custom column selection.
//!
//! Run with: cargo run --example plot_export

use std::path::PathBuf;

use mavsim::harness::plots::{emit_plot_data, preset_columns, PRESETS};
use mavsim::harness::{run_scenario, ScenarioConfig};

fn main() {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/chair_step.toml");
    let config = ScenarioConfig::load(&path).unwrap();
    let (log, _) = run_scenario(&config).unwrap();

    println!("available presets:");
    for (name, cols) in PRESETS {
        println!("  {name}: {}", cols.join(", "));
    }

    let out_dir = std::env::temp_dir().join("mavsim_plots");
    std::fs::create_dir_all(&out_dir).unwrap();
    for (name, _) in PRESETS {
        let cols = preset_columns(name).unwrap();
        let data = emit_plot_data(&log, cols).unwrap();
        let file = out_dir.join(format!("{name}.dat"));
        std::fs::write(&file, &data).unwrap();
        println!("wrote {} ({} lines)", file.display(), data.lines().count());
    }

    // custom selection: the ultrasonic dip with the true altitude alongside
    let custom = emit_plot_data(&log, &["t", "pos_z", "us_down"]).unwrap();
    println!("\nheight trace around the 0.6 m step (every 40th row):");
    for line in custom.lines().skip(1).step_by(40).take(8) {
        println!("  {line}");
    }
}
