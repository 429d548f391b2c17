//! Run a complete closed-loop scenario from a configuration file and print
//! the metrics report with its threshold verdicts.
//!
//! Run with: cargo run --example scenario_run [scenario.toml]
//! (defaults to scenarios/hover.toml)

use std::path::PathBuf;

use mavsim::harness::{run_scenario, ScenarioConfig};

fn main() {
    let path = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/hover.toml")
    });
    let config = match ScenarioConfig::load(&path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    };
    println!("scenario `{}`: {} s at seed {}", config.name, config.duration_s, config.seed);

    let (log, report) = match run_scenario(&config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    };
    println!("{} log rows, {} annotations", log.rows.len(), log.annotations.len());
    for (t, text) in &log.annotations {
        println!("  [{t:8.3}s] {text}");
    }
    println!("\n{}", report.to_text());
    std::process::exit(if report.pass { 0 } else { 1 });
}
