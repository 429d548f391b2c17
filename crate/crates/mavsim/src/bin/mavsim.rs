//! Command-line front end: run scenarios, sweep a parameter, validate
//! configs, emit plot data, and print the power budget and scaling tables.
//!
//! Exit code 0 means every threshold passed; failures exit nonzero after a
//! machine-readable summary on stdout.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mavsim::airframe::{
    default_component_powers, power_budget, scaling_feasibility, BatteryState,
};
use mavsim::harness::config::{apply_param, ScenarioConfig};
use mavsim::harness::plots::{emit_plot_data, preset_columns, PRESETS};
use mavsim::harness::runlog::RunLog;
use mavsim::harness::runner::run_scenario;
use mavsim::SimError;

#[derive(Parser)]
#[command(name = "mavsim", about = "Deterministic quadrotor simulation harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and report metrics against its thresholds.
    Run(RunArgs),
    /// Run a scenario once per value of one tunable parameter.
    Sweep(SweepArgs),
    /// Validate a scenario file without running it.
    Validate { config: PathBuf },
    /// Emit plot data from a saved run log.
    Plots(PlotArgs),
    /// Print the component power budget and ideal endurance.
    Budget,
    /// Apply the miniaturization scaling laws to a target diameter.
    Scale {
        /// Target airframe diameter, m.
        #[arg(long)]
        diameter: f64,
    },
}

#[derive(Args)]
struct RunArgs {
    config: PathBuf,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for runlog.txt, metrics.txt and the resolved config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    config: PathBuf,
    /// Dot path of the parameter to sweep, e.g. control.height.kp.
    #[arg(long)]
    param: String,
    /// Comma-separated values.
    #[arg(long, value_delimiter = ',')]
    values: Vec<f64>,
    /// Directory for per-value run logs.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    runlog: PathBuf,
    /// Preset name; see --list.
    #[arg(long)]
    preset: Option<String>,
    /// Explicit comma-separated column selection instead of a preset.
    #[arg(long, value_delimiter = ',')]
    columns: Vec<String>,
    /// List available presets and exit.
    #[arg(long)]
    list: bool,
    /// Write to a file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn cmd_run(args: &RunArgs) -> Result<bool, SimError> {
    let mut config = ScenarioConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let (log, metrics) = run_scenario(&config)?;
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir)?;
        log.save(&dir.join("runlog.txt"))?;
        std::fs::write(dir.join("metrics.txt"), metrics.to_text())?;
        std::fs::write(dir.join("config.toml"), config.to_toml_string())?;
    }
    print!("{}", metrics.to_text());
    Ok(metrics.pass)
}

fn cmd_sweep(args: &SweepArgs) -> Result<bool, SimError> {
    if args.values.is_empty() {
        return Err(SimError::domain("sweep: --values must not be empty"));
    }
    let base = ScenarioConfig::load(&args.config)?;
    // structural knobs sweep directly; everything else goes through the
    // tunable-parameter whitelist. Reject bad paths before burning time.
    let structural = matches!(args.param.as_str(), "control_rate_hz" | "seed");
    if !structural {
        let mut probe = base.control.clone();
        apply_param(&mut probe, &args.param, args.values[0])?;
    }
    let mut all_pass = true;
    println!("# sweep {} over {:?}", args.param, args.values);
    for &value in &args.values {
        let mut config = base.clone();
        match args.param.as_str() {
            "control_rate_hz" => config.control_rate_hz = value,
            "seed" => config.seed = value as u64,
            _ => apply_param(&mut config.control, &args.param, value)?,
        }
        let (log, metrics) = run_scenario(&config)?;
        if let Some(dir) = &args.out {
            std::fs::create_dir_all(dir)?;
            log.save(&dir.join(format!("runlog_{value}.txt")))?;
            std::fs::write(dir.join(format!("metrics_{value}.txt")), metrics.to_text())?;
        }
        all_pass &= metrics.pass;
        println!(
            "{} = {} rms_attitude_deg = {} max_height_error_m = {} altitude_p2p_last10s_m = {} -> {}",
            args.param,
            value,
            metrics.get("rms_attitude_deg").unwrap_or(f64::NAN),
            metrics.get("max_height_error_m").unwrap_or(f64::NAN),
            metrics.get("altitude_p2p_last10s_m").unwrap_or(f64::NAN),
            if metrics.pass { "pass" } else { "FAIL" }
        );
    }
    Ok(all_pass)
}

fn cmd_plots(args: &PlotArgs) -> Result<bool, SimError> {
    if args.list {
        for (name, cols) in PRESETS {
            println!("{name}: {}", cols.join(" "));
        }
        return Ok(true);
    }
    let log = RunLog::load(&args.runlog)?;
    let selection: Vec<&str> = if let Some(preset) = &args.preset {
        preset_columns(preset)?.to_vec()
    } else {
        args.columns.iter().map(String::as_str).collect()
    };
    let text = emit_plot_data(&log, &selection)?;
    match &args.out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(true)
}

fn cmd_budget() -> Result<bool, SimError> {
    let budget = power_budget(&default_component_powers(), &BatteryState::default())?;
    println!("# power budget");
    for (c, share) in budget.components.iter().zip(&budget.shares) {
        println!("{} = {} W ({:.1}%)", c.name, c.watts, share * 100.0);
    }
    println!("total = {} W", budget.total_watts);
    println!("endurance_ideal_min = {:.2}", budget.endurance_min);
    Ok(true)
}

fn cmd_scale(diameter: f64) -> Result<bool, SimError> {
    let reference = mavsim::airframe::AirframeConfig::default();
    let r = scaling_feasibility(&reference, diameter)?;
    println!("# scaling {} m -> {} m", r.reference_diameter, r.target_diameter);
    println!("linear_scale = {}", r.linear_scale);
    println!("area_ratio = {}", r.area_ratio);
    println!("mass_ratio = {}", r.mass_ratio);
    println!("required_thrust_ratio = {}", r.required_thrust_ratio);
    println!("available_thrust_ratio = {}", r.available_thrust_ratio);
    println!("thrust_margin_ratio = {}", r.thrust_margin_ratio);
    println!("energy_ratio = {}", r.energy_ratio);
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Validate { config } => {
            ScenarioConfig::load(config).map(|c| {
                println!("ok: scenario `{}` is valid", c.name);
                true
            })
        }
        Command::Plots(args) => cmd_plots(args),
        Command::Budget => cmd_budget(),
        Command::Scale { diameter } => cmd_scale(*diameter),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            println!("result = FAIL");
            ExitCode::from(1)
        }
        Err(e) => {
            println!("error = {e}");
            ExitCode::from(2)
        }
    }
}
