//! Scenario orchestration: configuration files, the closed-loop runner, the
//! telemetry link model with in-flight parameter updates, run logging,
//! metrics, and plot-data emission.

pub mod config;
pub mod link;
pub mod metrics;
pub mod plots;
pub mod runlog;
pub mod runner;

pub use config::ScenarioConfig;
pub use link::TelemetryLink;
pub use metrics::MetricsReport;
pub use runlog::RunLog;
pub use runner::run_scenario;
