//! Scenario configuration: a versioned TOML schema covering every block of
//! the simulator, with validation that reports field paths.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

use crate::airframe::{AirframeConfig, BatteryState, Environment, MotorState, PropellerDisk};
use crate::control::{
    AttitudeGains, HeightControlConfig, PositionHoldConfig, WallAvoidConfig,
};
use crate::estimator::FilterTuning;
use crate::scheduler::TimingFault;
use crate::sensors::{AccelModel, FaultSpec, GyroModel, UltrasonicModel, VibrationSource};
use crate::SimError;

pub const CONFIG_VERSION: u32 = 1;

/// Initial vehicle state.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct InitialState {
    pub position: [f64; 3],
    pub velocity: [f64; 3],
}

impl Default for InitialState {
    fn default() -> Self {
        Self {
            position: [0.0, 0.0, 1.0],
            velocity: [0.0; 3],
        }
    }
}

/// One knot of the piecewise-linear pilot input profile. In angle mode the
/// nick/roll values are angle setpoints (rad); in rate mode, rate demands.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct PilotKnot {
    pub t: f64,
    pub throttle: f64,
    pub nick: f64,
    pub roll: f64,
    pub yaw: f64,
}

impl Default for PilotKnot {
    fn default() -> Self {
        Self {
            t: 0.0,
            throttle: 0.0,
            nick: 0.0,
            roll: 0.0,
            yaw: 0.0,
        }
    }
}

/// Piecewise-constant ground height: the segment starting at `from_x`
/// (world x, m) has the given height.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TerrainSegment {
    pub from_x: f64,
    pub height: f64,
}

/// Deterministic ultrasonic dropout window for exact tests.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DropoutBurst {
    /// "ultrasonic_down" or "ultrasonic_side".
    pub sensor: DropoutSensor,
    pub from_s: f64,
    pub to_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropoutSensor {
    UltrasonicDown,
    UltrasonicSide,
}

/// A scheduled in-flight parameter update, delivered over the telemetry
/// link and applied at the next control cycle boundary after delivery.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamUpdate {
    pub t: f64,
    pub path: String,
    pub value: f64,
}

/// Pass/fail bound on one metric.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MetricBound {
    #[serde(default)]
    pub max: Option<f64>,
    #[serde(default)]
    pub min: Option<f64>,
}

/// A [from, to] time window used by windowed metrics.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TimeWindow {
    pub from_s: f64,
    pub to_s: f64,
}

/// Sensor block.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct SensorsConfig {
    pub gyro: GyroModel,
    pub accel: AccelModel,
    pub ultrasonic_down: UltrasonicModel,
    pub ultrasonic_side: UltrasonicModel,
    pub vibration: VibrationSource,
}

/// Control block.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct ControlConfig {
    pub attitude: AttitudeGains,
    pub height: HeightControlConfig,
    pub wall: WallAvoidConfig,
    pub position_hold: PositionHoldConfig,
}

/// White torque disturbance on the nick/roll axes, N m (1-sigma at the
/// physics rate). Stands in for turbulence and asymmetries.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct DisturbanceConfig {
    pub torque_sigma: f64,
}

impl Default for DisturbanceConfig {
    fn default() -> Self {
        Self { torque_sigma: 0.0 }
    }
}

/// The whole scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub version: u32,
    pub name: String,
    pub duration_s: f64,
    pub seed: u64,
    pub physics_dt_s: f64,
    pub control_rate_hz: f64,
    pub log_rate_hz: f64,

    pub initial: InitialState,
    pub environment: Environment,
    pub airframe: AirframeConfig,
    pub propeller: PropellerDisk,
    pub motor: MotorState,
    pub battery: BatteryState,
    pub sensors: SensorsConfig,
    pub filter: FilterTuning,
    /// Run the Kalman filter and use its estimate (angle mode / position
    /// hold); off means gyro-only rate damping.
    pub estimator_enabled: bool,
    pub control: ControlConfig,
    pub disturbance: DisturbanceConfig,

    /// Wall position on the -y side, m; absent means no wall and no side
    /// ranging.
    pub wall_y: Option<f64>,
    pub terrain: Vec<TerrainSegment>,
    pub pilot: Vec<PilotKnot>,
    pub faults: Vec<FaultSpec>,
    pub timing_faults: Vec<TimingFault>,
    /// Watchdog window in us; absent disables the watchdog (the crash mode
    /// stays observable, as flown).
    pub watchdog_window_us: Option<u64>,
    pub dropout_bursts: Vec<DropoutBurst>,
    pub param_updates: Vec<ParamUpdate>,
    pub telemetry: super::link::LinkConfig,

    pub thresholds: BTreeMap<String, MetricBound>,
    /// Optional windows for the reading-dip metric (baseline vs dip).
    pub dip_baseline_window: Option<TimeWindow>,
    pub dip_window: Option<TimeWindow>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            name: "unnamed".into(),
            duration_s: 30.0,
            seed: 1,
            physics_dt_s: 1e-3,
            control_rate_hz: 300.0,
            log_rate_hz: 100.0,
            initial: InitialState::default(),
            environment: Environment::default(),
            airframe: AirframeConfig::default(),
            propeller: PropellerDisk::default(),
            motor: MotorState::default(),
            battery: BatteryState::default(),
            sensors: SensorsConfig::default(),
            filter: FilterTuning::default(),
            estimator_enabled: true,
            control: ControlConfig::default(),
            disturbance: DisturbanceConfig::default(),
            wall_y: None,
            terrain: vec![TerrainSegment {
                from_x: f64::NEG_INFINITY,
                height: 0.0,
            }],
            pilot: vec![PilotKnot::default()],
            faults: Vec::new(),
            timing_faults: Vec::new(),
            watchdog_window_us: None,
            dropout_bursts: Vec::new(),
            param_updates: Vec::new(),
            telemetry: super::link::LinkConfig::default(),
            thresholds: BTreeMap::new(),
            dip_baseline_window: None,
            dip_window: None,
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, SimError> {
        let config: ScenarioConfig =
            toml::from_str(s).map_err(|e| SimError::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let s = std::fs::read_to_string(path)?;
        Self::from_toml_str(&s)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("scenario serializes")
    }

    /// The throttle command (0..1) at which total thrust balances weight —
    /// handy for writing hover profiles.
    pub fn hover_throttle(&self) -> f64 {
        let per_motor = self.airframe.mass * self.environment.gravity / 4.0;
        let ideal = per_motor / self.propeller.efficiency;
        let power = (ideal.powi(3)
            / (2.0 * self.environment.air_density * self.propeller.disk_area))
            .sqrt();
        power / self.motor.max_constant_power
    }

    /// Validate every block; errors carry field paths.
    pub fn validate(&self) -> Result<(), SimError> {
        if self.version != CONFIG_VERSION {
            return Err(SimError::config(
                "version",
                format!("expected {CONFIG_VERSION}, got {}", self.version),
            ));
        }
        if self.duration_s < self.physics_dt_s {
            return Err(SimError::config(
                "duration_s",
                "must cover at least one physics step",
            ));
        }
        if self.physics_dt_s <= 0.0 || self.physics_dt_s > 5e-3 {
            return Err(SimError::config("physics_dt_s", "must be in (0, 5 ms]"));
        }
        if self.control_rate_hz <= 0.0 || self.control_rate_hz > 500.0 {
            return Err(SimError::config("control_rate_hz", "must be in (0, 500]"));
        }
        if self.log_rate_hz <= 0.0 {
            return Err(SimError::config("log_rate_hz", "must be > 0"));
        }
        if self.environment.air_density <= 0.0 {
            return Err(SimError::config("environment.air_density", "must be > 0"));
        }
        if self.environment.gravity <= 0.0 {
            return Err(SimError::config("environment.gravity", "must be > 0"));
        }
        if self.propeller.disk_area <= 0.0 {
            return Err(SimError::config("propeller.disk_area", "must be > 0"));
        }
        if !(0.0 < self.propeller.efficiency && self.propeller.efficiency <= 1.0) {
            return Err(SimError::config("propeller.efficiency", "must be in (0, 1]"));
        }
        self.airframe.validate()?;
        for (name, u) in [
            ("sensors.ultrasonic_down", &self.sensors.ultrasonic_down),
            ("sensors.ultrasonic_side", &self.sensors.ultrasonic_side),
        ] {
            if u.min_range >= u.max_range {
                return Err(SimError::config(
                    format!("{name}.min_range"),
                    "min range must be below max range",
                ));
            }
            if !(0.0..=1.0).contains(&u.dropout_prob) {
                return Err(SimError::config(
                    format!("{name}.dropout_prob"),
                    "must be in [0, 1]",
                ));
            }
        }
        self.control.attitude.angle.validate("control.attitude.angle")?;
        self.control.attitude.rate.validate("control.attitude.rate")?;
        self.control
            .attitude
            .yaw_rate
            .validate("control.attitude.yaw_rate")?;
        self.control.wall.validate()?;
        if self.control.height.adjustment_limit <= 0.0 {
            return Err(SimError::config(
                "control.height.adjustment_limit",
                "must be > 0",
            ));
        }
        for seg in &self.terrain {
            if seg.height < 0.0 {
                return Err(SimError::config("terrain.height", "must be >= 0"));
            }
        }
        if self.pilot.is_empty() {
            return Err(SimError::config("pilot", "needs at least one knot"));
        }
        if !self.pilot.windows(2).all(|w| w[0].t <= w[1].t) {
            return Err(SimError::config("pilot", "knots must be time-sorted"));
        }
        self.telemetry.validate()?;
        Ok(())
    }

    /// Ground height under world-x position.
    pub fn terrain_height(&self, x: f64) -> f64 {
        let mut height = 0.0;
        for seg in &self.terrain {
            if x >= seg.from_x {
                height = seg.height;
            }
        }
        height
    }

    /// Piecewise-linear pilot inputs at time `t`.
    pub fn pilot_at(&self, t: f64) -> PilotKnot {
        let knots = &self.pilot;
        if t <= knots[0].t {
            return knots[0];
        }
        for pair in knots.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if t <= b.t {
                let span = b.t - a.t;
                let f = if span > 0.0 { (t - a.t) / span } else { 1.0 };
                return PilotKnot {
                    t,
                    throttle: a.throttle + f * (b.throttle - a.throttle),
                    nick: a.nick + f * (b.nick - a.nick),
                    roll: a.roll + f * (b.roll - a.roll),
                    yaw: a.yaw + f * (b.yaw - a.yaw),
                };
            }
        }
        *knots.last().unwrap()
    }

    /// True when a scripted dropout burst covers time `t` for the sensor.
    pub fn scripted_dropout(&self, sensor: DropoutSensor, t: f64) -> bool {
        self.dropout_bursts
            .iter()
            .any(|b| b.sensor == sensor && t >= b.from_s && t < b.to_s)
    }
}

/// Apply one runtime-tunable parameter. Unknown paths and out-of-range
/// values are rejected without touching the config.
pub fn apply_param(config: &mut ControlConfig, path: &str, value: f64) -> Result<(), SimError> {
    let reject = |reason: &str| -> Result<(), SimError> {
        Err(SimError::ParamRejected {
            path: path.to_string(),
            reason: reason.to_string(),
        })
    };
    let non_negative = value >= 0.0;
    match path {
        "control.attitude.angle.kp" if non_negative => config.attitude.angle.kp = value,
        "control.attitude.angle.ki" if non_negative => config.attitude.angle.ki = value,
        "control.attitude.angle.kd" if non_negative => config.attitude.angle.kd = value,
        "control.attitude.rate.kp" if non_negative => config.attitude.rate.kp = value,
        "control.attitude.rate.ki" if non_negative => config.attitude.rate.ki = value,
        "control.attitude.rate.kd" if non_negative => config.attitude.rate.kd = value,
        "control.attitude.yaw_rate.kp" if non_negative => config.attitude.yaw_rate.kp = value,
        "control.height.kp" if non_negative => config.height.kp = value,
        "control.height.kd" if non_negative => config.height.kd = value,
        "control.height.target_height" if value > 0.0 => config.height.target_height = value,
        "control.height.adjustment_limit" if value > 0.0 => {
            config.height.adjustment_limit = value
        }
        "control.wall.kp" if non_negative => config.wall.kp = value,
        "control.wall.kd" if non_negative => config.wall.kd = value,
        "control.wall.hold_distance" if value > 0.0 => config.wall.hold_distance = value,
        "control.wall.emergency_multiplier" if value >= 1.0 => {
            config.wall.emergency_multiplier = value
        }
        "control.position_hold.tilt_kp" if non_negative => config.position_hold.tilt_kp = value,
        "control.position_hold.accel_kd" if non_negative => {
            config.position_hold.accel_kd = value
        }
        "control.attitude.angle.kp"
        | "control.attitude.angle.ki"
        | "control.attitude.angle.kd"
        | "control.attitude.rate.kp"
        | "control.attitude.rate.ki"
        | "control.attitude.rate.kd"
        | "control.attitude.yaw_rate.kp"
        | "control.height.kp"
        | "control.height.kd"
        | "control.height.target_height"
        | "control.height.adjustment_limit"
        | "control.wall.kp"
        | "control.wall.kd"
        | "control.wall.hold_distance"
        | "control.wall.emergency_multiplier"
        | "control.position_hold.tilt_kp"
        | "control.position_hold.accel_kd" => return reject("value out of range"),
        _ => return reject("unknown or non-tunable parameter"),
    }
    Ok(())
}
