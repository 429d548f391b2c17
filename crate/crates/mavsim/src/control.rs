//! The control stack: three independent PID attitude regulators, PD height
//! hold that deactivates on zero range readings, wall-avoidance PD with an
//! emergency factor, and position hold on the fused estimate.

use serde::{Deserialize, Serialize};

use crate::SimError;

/// Where the D term takes its derivative from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeSource {
    /// Differentiate the error signal.
    ErrorDerivative,
    /// Use the raw rate measurement (negated); avoids setpoint kick.
    RawRate,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    /// Absolute bound on the integral accumulator.
    pub integral_clamp: f64,
    /// Absolute bound on the output.
    pub output_clamp: f64,
    pub derivative_source: DerivativeSource,
}

impl PidGains {
    pub fn p(kp: f64, output_clamp: f64) -> Self {
        Self {
            kp,
            ki: 0.0,
            kd: 0.0,
            integral_clamp: 1.0,
            output_clamp,
            derivative_source: DerivativeSource::ErrorDerivative,
        }
    }

    pub fn validate(&self, path: &str) -> Result<(), SimError> {
        if self.kp < 0.0 || self.ki < 0.0 || self.kd < 0.0 {
            return Err(SimError::config(path, "gains must be >= 0"));
        }
        if self.integral_clamp <= 0.0 || self.output_clamp <= 0.0 {
            return Err(SimError::config(path, "clamps must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct PidState {
    pub integral: f64,
    pub previous_error: Option<f64>,
    pub last_output: f64,
}

/// One discrete PID step.
///
/// output = kp*e + ki*int(e) + kd*(de/dt or -rate), clamped. The integral
/// accumulator is frozen while the output is saturated (anti-windup) and
/// always bounded by the integral clamp.
pub fn pid_step(
    gains: &PidGains,
    state: &PidState,
    error: f64,
    rate_measurement: f64,
    dt: f64,
) -> (f64, PidState) {
    assert!(dt > 0.0, "pid_step: dt must be > 0");
    let derivative = match gains.derivative_source {
        DerivativeSource::ErrorDerivative => match state.previous_error {
            Some(prev) => (error - prev) / dt,
            None => 0.0,
        },
        DerivativeSource::RawRate => -rate_measurement,
    };
    let candidate_integral = (state.integral + error * dt)
        .clamp(-gains.integral_clamp, gains.integral_clamp);

    let unclamped = gains.kp * error + gains.ki * candidate_integral + gains.kd * derivative;
    let output = unclamped.clamp(-gains.output_clamp, gains.output_clamp);
    let saturated = output != unclamped;

    let next = PidState {
        integral: if saturated { state.integral } else { candidate_integral },
        previous_error: Some(error),
        last_output: output,
    };
    (output, next)
}

/// Angle-based or rate-only attitude stabilization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttitudeMode {
    /// Damp angular velocity only (gyro-only stabilization).
    RateDamping,
    /// Regulate the estimated angle (needs the Kalman estimate).
    Angle,
}

/// Gains for the three attitude loops. Nick and roll share one set; the
/// model is symmetric.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct AttitudeGains {
    /// Angle-loop gains for nick and roll (used in `Angle` mode).
    pub angle: PidGains,
    /// Rate-loop gains for nick and roll.
    pub rate: PidGains,
    /// Yaw rate damping gains.
    pub yaw_rate: PidGains,
    pub mode: AttitudeMode,
}

impl Default for AttitudeGains {
    fn default() -> Self {
        // Found by the classic sequence: raise P to marginal oscillation,
        // add D, then a small I. See the tuning scenario in scenarios/.
        Self {
            angle: PidGains {
                kp: 0.25,
                ki: 0.02,
                kd: 0.06,
                integral_clamp: 0.1,
                output_clamp: 0.3,
                derivative_source: DerivativeSource::RawRate,
            },
            rate: PidGains {
                kp: 0.06,
                ki: 0.01,
                kd: 0.002,
                integral_clamp: 0.1,
                output_clamp: 0.3,
                derivative_source: DerivativeSource::ErrorDerivative,
            },
            yaw_rate: PidGains {
                kp: 0.04,
                ki: 0.0,
                kd: 0.0,
                integral_clamp: 0.1,
                output_clamp: 0.2,
                derivative_source: DerivativeSource::ErrorDerivative,
            },
            mode: AttitudeMode::RateDamping,
        }
    }
}

/// Per-loop controller state.
#[derive(Debug, Clone, Copy, Default)]
pub struct AttitudeState {
    pub nick: PidState,
    pub roll: PidState,
    pub yaw: PidState,
}

/// Attitude setpoints: angles in `Angle` mode, rates in `RateDamping` mode.
#[derive(Debug, Clone, Copy, Default)]
pub struct AttitudeSetpoint {
    pub nick: f64,
    pub roll: f64,
    pub yaw_rate: f64,
}

/// Demand outputs of the attitude stage.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AttitudeDemands {
    pub nick: f64,
    pub roll: f64,
    pub yaw: f64,
}

/// Compute nick/roll/yaw demands.
///
/// A lost gyro is unrecoverable for this vehicle, so it is reported as an
/// explicit failure rather than a zero command. `estimate` is
/// (roll, pitch) from the Kalman filter and is required in `Angle` mode.
pub fn attitude_control(
    gains: &AttitudeGains,
    state: &mut AttitudeState,
    setpoint: &AttitudeSetpoint,
    gyro: Option<[f64; 3]>,
    estimate: Option<(f64, f64)>,
    dt: f64,
) -> Result<AttitudeDemands, SimError> {
    let gyro = gyro.ok_or_else(|| {
        SimError::domain("attitude_control: gyro signal lost; stabilization impossible")
    })?;

    let (nick_out, roll_out) = match (gains.mode, estimate) {
        (AttitudeMode::Angle, Some((est_roll, est_pitch))) => {
            let (o_n, s_n) = pid_step(
                &gains.angle,
                &state.nick,
                setpoint.nick - est_pitch,
                gyro[1],
                dt,
            );
            let (o_r, s_r) = pid_step(
                &gains.angle,
                &state.roll,
                setpoint.roll - est_roll,
                gyro[0],
                dt,
            );
            state.nick = s_n;
            state.roll = s_r;
            (o_n, o_r)
        }
        _ => {
            // rate damping: setpoint interpreted as a rate demand
            let (o_n, s_n) = pid_step(&gains.rate, &state.nick, setpoint.nick - gyro[1], gyro[1], dt);
            let (o_r, s_r) = pid_step(&gains.rate, &state.roll, setpoint.roll - gyro[0], gyro[0], dt);
            state.nick = s_n;
            state.roll = s_r;
            (o_n, o_r)
        }
    };
    let (yaw_out, s_y) = pid_step(
        &gains.yaw_rate,
        &state.yaw,
        setpoint.yaw_rate - gyro[2],
        gyro[2],
        dt,
    );
    state.yaw = s_y;
    Ok(AttitudeDemands {
        nick: nick_out,
        roll: roll_out,
        yaw: yaw_out,
    })
}

/// PD height hold riding on top of the pilot throttle.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct HeightControlConfig {
    pub target_height: f64,
    pub kp: f64,
    pub kd: f64,
    /// The controller may move the throttle at most this far from the
    /// pilot value; the pilot still does the coarse throttle work.
    pub adjustment_limit: f64,
    pub active: bool,
}

impl Default for HeightControlConfig {
    fn default() -> Self {
        Self {
            target_height: 1.0,
            kp: 0.08,
            kd: 0.12,
            adjustment_limit: 0.06,
            active: true,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct HeightControlState {
    pub previous_reading: Option<(f64, f64)>, // (t-relative reading, dt accumulated)
    pub last_contribution: f64,
}

/// One height-control step. A zero reading is an invisibility error and
/// deactivates the controller for that sample: the output is exactly the
/// pilot throttle, with a zero contribution.
pub fn height_control(
    config: &HeightControlConfig,
    reading: f64,
    pilot_throttle: f64,
    state: &mut HeightControlState,
    dt: f64,
) -> f64 {
    if !config.active || reading == 0.0 {
        state.last_contribution = 0.0;
        // a zero reading also invalidates the derivative memory
        state.previous_reading = None;
        return pilot_throttle;
    }
    let error = config.target_height - reading;
    let derivative = match state.previous_reading {
        Some((prev, _)) => -(reading - prev) / dt,
        None => 0.0,
    };
    let contribution = (config.kp * error + config.kd * derivative)
        .clamp(-config.adjustment_limit, config.adjustment_limit);
    state.previous_reading = Some((reading, dt));
    state.last_contribution = contribution;
    pilot_throttle + contribution
}

/// PD wall hold with an emergency gain multiplier inside the danger zone.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct WallAvoidConfig {
    /// Distance to keep from the wall, m.
    pub hold_distance: f64,
    pub kp: f64,
    pub kd: f64,
    /// Below this distance the gains are multiplied by the emergency factor.
    pub emergency_distance: f64,
    /// >= 1; 1 disables the emergency behavior.
    pub emergency_multiplier: f64,
    /// Bound on the roll correction.
    pub output_clamp: f64,
}

impl Default for WallAvoidConfig {
    fn default() -> Self {
        Self {
            hold_distance: 1.5,
            kp: 0.25,
            kd: 0.35,
            emergency_distance: 0.8,
            emergency_multiplier: 4.0,
            output_clamp: 0.35,
        }
    }
}

impl WallAvoidConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.emergency_multiplier < 1.0 {
            return Err(SimError::config(
                "control.wall.emergency_multiplier",
                "must be >= 1",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct WallAvoidState {
    pub previous_reading: Option<f64>,
    pub last_correction: f64,
}

/// Roll-demand correction away from the wall. Zero readings (dropouts)
/// contribute exactly nothing, same contract as the height controller.
///
/// Sign: the wall is on the -y side; a positive correction rolls away.
pub fn wall_avoidance(
    config: &WallAvoidConfig,
    reading: f64,
    state: &mut WallAvoidState,
    dt: f64,
) -> f64 {
    if reading == 0.0 {
        state.previous_reading = None;
        state.last_correction = 0.0;
        return 0.0;
    }
    let error = reading - config.hold_distance;
    let derivative = match state.previous_reading {
        Some(prev) => (reading - prev) / dt,
        None => 0.0,
    };
    let factor = if reading < config.emergency_distance {
        config.emergency_multiplier
    } else {
        1.0
    };
    let correction = (factor * (config.kp * error + config.kd * derivative))
        .clamp(-config.output_clamp, config.output_clamp);
    state.previous_reading = Some(reading);
    state.last_correction = correction;
    correction
}

/// Gains for hover position hold on the fused estimate.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct PositionHoldConfig {
    /// Restoring gain on estimated tilt.
    pub tilt_kp: f64,
    /// Damping gain on the translational acceleration estimate.
    pub accel_kd: f64,
    pub output_clamp: f64,
    pub active: bool,
}

impl Default for PositionHoldConfig {
    fn default() -> Self {
        Self {
            tilt_kp: 0.35,
            accel_kd: 0.02,
            output_clamp: 0.15,
            active: true,
        }
    }
}

/// Nick/roll corrections that fight horizontal drift. An unhealthy
/// estimator yields zero correction plus an advisory flag.
pub fn position_hold(
    config: &PositionHoldConfig,
    estimate: Option<(f64, f64)>,
    translational_accel: Option<[f64; 2]>,
    _dt: f64,
) -> (f64, f64, bool) {
    let (Some((roll, pitch)), true) = (estimate, config.active) else {
        return (0.0, 0.0, estimate.is_none());
    };
    let accel = translational_accel.unwrap_or([0.0, 0.0]);
    let nick = (-config.tilt_kp * pitch - config.accel_kd * accel[0])
        .clamp(-config.output_clamp, config.output_clamp);
    let roll_corr = (-config.tilt_kp * roll - config.accel_kd * accel[1])
        .clamp(-config.output_clamp, config.output_clamp);
    (nick, roll_corr, false)
}
