//! Kalman fusion of the gyro triad and the dual-axis accelerometer into a
//! roll/pitch estimate with gyro-bias tracking. Yaw has no absolute
//! reference on this vehicle and integrates open loop.
//!
//! State vector: [roll, pitch, gyro bias x, gyro bias y]. With a diagonal
//! measurement noise the roll and pitch channels decouple into two
//! independent angle+bias filters, which is what the test oracle exploits.

use nalgebra::{Matrix2, Matrix4, Matrix4x2, Vector2, Vector4};
use serde::{Deserialize, Serialize};

use crate::SimError;

/// Process/measurement noise settings and the innovation gate.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterTuning {
    /// Angle process noise density, rad^2/s.
    pub gyro_process_noise: f64,
    /// Bias process noise density, (rad/s)^2/s.
    pub bias_process_noise: f64,
    /// Accelerometer measurement noise variance, (m/s^2)^2.
    pub accel_measurement_noise: f64,
    /// Mahalanobis gate; innovations beyond this distance are rejected
    /// (vibration spikes).
    pub outlier_gate: f64,
    /// Gravity used in the measurement model, m/s^2.
    pub gravity: f64,
}

impl Default for FilterTuning {
    fn default() -> Self {
        Self {
            gyro_process_noise: 1e-4,
            bias_process_noise: 1e-6,
            accel_measurement_noise: 0.25,
            outlier_gate: 3.0,
            gravity: 9.81,
        }
    }
}

/// Filter mean, covariance and diagnostics counters.
#[derive(Debug, Clone)]
pub struct EstimatorState {
    pub roll: f64,
    pub pitch: f64,
    /// Gyro-integrated only; no heading reference exists.
    pub yaw: f64,
    /// Estimated gyro bias on the x and y axes, rad/s.
    pub gyro_bias: [f64; 2],
    /// Covariance over [roll, pitch, bias_x, bias_y].
    pub covariance: Matrix4<f64>,
    /// Measurement updates rejected by the Mahalanobis gate.
    pub rejected_updates: u64,
    /// Accepted measurement updates.
    pub accepted_updates: u64,
}

impl Default for EstimatorState {
    fn default() -> Self {
        Self {
            roll: 0.0,
            pitch: 0.0,
            yaw: 0.0,
            gyro_bias: [0.0; 2],
            covariance: Matrix4::from_diagonal(&Vector4::new(0.01, 0.01, 1e-3, 1e-3)),
            rejected_updates: 0,
            accepted_updates: 0,
        }
    }
}

fn wrap_angle(a: f64) -> f64 {
    let mut x = a % std::f64::consts::TAU;
    if x > std::f64::consts::PI {
        x -= std::f64::consts::TAU;
    } else if x <= -std::f64::consts::PI {
        x += std::f64::consts::TAU;
    }
    x
}

/// Propagate the estimate with bias-corrected gyro rates.
pub fn predict(
    est: &EstimatorState,
    gyro_rate: [f64; 3],
    tuning: &FilterTuning,
    dt: f64,
) -> Result<EstimatorState, SimError> {
    if dt <= 0.0 {
        return Err(SimError::domain("predict: dt must be > 0"));
    }
    if gyro_rate.iter().any(|r| !r.is_finite()) {
        return Err(SimError::domain("predict: non-finite gyro rate"));
    }
    let mut next = est.clone();
    next.roll = wrap_angle(est.roll + (gyro_rate[0] - est.gyro_bias[0]) * dt);
    next.pitch = wrap_angle(est.pitch + (gyro_rate[1] - est.gyro_bias[1]) * dt);
    next.yaw = wrap_angle(est.yaw + gyro_rate[2] * dt);

    // x' = F x with F = I except d(angle)/d(bias) = -dt
    let mut f = Matrix4::identity();
    f[(0, 2)] = -dt;
    f[(1, 3)] = -dt;
    let q = Matrix4::from_diagonal(&Vector4::new(
        tuning.gyro_process_noise * dt,
        tuning.gyro_process_noise * dt,
        tuning.bias_process_noise * dt,
        tuning.bias_process_noise * dt,
    ));
    let p = f * est.covariance * f.transpose() + q;
    next.covariance = 0.5 * (p + p.transpose());
    Ok(next)
}

/// What a measurement update did.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateOutcome {
    Accepted,
    Rejected,
}

/// Fuse one accelerometer reading. The gravity leaning implied by the
/// reading observes roll and pitch: z = [-g*pitch, g*roll] in the
/// small-angle model. Readings beyond the Mahalanobis gate leave the state
/// untouched apart from the diagnostics counter.
pub fn update(
    est: &EstimatorState,
    accel: [f64; 2],
    tuning: &FilterTuning,
) -> Result<(EstimatorState, UpdateOutcome), SimError> {
    if accel.iter().any(|a| !a.is_finite()) {
        return Err(SimError::domain("update: non-finite accel reading"));
    }
    let g = tuning.gravity;
    let mut h = Matrix4x2::zeros().transpose(); // 2x4
    h[(0, 1)] = -g;
    h[(1, 0)] = g;

    let z = Vector2::new(accel[0], accel[1]);
    let predicted = Vector2::new(-g * est.pitch, g * est.roll);
    let innovation = z - predicted;

    let r = Matrix2::from_diagonal_element(tuning.accel_measurement_noise);
    let s = h * est.covariance * h.transpose() + r;
    let s_inv = s
        .try_inverse()
        .ok_or_else(|| SimError::domain("update: singular innovation covariance"))?;
    let mahalanobis_sq = (innovation.transpose() * s_inv * innovation)[(0, 0)];
    if mahalanobis_sq > tuning.outlier_gate * tuning.outlier_gate {
        let mut next = est.clone();
        next.rejected_updates += 1;
        return Ok((next, UpdateOutcome::Rejected));
    }

    let k = est.covariance * h.transpose() * s_inv;
    let dx: Vector4<f64> = k * innovation;
    let mut next = est.clone();
    next.roll = wrap_angle(est.roll + dx[0]);
    next.pitch = wrap_angle(est.pitch + dx[1]);
    next.gyro_bias[0] += dx[2];
    next.gyro_bias[1] += dx[3];
    let p = (Matrix4::identity() - k * h) * est.covariance;
    next.covariance = 0.5 * (p + p.transpose());
    next.accepted_updates += 1;
    Ok((next, UpdateOutcome::Accepted))
}

/// Recover body-frame translational acceleration by removing the gravity
/// component the estimated tilt explains.
pub fn translational_accel(est: &EstimatorState, raw_accel: [f64; 2], gravity: f64) -> [f64; 2] {
    [
        raw_accel[0] - (-gravity * est.pitch.sin()),
        raw_accel[1] - gravity * est.roll.sin(),
    ]
}
