//! Software-in-the-loop simulator for a small indoor quadrotor.
//!
//! The crate models the whole closed loop of a four-rotor micro aerial
//! vehicle flying indoors: rigid-body flight dynamics driven by an ideal
//! actuator-disk thrust law, gyro/accelerometer/ultrasonic sensors with
//! their real defect modes (drift, vibration pickup, echo dropouts, tilt
//! bias), a Kalman filter fusing gyros and accelerometers into a roll/pitch
//! estimate, a PID control stack (attitude stabilization, height hold with
//! zero-measurement deactivation, wall avoidance with an emergency factor),
//! and a microsecond-resolution model of the microcontroller's PPM
//! decode/encode duty including interrupt contention and timing faults.
//!
//! The top-level entry point for closed-loop runs is
//! [`harness::run_scenario`]; see the `examples/` directory for one runnable
//! example per capability.

pub mod airframe;
pub mod control;
pub mod estimator;
pub mod harness;
pub mod scheduler;
pub mod sensors;

mod error;

pub use error::SimError;
