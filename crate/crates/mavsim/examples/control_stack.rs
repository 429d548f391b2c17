//! The three controllers in isolation: attitude stabilization on the fused
//! estimate, height hold with its zero-reading deactivation, and the wall
//! controller with and without the emergency factor.
//!
//! Run with: cargo run --example control_stack

use mavsim::control::{
    attitude_control, height_control, wall_avoidance, AttitudeGains, AttitudeMode,
    AttitudeSetpoint, AttitudeState, HeightControlConfig, HeightControlState, WallAvoidConfig,
    WallAvoidState,
};

fn main() {
    let dt = 1.0 / 300.0;

    // attitude: a 5 degree roll error produces a counter-demand
    let gains = AttitudeGains {
        mode: AttitudeMode::Angle,
        ..AttitudeGains::default()
    };
    let mut att = AttitudeState::default();
    let demands = attitude_control(
        &gains,
        &mut att,
        &AttitudeSetpoint::default(),
        Some([0.0, 0.0, 0.0]),
        Some((5f64.to_radians(), 0.0)),
        dt,
    )
    .unwrap();
    println!("attitude: 5 deg roll estimate -> roll demand {:+.4}", demands.roll);

    // gyro loss is unrecoverable and must be loud, not silent
    let err = attitude_control(&gains, &mut att, &AttitudeSetpoint::default(), None, None, dt);
    println!("attitude without gyro: {}", err.unwrap_err());

    // height hold: active on a good reading, inert on a zero reading
    let height = HeightControlConfig::default();
    let mut hstate = HeightControlState::default();
    let pilot = 0.1123;
    let t_low = height_control(&height, 0.8, pilot, &mut hstate, dt);
    println!("\nheight hold at 0.8 m (target {}): throttle {:.4} (pilot {})", height.target_height, t_low, pilot);
    let t_zero = height_control(&height, 0.0, pilot, &mut hstate, dt);
    println!("height hold on a 0.0 reading: throttle {:.4} -> exactly the pilot value, loop disengaged", t_zero);

    // wall controller: the emergency multiplier only fires inside the
    // danger zone
    let wall = WallAvoidConfig::default();
    let mut wstate = WallAvoidState::default();
    println!("\nwall hold (hold {} m, emergency inside {} m):", wall.hold_distance, wall.emergency_distance);
    for reading in [2.5, 1.5, 1.0, 0.6] {
        wstate.previous_reading = None; // isolate the proportional response
        let corr = wall_avoidance(&wall, reading, &mut wstate, dt);
        let zone = if reading < wall.emergency_distance { " <- emergency factor" } else { "" };
        println!("  reading {reading:.1} m -> roll correction {corr:+.3}{zone}");
    }
}
