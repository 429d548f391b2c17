//! Kalman roll/pitch estimation from a drifting gyro and a vibrating
//! accelerometer: the filter pulls the integrated angle back with gravity
//! and learns the gyro bias on the way.
//!
//! Run with: cargo run --example attitude_filter

use mavsim::estimator::{predict, update, EstimatorState, FilterTuning};
use mavsim::sensors::{accel_sample, gyro_sample, AccelModel, GyroModel};
use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let tuning = FilterTuning::default();
    let mut est = EstimatorState::default();
    let mut gyro = GyroModel::default();
    let accel = AccelModel::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);

    // true motion: a slow roll oscillation, +/- 2 degrees
    let dt = 1.0 / 300.0;
    let mut naive_roll = 0.0; // gyro integration without correction
    println!("  t      true      fused     gyro-only  bias estimate");
    for step in 0..9000 {
        let t = step as f64 * dt;
        let true_roll = 0.035 * (0.8 * t).sin();
        let true_rate = 0.035 * 0.8 * (0.8 * t).cos();

        let g = gyro_sample(&mut gyro, &Vector3::new(true_rate, 0.0, 0.0), dt, &mut rng).unwrap();
        naive_roll += g[0] * dt;
        est = predict(&est, g, &tuning, dt).unwrap();

        // gravity leaning seen by the accelerometer at this tilt
        let specific = Vector3::new(0.0, tuning.gravity * true_roll.sin(), 0.0);
        let a = accel_sample(&accel, &specific, 0.0, &mut rng).unwrap();
        est = update(&est, a, &tuning).unwrap().0;

        if step % 1500 == 0 {
            println!(
                "  {t:4.1}s  {:+7.2}deg {:+7.2}deg {:+8.2}deg  {:+.4} rad/s",
                true_roll.to_degrees(),
                est.roll.to_degrees(),
                naive_roll.to_degrees(),
                est.gyro_bias[0]
            );
        }
    }
    println!(
        "\nfinal: bias estimate {:+.4} rad/s vs actual {:+.4} rad/s, {} updates rejected",
        est.gyro_bias[0], gyro.bias[0], est.rejected_updates
    );
    println!("gyro-only integration has drifted {:.1} degrees away", naive_roll.to_degrees());
}
