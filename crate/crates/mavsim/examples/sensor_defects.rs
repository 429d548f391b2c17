//! The three sensor defect modes that shape the whole control design:
//! gyro bias random walk, vibration pickup on the accelerometers, and
//! ultrasonic invisibility errors logged as literal zeros.
//!
//! Run with: cargo run --example sensor_defects

use mavsim::sensors::{
    accel_sample, gyro_sample, ultrasonic_sample, AccelModel, GyroModel, UltrasonicModel,
    VibrationSource,
};
use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let dt = 1e-3;

    // gyro at rest: the reading is pure bias plus noise, and the bias walks
    let mut gyro = GyroModel::default();
    println!("gyro x-axis at rest (true rate 0):");
    for second in 0..5 {
        let mut last = [0.0; 3];
        for _ in 0..1000 {
            last = gyro_sample(&mut gyro, &Vector3::zeros(), dt, &mut rng).unwrap();
        }
        println!(
            "  t = {second:2} s: reading {:+.4} rad/s, walked bias {:+.4} rad/s",
            last[0], gyro.bias[0]
        );
    }

    // accelerometer in hover: motor vibration rides on the gravity signal
    let accel = AccelModel::default();
    let mut vibration = VibrationSource::default();
    let hover_power = [11.2; 4];
    let mut peak: f64 = 0.0;
    for _ in 0..2000 {
        let v = vibration.step(&hover_power, dt);
        let reading = accel_sample(&accel, &Vector3::zeros(), v, &mut rng).unwrap();
        peak = peak.max(reading[0].abs());
    }
    println!("\naccelerometer at level hover: peak |ax| = {peak:.3} m/s^2 from vibration alone");

    // ultrasonic: out-of-beam tilt and random echo loss both read as 0.0
    let us = UltrasonicModel::default();
    println!("\nultrasonic at 1.0 m true distance:");
    for (tilt_deg, label) in [(0.0, "level"), (5.0, "small tilt"), (35.0, "beyond half beam")] {
        let r = ultrasonic_sample(&us, 1.0, (tilt_deg as f64).to_radians(), false, &mut rng).unwrap();
        println!("  tilt {tilt_deg:4.1} deg ({label}): reading {r:.3} m");
    }
    let mut zeros = 0;
    for _ in 0..1000 {
        if ultrasonic_sample(&us, 1.0, 0.0, false, &mut rng).unwrap() == 0.0 {
            zeros += 1;
        }
    }
    println!("  1000 level pings: {zeros} invisibility errors (read as literal 0.0)");
}
