//! Actuator-disk thrust law, the component power budget, and what the
//! scaling laws say about shrinking the airframe.
//!
//! Run with: cargo run --example thrust_and_scaling

use mavsim::airframe::{
    default_component_powers, power_budget, scaling_feasibility, thrust_ideal, AirframeConfig,
    BatteryState, Environment, PropellerDisk,
};

fn main() {
    let env = Environment::default();
    let disk = PropellerDisk::default();

    println!("thrust vs shaft power (eta={}, A={} m^2):", disk.efficiency, disk.disk_area);
    for power in [1.0, 2.0, 5.0, 10.0, 20.0, 40.0, 80.0] {
        let f = thrust_ideal(&env, &disk, power).unwrap();
        println!("  P = {power:5.1} W -> F = {f:.3} N");
    }
    let f1 = thrust_ideal(&env, &disk, 10.0).unwrap();
    let f2 = thrust_ideal(&env, &disk, 20.0).unwrap();
    println!("  doubling power multiplies thrust by {:.6} (2^(2/3) = {:.6})", f2 / f1, 2f64.powf(2.0 / 3.0));

    let budget = power_budget(&default_component_powers(), &BatteryState::default()).unwrap();
    println!("\ncomponent power budget:");
    for (c, share) in budget.components.iter().zip(&budget.shares) {
        println!("  {:<22} {:7.3} W  ({:5.2} %)", c.name, c.watts, 100.0 * share);
    }
    println!("  total {:.3} W -> ideal endurance {:.1} min", budget.total_watts, budget.endurance_min);

    println!("\nminiaturization trend (fixed power, m ~ A^1.5, F ~ A^(1/3)):");
    let airframe = AirframeConfig::default();
    for target in [0.30, 0.20, 0.10, 0.05] {
        let report = scaling_feasibility(&airframe, target).unwrap();
        println!(
            "  d = {:.2} m: thrust margin x{:.2}, stored energy x{:.3}",
            target, report.thrust_margin_ratio, report.energy_ratio
        );
    }
}
