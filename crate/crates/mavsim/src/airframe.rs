//! Rigid-body motion, actuator-disk thrust, motor lag, battery, and the
//! energy/scaling analyses.
//!
//! Conventions: world frame is x forward, y left, z up. Body frame matches
//! the world frame at identity attitude. Motors sit on the body axes in a
//! plus configuration: 0 front (+x), 1 rear (-x), 2 right (-y), 3 left (+y).
//! Front and rear propellers spin clockwise (seen from above), right and
//! left counter-clockwise.

use nalgebra::{UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::SimError;

/// Ambient air and gravity.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct Environment {
    /// Air density, kg/m^3.
    pub air_density: f64,
    /// Gravitational acceleration, m/s^2 (positive down).
    pub gravity: f64,
}

impl Default for Environment {
    fn default() -> Self {
        Self {
            air_density: 1.225,
            gravity: 9.81,
        }
    }
}

/// One propeller treated as an ideal actuator disk.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct PropellerDisk {
    /// Swept disk area, m^2.
    pub disk_area: f64,
    /// Fraction of the ideal momentum-theory thrust actually produced.
    pub efficiency: f64,
}

impl Default for PropellerDisk {
    fn default() -> Self {
        // Area per rotor is not published for the donor toy propellers;
        // 0.05 m^2 with efficiency 0.64 puts total hover draw near the
        // 45 W the component budget lists for the motors.
        Self {
            disk_area: 0.05,
            efficiency: 0.64,
        }
    }
}

/// Thrust of an ideal propeller: F = eta * (2 * rho * A * P^2)^(1/3).
///
/// Monotone increasing and strictly sublinear in shaft power, which is why
/// every extra gram of airframe costs disproportionate power.
pub fn thrust_ideal(env: &Environment, disk: &PropellerDisk, power: f64) -> Result<f64, SimError> {
    if power < 0.0 {
        return Err(SimError::domain(format!(
            "thrust_ideal: negative shaft power {power} W"
        )));
    }
    Ok(disk.efficiency * (2.0 * env.air_density * disk.disk_area * power * power).cbrt())
}

/// One motor plus its brushless regulator, modeled as a first-order power lag.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct MotorState {
    /// Power currently delivered to the shaft, W.
    pub shaft_power: f64,
    /// Power most recently commanded, W.
    pub commanded_power: f64,
    /// Sustainable power ceiling, W.
    pub max_constant_power: f64,
    /// Short-burst ceiling as a multiple of `max_constant_power`.
    pub peak_factor: f64,
    /// First-order lag time constant, s.
    pub time_constant: f64,
}

impl Default for MotorState {
    fn default() -> Self {
        Self {
            shaft_power: 0.0,
            commanded_power: 0.0,
            max_constant_power: 100.0,
            peak_factor: 1.5,
            time_constant: 0.05,
        }
    }
}

/// Advance one motor by `dt`, moving shaft power toward `command_power`
/// with the configured time constant. Inputs are clamped, never rejected.
pub fn motor_step(motor: &MotorState, command_power: f64, dt: f64) -> MotorState {
    let peak = motor.max_constant_power * motor.peak_factor;
    let cmd = command_power.clamp(0.0, peak);
    let alpha = 1.0 - (-dt / motor.time_constant).exp();
    let p = (motor.shaft_power + alpha * (cmd - motor.shaft_power)).clamp(0.0, peak);
    MotorState {
        shaft_power: p,
        commanded_power: cmd,
        ..*motor
    }
}

/// Mixed per-motor power commands plus a saturation flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixOutput {
    /// Motor power commands in W, order: front, rear, right, left.
    pub motor_power: [f64; 4],
    /// True when any motor command had to be clamped.
    pub clamped: bool,
}

/// Mix throttle/nick/roll/yaw demands into the four motor power commands.
///
/// Demands are dimensionless; 1.0 of throttle maps to `max_power` watts per
/// motor. Nick tilts the front/rear pair, roll the right/left pair, yaw
/// works through the counter-rotating pair differential:
///   front = T - nick + yaw     rear = T + nick + yaw
///   right = T - roll - yaw     left = T + roll - yaw
/// The unclamped commands always sum to 4x the throttle term.
pub fn mix(throttle: f64, nick: f64, roll: f64, yaw: f64, max_power: f64) -> MixOutput {
    let raw = [
        throttle - nick + yaw,
        throttle + nick + yaw,
        throttle - roll - yaw,
        throttle + roll - yaw,
    ];
    let mut clamped = false;
    let mut motor_power = [0.0; 4];
    for (out, r) in motor_power.iter_mut().zip(raw) {
        let p = r * max_power;
        let c = p.clamp(0.0, max_power);
        if (c - p).abs() > 0.0 {
            clamped = true;
        }
        *out = c;
    }
    MixOutput {
        motor_power,
        clamped,
    }
}

/// Geometry and inertia of the vehicle.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct AirframeConfig {
    /// Total mass, kg.
    pub mass: f64,
    /// Tip-to-tip diameter, m.
    pub diameter: f64,
    /// Distance from hub to each motor, m.
    pub arm_length: f64,
    /// Principal moments of inertia, kg m^2. Symmetric model: Ixx == Iyy.
    pub inertia: [f64; 3],
    /// Aerodynamic yaw damping, N m per (rad/s)^2.
    pub yaw_drag: f64,
    /// Reaction torque per watt of shaft power, N m / W. Sign applied per
    /// propeller handedness.
    pub yaw_torque_per_watt: f64,
    /// Translational drag, N per m/s. Makes steady tilt end in steady
    /// velocity, which is what lets the accelerometer observe tilt at all.
    pub linear_drag: f64,
}

impl Default for AirframeConfig {
    fn default() -> Self {
        // Inertia from point masses at the arm tips (4 x 55 g at 0.17 m)
        // plus a 0.43 kg central hub of ~6 cm radius.
        Self {
            mass: 0.65,
            diameter: 0.48,
            arm_length: 0.17,
            inertia: [0.0072, 0.0072, 0.0131],
            yaw_drag: 5.0e-4,
            yaw_torque_per_watt: 2.0e-3,
            linear_drag: 0.12,
        }
    }
}

impl AirframeConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.mass <= 0.0 {
            return Err(SimError::config("airframe.mass", "must be > 0"));
        }
        if self.inertia.iter().any(|&i| i <= 0.0) {
            return Err(SimError::config("airframe.inertia", "must be > 0"));
        }
        if self.linear_drag < 0.0 {
            return Err(SimError::config("airframe.linear_drag", "must be >= 0"));
        }
        if (self.inertia[0] - self.inertia[1]).abs() > 1e-12 {
            return Err(SimError::config(
                "airframe.inertia",
                "Ixx must equal Iyy for the symmetric model",
            ));
        }
        Ok(())
    }
}

/// Ground-truth pose and motion of the vehicle.
#[derive(Debug, Clone, Copy)]
pub struct RigidState {
    /// Position in the world frame, m (z up).
    pub position: Vector3<f64>,
    /// Velocity in the world frame, m/s.
    pub velocity: Vector3<f64>,
    /// Body-to-world rotation.
    pub orientation: UnitQuaternion<f64>,
    /// Angular velocity in the body frame, rad/s.
    pub angular_velocity: Vector3<f64>,
}

impl RigidState {
    pub fn at_rest(position: Vector3<f64>) -> Self {
        Self {
            position,
            velocity: Vector3::zeros(),
            orientation: UnitQuaternion::identity(),
            angular_velocity: Vector3::zeros(),
        }
    }

    /// Euler angles (roll about x, pitch about y, yaw about z).
    pub fn euler(&self) -> (f64, f64, f64) {
        self.orientation.euler_angles()
    }
}

/// Semi-implicit Euler step of the 6-DOF rigid body.
///
/// `motor_power` are the four shaft powers in motor order; thrust acts along
/// body +z from each rotor. Clockwise propellers (front/rear) push the body
/// counter-clockwise (+z reaction), the others the opposite way.
pub fn rigid_body_step(
    state: &RigidState,
    config: &AirframeConfig,
    env: &Environment,
    disk: &PropellerDisk,
    motor_power: [f64; 4],
    external_torque: &Vector3<f64>,
    dt: f64,
) -> Result<RigidState, SimError> {
    if !(dt > 0.0 && dt <= 5e-3) {
        return Err(SimError::domain(format!(
            "rigid_body_step: dt {dt} outside (0, 5 ms]"
        )));
    }

    let mut thrust = [0.0; 4];
    for (t, &p) in thrust.iter_mut().zip(&motor_power) {
        *t = thrust_ideal(env, disk, p.max(0.0))?;
    }

    let l = config.arm_length;
    // Motor positions: front +x, rear -x, right -y, left +y.
    let torque_x = l * (thrust[3] - thrust[2]);
    let torque_y = l * (thrust[1] - thrust[0]);
    let reaction: f64 = config.yaw_torque_per_watt
        * (motor_power[0] + motor_power[1] - motor_power[2] - motor_power[3]);
    let wz = state.angular_velocity.z;
    let torque_z = reaction - config.yaw_drag * wz * wz.abs();
    let torque = Vector3::new(torque_x, torque_y, torque_z) + external_torque;

    let inertia = Vector3::from(config.inertia);
    let omega = state.angular_velocity;
    let coriolis = omega.cross(&omega.component_mul(&inertia));
    let omega_dot = (torque - coriolis).component_div(&inertia);
    let omega_new = omega + omega_dot * dt;

    let rotvec = omega_new * dt;
    let orientation = state.orientation * UnitQuaternion::from_scaled_axis(rotvec);
    // from_scaled_axis renormalizes; renormalize explicitly anyway to keep
    // the per-step norm invariant independent of nalgebra internals.
    let orientation = UnitQuaternion::new_normalize(*orientation.quaternion());

    let total_thrust: f64 = thrust.iter().sum();
    let thrust_world = state.orientation * Vector3::new(0.0, 0.0, total_thrust);
    let accel = thrust_world / config.mass + Vector3::new(0.0, 0.0, -env.gravity)
        - (config.linear_drag / config.mass) * state.velocity;
    let velocity = state.velocity + accel * dt;
    let position = state.position + velocity * dt;

    let next = RigidState {
        position,
        velocity,
        orientation,
        angular_velocity: omega_new,
    };
    let finite = next.position.iter().all(|v| v.is_finite())
        && next.velocity.iter().all(|v| v.is_finite())
        && next.angular_velocity.iter().all(|v| v.is_finite())
        && next.orientation.quaternion().coords.iter().all(|v| v.is_finite());
    if !finite {
        return Err(SimError::domain(
            "rigid_body_step: non-finite state after integration",
        ));
    }
    Ok(next)
}

/// Lithium-polymer pack with an Ohmic internal resistance and a
/// piecewise-linear open-circuit curve (4.2 V -> 3.3 V per cell over charge).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct BatteryState {
    pub cells: u32,
    /// Rated capacity, mAh.
    pub capacity_mah: f64,
    /// Remaining charge, mAh.
    pub charge_mah: f64,
    /// Nominal per-cell voltage, V.
    pub nominal_cell_voltage: f64,
    /// Pack internal resistance, Ohm.
    pub internal_resistance: f64,
    /// Terminal voltage under the most recent load, V.
    pub terminal_voltage: f64,
    /// Set once charge dips below the 3.0 V/cell floor; LiPo cells do not
    /// survive deep discharge.
    pub deep_discharge: bool,
}

impl Default for BatteryState {
    fn default() -> Self {
        let mut b = Self {
            cells: 3,
            capacity_mah: 1250.0,
            charge_mah: 1250.0,
            nominal_cell_voltage: 3.7,
            internal_resistance: 0.05,
            terminal_voltage: 0.0,
            deep_discharge: false,
        };
        b.terminal_voltage = b.open_circuit_voltage();
        b
    }
}

impl BatteryState {
    /// Open-circuit pack voltage from the piecewise-linear per-cell curve.
    pub fn open_circuit_voltage(&self) -> f64 {
        let frac = (self.charge_mah / self.capacity_mah).clamp(0.0, 1.0);
        let per_cell = 3.3 + 0.9 * frac;
        per_cell * self.cells as f64
    }

    pub fn exhausted(&self) -> bool {
        self.charge_mah <= 0.0
    }

    /// Pack energy at nominal voltage, Wh.
    pub fn energy_wh(&self) -> f64 {
        self.cells as f64 * self.nominal_cell_voltage * self.capacity_mah / 1000.0
    }
}

/// Drain the battery at `current_draw` amps for `dt` seconds.
pub fn battery_step(batt: &BatteryState, current_draw: f64, dt: f64) -> BatteryState {
    let draw = current_draw.max(0.0);
    let charge = (batt.charge_mah - draw * dt * 1000.0 / 3600.0).max(0.0);
    let mut next = BatteryState {
        charge_mah: charge,
        ..*batt
    };
    let terminal = next.open_circuit_voltage() - draw * batt.internal_resistance;
    next.terminal_voltage = terminal;
    let floor = 3.0 * batt.cells as f64;
    if terminal < floor || next.exhausted() {
        next.deep_discharge = true;
    }
    next
}

/// One line of the component power table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComponentPower {
    pub name: String,
    pub watts: f64,
}

/// Totalled power draws with the ideal endurance they imply.
#[derive(Debug, Clone)]
pub struct PowerBudget {
    pub components: Vec<ComponentPower>,
    pub total_watts: f64,
    /// Fraction of the total per component, same order as `components`.
    pub shares: Vec<f64>,
    /// Battery energy / total power, minutes. `f64::INFINITY` when nothing
    /// draws power.
    pub endurance_min: f64,
}

/// Default component draws: the measured budget of the real vehicle.
pub fn default_component_powers() -> Vec<ComponentPower> {
    [
        ("motors", 45.0),
        ("gyroscopes", 0.150),
        ("accelerometers", 0.005),
        ("ultrasonic sensors", 0.500),
        ("mainboards", 0.060),
    ]
    .iter()
    .map(|&(name, watts)| ComponentPower {
        name: name.to_string(),
        watts,
    })
    .collect()
}

/// Sum component draws and derive the ideal endurance from battery energy.
pub fn power_budget(
    components: &[ComponentPower],
    battery: &BatteryState,
) -> Result<PowerBudget, SimError> {
    for c in components {
        if c.watts < 0.0 {
            return Err(SimError::domain(format!(
                "power_budget: negative draw for {}",
                c.name
            )));
        }
    }
    let total: f64 = components.iter().map(|c| c.watts).sum();
    let shares = components
        .iter()
        .map(|c| if total > 0.0 { c.watts / total } else { 0.0 })
        .collect();
    let endurance_min = if total > 0.0 {
        battery.energy_wh() / total * 60.0
    } else {
        f64::INFINITY
    };
    Ok(PowerBudget {
        components: components.to_vec(),
        total_watts: total,
        shares,
        endurance_min,
    })
}

/// How thrust margin and energy trend when the airframe is scaled.
#[derive(Debug, Clone)]
pub struct ScalingReport {
    pub reference_diameter: f64,
    pub target_diameter: f64,
    /// Linear scale factor target/reference.
    pub linear_scale: f64,
    /// Disk area ratio (scale^2).
    pub area_ratio: f64,
    /// Mass ratio under m ~ A^(3/2) (scale^3).
    pub mass_ratio: f64,
    /// Required thrust ratio, g*m, so equal to the mass ratio.
    pub required_thrust_ratio: f64,
    /// Available thrust ratio at fixed power, F ~ A^(1/3).
    pub available_thrust_ratio: f64,
    /// available/required relative to the reference craft; > 1 means the
    /// smaller craft has more thrust headroom at the same power.
    pub thrust_margin_ratio: f64,
    /// Stored energy ratio (scales with mass, i.e. cubically) — the reason
    /// miniaturization is still hard despite the thrust headroom.
    pub energy_ratio: f64,
}

/// Apply the miniaturization scaling laws F ~ A^(1/3) at fixed power and
/// m ~ A^(3/2) to a target diameter.
pub fn scaling_feasibility(
    reference: &AirframeConfig,
    target_diameter: f64,
) -> Result<ScalingReport, SimError> {
    if target_diameter <= 0.0 {
        return Err(SimError::domain("scaling_feasibility: diameter must be > 0"));
    }
    let s = target_diameter / reference.diameter;
    let area_ratio = s * s;
    let mass_ratio = area_ratio.powf(1.5);
    let available_thrust_ratio = area_ratio.cbrt();
    Ok(ScalingReport {
        reference_diameter: reference.diameter,
        target_diameter,
        linear_scale: s,
        area_ratio,
        mass_ratio,
        required_thrust_ratio: mass_ratio,
        available_thrust_ratio,
        thrust_margin_ratio: available_thrust_ratio / mass_ratio,
        energy_ratio: mass_ratio,
    })
}
