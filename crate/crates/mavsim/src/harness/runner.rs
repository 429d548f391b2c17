//! The closed-loop scenario runner: physics at the fine step, sensing and
//! control at the control rate, logging at the log rate. Runs are
//! deterministic for a given configuration and seed.

use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::config::{apply_param, DropoutSensor, ScenarioConfig};
use super::link::{Delivery, TelemetryLink};
use super::metrics::{compute_metrics, MetricsReport, RunnerStats};
use super::runlog::{RunLog, N_COLUMNS};
use crate::airframe::{
    battery_step, mix, motor_step, rigid_body_step, MotorState, RigidState,
};
use crate::control::{
    attitude_control, height_control, position_hold, wall_avoidance, AttitudeSetpoint,
    AttitudeState, HeightControlState, WallAvoidState,
};
use crate::estimator::{self, EstimatorState, UpdateOutcome};
use crate::scheduler::{
    default_pipeline, schedule_frame, simulate_contention, synthesize_input_edges,
    worst_case_collision, EventKind, IsrCostModel, TimedEvent, TimingFaultKind,
};
use crate::sensors::{
    accel_sample, gyro_sample, specific_force_body, ultrasonic_sample, FaultInjector,
    SensorFrame,
};
use crate::SimError;

/// Avionics draw on top of the motors, W (receiver, controller, sensors).
const AVIONICS_WATTS: f64 = 0.715;
/// Telemetry frame size offered to the link at every log tick, bytes.
const TELEMETRY_FRAME_BYTES: u32 = 64;
/// Uplink size of one parameter update frame, bytes.
const PARAM_FRAME_BYTES: u32 = 16;
/// Service deadline for interrupt events, us.
const ISR_DEADLINE_US: u64 = 40;

/// Run the interrupt-contention audit for one second of representative
/// traffic at the configured rates, including one deliberate worst-case
/// collision, and report jitter and deadline misses.
fn timing_audit(config: &ScenarioConfig) -> Result<(u64, u64), SimError> {
    // the control pipeline itself must fit its frame first
    schedule_frame(&default_pipeline(), config.control_rate_hz)?;

    let mut events: Vec<TimedEvent> = synthesize_input_edges([0.5; 4], 50.0, 1.0)
        .into_iter()
        .map(|e| TimedEvent {
            timestamp_us: e.timestamp_us,
            kind: EventKind::InputEdge,
            channel: e.channel,
        })
        .collect();
    let period_us = (1e6 / config.control_rate_hz).round() as u64;
    let cycles = (1e6 / period_us as f64) as u64;
    for c in 0..cycles {
        let t0 = c * period_us;
        for ch in 0..4u8 {
            events.push(TimedEvent {
                timestamp_us: t0,
                kind: EventKind::OutputTimer,
                channel: ch,
            });
        }
        events.push(TimedEvent {
            timestamp_us: t0,
            kind: EventKind::ComputeSlot,
            channel: 0,
        });
    }
    // a worst-case pileup placed off the periodic grid
    events.extend(worst_case_collision(500_137));
    let report = simulate_contention(&events, &IsrCostModel::default(), ISR_DEADLINE_US)?;
    Ok((report.max_jitter_us, report.deadline_miss_count))
}

struct PendingUpdate {
    deliver_at: f64,
    path: String,
    value: f64,
    done: bool,
}

/// Simulate one scenario end to end. Returns the run log and the metrics
/// report with threshold verdicts.
pub fn run_scenario(config: &ScenarioConfig) -> Result<(RunLog, MetricsReport), SimError> {
    config.validate()?;

    let dt = config.physics_dt_s;
    let n_steps = (config.duration_s / dt).round() as u64;
    let control_every = ((1.0 / (config.control_rate_hz * dt)).round() as u64).max(1);
    let log_every = ((1.0 / (config.log_rate_hz * dt)).round() as u64).max(1);
    let dt_ctrl = control_every as f64 * dt;

    let mut rng_gyro = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(0x01));
    let mut rng_accel = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(0x02));
    let mut rng_down = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(0x03));
    let mut rng_side = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(0x04));
    let mut rng_link = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(0x05));
    let mut rng_dist = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(0x06));

    // vehicle state; motors pre-spun to the initial throttle so a hover
    // profile starts trimmed
    let mut rigid = RigidState {
        position: Vector3::from(config.initial.position),
        velocity: Vector3::from(config.initial.velocity),
        ..RigidState::at_rest(Vector3::zeros())
    };
    let initial_throttle = config.pilot_at(0.0).throttle;
    let mut motors: [MotorState; 4] = std::array::from_fn(|_| MotorState {
        shaft_power: initial_throttle * config.motor.max_constant_power,
        commanded_power: initial_throttle * config.motor.max_constant_power,
        ..config.motor
    });
    let mut battery = config.battery;
    let mut vibration = config.sensors.vibration.clone();
    let mut gyro_model = config.sensors.gyro.clone();
    let accel_model = config.sensors.accel.clone();
    let mut injector = FaultInjector::new(config.faults.clone());

    let mut est = EstimatorState::default();
    let tuning = config.filter;
    let mut attitude_state = AttitudeState::default();
    let mut height_state = HeightControlState::default();
    let mut wall_state = WallAvoidState::default();
    let mut control_cfg = config.control.clone();

    let mut link = TelemetryLink::new(config.telemetry);
    let mut updates: Vec<PendingUpdate> = config
        .param_updates
        .iter()
        .map(|u| PendingUpdate {
            // the uplink frame has to serialize before it can apply
            deliver_at: u.t
                + config.telemetry.serialization_time_s(PARAM_FRAME_BYTES)
                + config.telemetry.latency_s,
            path: u.path.clone(),
            value: u.value,
            done: false,
        })
        .collect();

    let down_period = 1.0 / config.sensors.ultrasonic_down.update_rate;
    let side_period = 1.0 / config.sensors.ultrasonic_side.update_rate;
    let mut next_down_ping = 0.0f64;
    let mut next_side_ping = 0.0f64;

    let mut log = RunLog::new();
    let mut stats = RunnerStats::default();
    let (max_jitter, misses) = timing_audit(config)?;
    stats.max_jitter_us = max_jitter;
    stats.deadline_miss_count = misses;

    // held values between control cycles / pings
    let mut latest_gyro: Option<[f64; 3]> = None;
    let mut latest_accel: Option<[f64; 2]> = None;
    let mut latest_down: Option<f64> = None;
    let mut latest_side: Option<f64> = None;
    let mut held_height_contrib = 0.0f64;
    let mut held_wall_corr = 0.0f64;
    let mut cmd = (initial_throttle, 0.0f64, 0.0f64, 0.0f64);
    let mut commanded_power = [initial_throttle * config.motor.max_constant_power; 4];
    let mut accel_world = Vector3::zeros();
    let mut gyro_failed = false;
    let mut grounded = false;
    let mut announced_faults = vec![false; config.faults.len()];
    let mut announced_timing = vec![false; config.timing_faults.len()];
    let mut current_draw = 0.0f64;

    for step in 0..n_steps {
        let t = step as f64 * dt;

        if step % control_every == 0 {
            // parameter updates apply at cycle boundaries after delivery
            for u in updates.iter_mut().filter(|u| !u.done && t >= u.deliver_at) {
                u.done = true;
                match apply_param(&mut control_cfg, &u.path, u.value) {
                    Ok(()) => log
                        .annotations
                        .push((t, format!("param_update applied {}={}", u.path, u.value))),
                    Err(e) => log
                        .annotations
                        .push((t, format!("param_update rejected {}: {e}", u.path))),
                }
            }
            for (i, f) in config.faults.iter().enumerate() {
                if !announced_faults[i] && t >= f.at_time_s {
                    announced_faults[i] = true;
                    log.annotations.push((
                        t,
                        format!(
                            "fault sensor={:?} mode={}",
                            f.sensor,
                            if f.stuck { "stuck" } else { "lost" }
                        ),
                    ));
                }
            }
            for (i, f) in config.timing_faults.iter().enumerate() {
                if !announced_timing[i] && t >= f.at_time_s {
                    announced_timing[i] = true;
                    log.annotations
                        .push((t, format!("timing_fault {:?} channel={}", f.kind, f.channel)));
                }
            }

            let pilot = config.pilot_at(t);

            // sensing
            let vib = vibration.step(
                &[
                    motors[0].shaft_power,
                    motors[1].shaft_power,
                    motors[2].shaft_power,
                    motors[3].shaft_power,
                ],
                dt_ctrl,
            );
            let gyro_raw = gyro_sample(&mut gyro_model, &rigid.angular_velocity, dt_ctrl, &mut rng_gyro);
            let sf = specific_force_body(&rigid.orientation, &accel_world, config.environment.gravity);
            let accel_raw = accel_sample(&accel_model, &sf, vib, &mut rng_accel);

            let body_z = rigid.orientation * Vector3::z();
            let tilt = body_z.z.clamp(-1.0, 1.0).acos();
            let mut new_down = false;
            let mut new_side = false;
            let mut down_reading: Option<f64> = None;
            let mut side_reading: Option<f64> = None;
            if t >= next_down_ping {
                next_down_ping += down_period;
                new_down = true;
                let height = rigid.position.z - config.terrain_height(rigid.position.x);
                down_reading = ultrasonic_sample(
                    &config.sensors.ultrasonic_down,
                    height.max(0.0),
                    tilt,
                    config.scripted_dropout(DropoutSensor::UltrasonicDown, t),
                    &mut rng_down,
                );
            }
            if let Some(wall_y) = config.wall_y {
                if t >= next_side_ping {
                    next_side_ping += side_period;
                    new_side = true;
                    let (roll, _, _) = rigid.euler();
                    side_reading = ultrasonic_sample(
                        &config.sensors.ultrasonic_side,
                        (rigid.position.y - wall_y).abs(),
                        roll,
                        config.scripted_dropout(DropoutSensor::UltrasonicSide, t),
                        &mut rng_side,
                    );
                }
            }

            let mut frame = SensorFrame {
                timestamp_us: (t * 1e6).round() as u64,
                gyro: gyro_raw,
                accel: accel_raw,
                ultrasonic_down: down_reading,
                ultrasonic_side: side_reading,
            };
            injector.apply(&mut frame);
            latest_gyro = frame.gyro;
            latest_accel = frame.accel;
            if new_down {
                latest_down = frame.ultrasonic_down;
                if frame.ultrasonic_down == Some(0.0) {
                    stats.dropout_count_down += 1;
                }
            }
            if new_side {
                latest_side = frame.ultrasonic_side;
                if frame.ultrasonic_side == Some(0.0) {
                    stats.dropout_count_side += 1;
                }
            }

            // estimation
            let mut estimate = None;
            if config.estimator_enabled {
                if let Some(g) = frame.gyro {
                    est = estimator::predict(&est, g, &tuning, dt_ctrl)
                        .map_err(|e| SimError::SimulationFault {
                            t,
                            reason: e.to_string(),
                        })?;
                    if let Some(a) = frame.accel {
                        let (next, outcome) =
                            estimator::update(&est, a, &tuning).map_err(|e| {
                                SimError::SimulationFault {
                                    t,
                                    reason: e.to_string(),
                                }
                            })?;
                        est = next;
                        if outcome == UpdateOutcome::Rejected {
                            stats.rejected_filter_updates += 1;
                        }
                    }
                    estimate = Some((est.roll, est.pitch));
                }
            }

            // ultrasonic-driven loops run at ping times, contributions held
            // between pings
            if new_down {
                let reading = latest_down.unwrap_or(0.0);
                height_control(
                    &control_cfg.height,
                    reading,
                    pilot.throttle,
                    &mut height_state,
                    down_period,
                );
                held_height_contrib = height_state.last_contribution;
            }
            if new_side {
                let reading = latest_side.unwrap_or(0.0);
                held_wall_corr =
                    wall_avoidance(&control_cfg.wall, reading, &mut wall_state, side_period);
            }

            let (ph_nick, ph_roll, _advisory) = if config.estimator_enabled {
                let ta = match (estimate, latest_accel) {
                    (Some(_), Some(a)) => Some(estimator::translational_accel(
                        &est,
                        a,
                        config.environment.gravity,
                    )),
                    _ => None,
                };
                position_hold(&control_cfg.position_hold, estimate, ta.map(|v| [v[0], v[1]]), dt_ctrl)
            } else {
                (0.0, 0.0, false)
            };

            let setpoint = AttitudeSetpoint {
                nick: pilot.nick + ph_nick,
                roll: pilot.roll + ph_roll + held_wall_corr,
                yaw_rate: pilot.yaw,
            };
            let throttle_cmd =
                (pilot.throttle + held_height_contrib).clamp(0.0, 1.0);

            if !gyro_failed {
                match attitude_control(
                    &control_cfg.attitude,
                    &mut attitude_state,
                    &setpoint,
                    frame.gyro,
                    estimate,
                    dt_ctrl,
                ) {
                    Ok(demands) => {
                        cmd = (throttle_cmd, demands.nick, demands.roll, demands.yaw);
                        let mixed = mix(
                            throttle_cmd,
                            demands.nick,
                            demands.roll,
                            demands.yaw,
                            config.motor.max_constant_power,
                        );
                        commanded_power = mixed.motor_power;
                    }
                    Err(_) => {
                        gyro_failed = true;
                        log.annotations.push((
                            t,
                            "gyro signal lost: stabilization inoperative, motors cut".into(),
                        ));
                    }
                }
            }
            if gyro_failed {
                cmd = (0.0, 0.0, 0.0, 0.0);
                commanded_power = [0.0; 4];
            }

            // lost or delayed output timers degrade the affected channel at
            // the pulse level: stuck-high means full power until the
            // watchdog (if any) restores the last valid width
            for f in &config.timing_faults {
                if t < f.at_time_s {
                    continue;
                }
                let cleared = match config.watchdog_window_us {
                    Some(w) => t >= f.at_time_s + w as f64 * 1e-6,
                    None => false,
                };
                if cleared {
                    continue;
                }
                let ch = f.channel as usize % 4;
                commanded_power[ch] = match f.kind {
                    TimingFaultKind::LostTimer => config.motor.max_constant_power,
                    TimingFaultKind::DelayedTimer => (commanded_power[ch]
                        + f.delay_us as f64 / 1000.0 * config.motor.max_constant_power)
                        .min(config.motor.max_constant_power),
                };
            }
        }

        if step % log_every == 0 {
            let opt = |v: Option<f64>| v.unwrap_or(f64::NAN);
            let (roll, pitch, yaw) = rigid.euler();
            let g3 = latest_gyro.unwrap_or([f64::NAN; 3]);
            let a2 = latest_accel.unwrap_or([f64::NAN; 2]);
            let mut row = [0.0f64; N_COLUMNS];
            row[0] = t;
            row[1] = rigid.position.x;
            row[2] = rigid.position.y;
            row[3] = rigid.position.z;
            row[4] = rigid.velocity.x;
            row[5] = rigid.velocity.y;
            row[6] = rigid.velocity.z;
            row[7] = roll;
            row[8] = pitch;
            row[9] = yaw;
            row[10] = g3[0];
            row[11] = g3[1];
            row[12] = g3[2];
            row[13] = a2[0];
            row[14] = a2[1];
            row[15] = opt(latest_down);
            row[16] = if config.wall_y.is_some() {
                opt(latest_side)
            } else {
                f64::NAN
            };
            row[17] = est.roll;
            row[18] = est.pitch;
            row[19] = est.gyro_bias[0];
            row[20] = est.gyro_bias[1];
            row[21] = cmd.0;
            row[22] = cmd.1;
            row[23] = cmd.2;
            row[24] = cmd.3;
            row[25] = motors[0].shaft_power;
            row[26] = motors[1].shaft_power;
            row[27] = motors[2].shaft_power;
            row[28] = motors[3].shaft_power;
            row[29] = battery.terminal_voltage;
            row[30] = battery.charge_mah;
            row[31] = held_height_contrib;
            row[32] = held_wall_corr;
            log.rows.push(row);

            // downlink runs at a quarter of the log rate so 64-byte frames
            // fit the 19200 baud budget
            if (step / log_every) % 4 == 0 {
                match link.transmit(TELEMETRY_FRAME_BYTES, t, &mut rng_link)? {
                    Delivery::At(_) => {}
                    Delivery::Lost | Delivery::QueueDrop => {}
                }
            }
        }

        // physics
        let available = if battery.exhausted() { 0.0 } else { 1.0 };
        for (m, &p) in motors.iter_mut().zip(&commanded_power) {
            *m = motor_step(m, p * available, dt);
        }
        let shaft = [
            motors[0].shaft_power,
            motors[1].shaft_power,
            motors[2].shaft_power,
            motors[3].shaft_power,
        ];
        let torque = if config.disturbance.torque_sigma > 0.0 {
            let nx: f64 = StandardNormal.sample(&mut rng_dist);
            let ny: f64 = StandardNormal.sample(&mut rng_dist);
            Vector3::new(
                config.disturbance.torque_sigma * nx,
                config.disturbance.torque_sigma * ny,
                0.0,
            )
        } else {
            Vector3::zeros()
        };
        let prev_velocity = rigid.velocity;
        let mut next = rigid_body_step(
            &rigid,
            &config.airframe,
            &config.environment,
            &config.propeller,
            shaft,
            &torque,
            dt,
        )
        .map_err(|e| SimError::SimulationFault {
            t,
            reason: e.to_string(),
        })?;

        let ground = config.terrain_height(next.position.x);
        if next.position.z <= ground {
            next.position.z = ground;
            next.velocity = Vector3::zeros();
            next.angular_velocity = Vector3::zeros();
            if !grounded {
                grounded = true;
                log.annotations.push((t, "ground contact".into()));
            }
        } else {
            grounded = false;
        }
        accel_world = (next.velocity - prev_velocity) / dt;
        rigid = next;

        let total_power: f64 = shaft.iter().sum::<f64>() + AVIONICS_WATTS;
        current_draw = total_power / battery.terminal_voltage.max(1.0);
        battery = battery_step(&battery, current_draw, dt);
    }

    link.flush();
    stats.telemetry_delivered = link.delivered;
    stats.telemetry_dropped = link.lost + link.queue_dropped;
    stats.endurance_estimate_min = if current_draw > 0.0 {
        battery.charge_mah / 1000.0 / current_draw * 60.0
    } else {
        f64::INFINITY
    };

    let metrics = compute_metrics(config, &log, &stats);
    Ok((log, metrics))
}
