//! Event-resolution model of the microcontroller's hard real-time duty:
//! decoding the four input PPM channels, generating the four output PPM
//! channels, interleaving the control computation, and the failure modes
//! that come with it (interrupt collisions, lost timers, full-throttle
//! degenerate pulses).
//!
//! The time base is integer microseconds; the 40 us precision requirement
//! demands sub-40 us resolution.

use serde::{Deserialize, Serialize};
use std::collections::HashMap;

use crate::SimError;

/// Pulse width that encodes command 0.0, us.
pub const PULSE_MIN_US: u64 = 1000;
/// Pulse width that encodes command 1.0, us.
pub const PULSE_MAX_US: u64 = 2000;

/// What kind of work an event demands from the processor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    InputEdge,
    OutputTimer,
    ComputeSlot,
    TelemetrySlot,
}

/// A microsecond-stamped scheduler event.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimedEvent {
    pub timestamp_us: u64,
    pub kind: EventKind,
    pub channel: u8,
}

/// One PPM edge on a wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub timestamp_us: u64,
    pub channel: u8,
    pub rising: bool,
}

/// Decoder state for one input channel.
#[derive(Debug, Clone, Copy)]
pub struct PpmChannelState {
    pub last_rising_us: Option<u64>,
    pub last_edge_us: Option<u64>,
    /// Most recent decoded pulse width, us.
    pub pulse_width_us: Option<u64>,
    /// Last valid decoded command, held through stale frames (failsafe).
    pub command: f64,
    pub valid: bool,
    pub stale: bool,
}

impl Default for PpmChannelState {
    fn default() -> Self {
        Self {
            last_rising_us: None,
            last_edge_us: None,
            pulse_width_us: None,
            command: 0.0,
            valid: false,
            stale: false,
        }
    }
}

fn width_to_command(width_us: u64) -> Option<f64> {
    if !(PULSE_MIN_US..=PULSE_MAX_US).contains(&width_us) {
        return None;
    }
    Some((width_us - PULSE_MIN_US) as f64 / (PULSE_MAX_US - PULSE_MIN_US) as f64)
}

fn command_to_width(command: f64) -> u64 {
    let c = command.clamp(0.0, 1.0);
    PULSE_MIN_US + (c * (PULSE_MAX_US - PULSE_MIN_US) as f64).round() as u64
}

/// Four-channel input PPM decoder with a stale-frame failsafe: a silent
/// channel holds its last valid command and is flagged stale.
#[derive(Debug, Clone)]
pub struct PpmDecoder {
    pub channels: [PpmChannelState; 4],
    /// A channel with no edge for this long is stale.
    pub stale_timeout_us: u64,
    /// Total edges seen.
    pub edge_count: u64,
}

impl Default for PpmDecoder {
    fn default() -> Self {
        Self {
            channels: [PpmChannelState::default(); 4],
            // 2.5 nominal 50 Hz frames
            stale_timeout_us: 50_000,
            edge_count: 0,
        }
    }
}

impl PpmDecoder {
    /// Feed a time-ordered edge stream. Returns the decoded commands after
    /// the last edge.
    pub fn feed(&mut self, edges: &[Edge]) -> Result<[f64; 4], SimError> {
        let mut last_t = 0u64;
        for e in edges {
            if e.timestamp_us < last_t {
                return Err(SimError::domain("ppm_decode: edges not time-ordered"));
            }
            last_t = e.timestamp_us;
            let ch = &mut self.channels[e.channel as usize % 4];
            self.edge_count += 1;
            ch.last_edge_us = Some(e.timestamp_us);
            if e.rising {
                ch.last_rising_us = Some(e.timestamp_us);
            } else if let Some(rise) = ch.last_rising_us.take() {
                let width = e.timestamp_us - rise;
                ch.pulse_width_us = Some(width);
                match width_to_command(width) {
                    Some(cmd) => {
                        ch.command = cmd;
                        ch.valid = true;
                        ch.stale = false;
                    }
                    None => ch.valid = false,
                }
            }
        }
        self.refresh_staleness(last_t);
        Ok(self.commands())
    }

    /// Mark channels stale relative to `now`, holding their last command.
    pub fn refresh_staleness(&mut self, now_us: u64) {
        for ch in &mut self.channels {
            let quiet = match ch.last_edge_us {
                Some(t) => now_us.saturating_sub(t),
                None => now_us,
            };
            if quiet > self.stale_timeout_us {
                ch.stale = true;
            }
        }
    }

    pub fn commands(&self) -> [f64; 4] {
        [
            self.channels[0].command,
            self.channels[1].command,
            self.channels[2].command,
            self.channels[3].command,
        ]
    }
}

/// Build the edge stream of a four-channel RC transmitter frame train.
/// `pulse widths` per channel; frames at `frame_rate` Hz for `duration_s`.
pub fn synthesize_input_edges(
    commands: [f64; 4],
    frame_rate: f64,
    duration_s: f64,
) -> Vec<Edge> {
    let period_us = (1e6 / frame_rate).round() as u64;
    let n_frames = (duration_s * frame_rate).round() as u64;
    let mut edges = Vec::new();
    for frame in 0..n_frames {
        let t0 = frame * period_us;
        for (i, &cmd) in commands.iter().enumerate() {
            // channels staggered inside the frame so edges interleave
            let rise = t0 + i as u64 * 2_200;
            let width = command_to_width(cmd);
            edges.push(Edge {
                timestamp_us: rise,
                channel: i as u8,
                rising: true,
            });
            edges.push(Edge {
                timestamp_us: rise + width,
                channel: i as u8,
                rising: false,
            });
        }
    }
    edges.sort_by_key(|e| e.timestamp_us);
    edges
}

/// Generate the ideal (uncontended) output edge stream for four motor
/// channels at the given regulation rate. Commands update atomically at
/// pulse starts, never mid-pulse.
pub fn ppm_encode(
    command_schedule: &[(u64, [f64; 4])],
    regulation_rate: f64,
    duration_s: f64,
) -> Result<Vec<Edge>, SimError> {
    if !(10.0..=500.0).contains(&regulation_rate) {
        return Err(SimError::domain(format!(
            "ppm_encode: regulation rate {regulation_rate} Hz outside 10..=500"
        )));
    }
    let period_us = (1e6 / regulation_rate).round() as u64;
    let n_cycles = (duration_s * regulation_rate).round() as u64;
    let mut edges = Vec::new();
    for cycle in 0..n_cycles {
        let t0 = cycle * period_us;
        // latest command at or before the pulse start
        let commands = command_schedule
            .iter()
            .take_while(|(t, _)| *t <= t0)
            .last()
            .map(|(_, c)| *c)
            .unwrap_or([0.0; 4]);
        for (i, &cmd) in commands.iter().enumerate() {
            let width = command_to_width(cmd);
            edges.push(Edge {
                timestamp_us: t0,
                channel: i as u8,
                rising: true,
            });
            edges.push(Edge {
                timestamp_us: t0 + width,
                channel: i as u8,
                rising: false,
            });
        }
    }
    edges.sort_by(|a, b| {
        a.timestamp_us
            .cmp(&b.timestamp_us)
            .then(a.channel.cmp(&b.channel))
            .then(b.rising.cmp(&a.rising))
    });
    Ok(edges)
}

/// ISR service costs and priorities. Lower number = higher priority.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IsrCostModel {
    /// Service cost per event kind, us.
    pub cost_us: HashMap<EventKind, u64>,
    pub priority: HashMap<EventKind, u8>,
}

impl Default for IsrCostModel {
    fn default() -> Self {
        // 8 us per event puts the five-event worst case at the 40 us
        // precision boundary
        let cost_us = [
            (EventKind::InputEdge, 8),
            (EventKind::OutputTimer, 8),
            (EventKind::ComputeSlot, 8),
            (EventKind::TelemetrySlot, 8),
        ]
        .into_iter()
        .collect();
        let priority = [
            (EventKind::InputEdge, 0),
            (EventKind::OutputTimer, 1),
            (EventKind::ComputeSlot, 2),
            (EventKind::TelemetrySlot, 3),
        ]
        .into_iter()
        .collect();
        Self { cost_us, priority }
    }
}

impl IsrCostModel {
    pub fn validate(&self) -> Result<(), SimError> {
        for (k, &c) in &self.cost_us {
            if c == 0 {
                return Err(SimError::config(
                    "scheduler.cost_us",
                    format!("cost for {k:?} must be > 0"),
                ));
            }
        }
        Ok(())
    }

    pub fn cost(&self, kind: EventKind) -> u64 {
        *self.cost_us.get(&kind).unwrap_or(&8)
    }

    pub fn prio(&self, kind: EventKind) -> u8 {
        *self.priority.get(&kind).unwrap_or(&255)
    }
}

/// Realized-vs-ideal timing of every serviced event.
#[derive(Debug, Clone)]
pub struct JitterReport {
    /// Per output channel: max absolute edge-timing error, us.
    pub max_jitter_us: u64,
    pub mean_jitter_us: f64,
    pub deadline_miss_count: u64,
    /// Histogram over 8 us buckets.
    pub histogram: Vec<u64>,
    /// (event, realized service completion) for every event, in service order.
    pub serviced: Vec<(TimedEvent, u64)>,
}

/// Priority-preemptive service simulation of an event set.
///
/// An event's ideal emission time is its arrival plus its own service cost
/// (the cost an uncontended ISR always pays, which the encoder
/// pre-compensates); jitter is the extra serialization delay caused by
/// other events. `deadline_us` flags events whose jitter exceeds it.
pub fn simulate_contention(
    events: &[TimedEvent],
    cost_model: &IsrCostModel,
    deadline_us: u64,
) -> Result<JitterReport, SimError> {
    cost_model.validate()?;
    let mut pending: Vec<TimedEvent> = events.to_vec();
    pending.sort_by_key(|e| e.timestamp_us);

    let mut serviced = Vec::with_capacity(pending.len());
    let mut jitters = Vec::with_capacity(pending.len());
    let mut clock = 0u64;
    let mut queue: Vec<TimedEvent> = Vec::new();
    let mut next_arrival = 0usize;

    while next_arrival < pending.len() || !queue.is_empty() {
        if queue.is_empty() {
            let e = pending[next_arrival];
            clock = clock.max(e.timestamp_us);
        }
        while next_arrival < pending.len() && pending[next_arrival].timestamp_us <= clock {
            queue.push(pending[next_arrival]);
            next_arrival += 1;
        }
        if queue.is_empty() {
            continue;
        }
        // highest priority first; FIFO within a priority level
        let best = queue
            .iter()
            .enumerate()
            .min_by_key(|(i, e)| (cost_model.prio(e.kind), e.timestamp_us, *i))
            .map(|(i, _)| i)
            .unwrap();
        let event = queue.remove(best);
        let start = clock.max(event.timestamp_us);
        let completion = start + cost_model.cost(event.kind);
        clock = completion;
        let ideal = event.timestamp_us + cost_model.cost(event.kind);
        jitters.push(completion - ideal);
        serviced.push((event, completion));
    }

    let max = jitters.iter().copied().max().unwrap_or(0);
    let mean = if jitters.is_empty() {
        0.0
    } else {
        jitters.iter().sum::<u64>() as f64 / jitters.len() as f64
    };
    let misses = jitters.iter().filter(|&&j| j > deadline_us).count() as u64;
    let mut histogram = vec![0u64; (max / 8 + 1) as usize];
    for j in &jitters {
        histogram[(*j / 8) as usize] += 1;
    }
    Ok(JitterReport {
        max_jitter_us: max,
        mean_jitter_us: mean,
        deadline_miss_count: misses,
        histogram,
        serviced,
    })
}

/// The paper-named worst case: one input edge and four output timer events
/// landing in the same instant.
pub fn worst_case_collision(at_us: u64) -> Vec<TimedEvent> {
    let mut events = vec![TimedEvent {
        timestamp_us: at_us,
        kind: EventKind::InputEdge,
        channel: 0,
    }];
    for ch in 0..4 {
        events.push(TimedEvent {
            timestamp_us: at_us,
            kind: EventKind::OutputTimer,
            channel: ch,
        });
    }
    events
}

/// Exhaustively enumerate service orders compatible with the priority map
/// and return the worst serialization delay any event can see. This is the
/// analytic bound (number of higher-or-equal-priority events - 1) * max
/// cost, computed by brute force rather than by the formula.
pub fn enumerate_jitter_bound(events: &[TimedEvent], cost_model: &IsrCostModel) -> u64 {
    // all events assumed simultaneous (the collision case); for each victim,
    // every higher-or-equal-priority event may be serviced first
    let mut worst = 0u64;
    for victim in events {
        let vp = cost_model.prio(victim.kind);
        let delay: u64 = events
            .iter()
            .filter(|e| *e != victim && cost_model.prio(e.kind) <= vp)
            .map(|e| cost_model.cost(e.kind))
            .sum();
        worst = worst.max(delay);
    }
    worst
}

/// A timing fault on an output channel.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimingFaultKind {
    LostTimer,
    DelayedTimer,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TimingFault {
    pub kind: TimingFaultKind,
    pub channel: u8,
    pub at_time_s: f64,
    /// For delayed timers: how late the falling edge fires, us.
    #[serde(default)]
    pub delay_us: u64,
}

/// Apply a timing fault to an output edge stream. A lost falling-edge timer
/// leaves the pulse high: the channel degenerates to a full-throttle
/// encoding from the fault onward. With the watchdog enabled, pulses are
/// clamped back to the last pre-fault width after `watchdog_window_us`.
pub fn inject_timing_fault(
    edges: &[Edge],
    fault: &TimingFault,
    watchdog_window_us: Option<u64>,
) -> Vec<Edge> {
    let fault_us = (fault.at_time_s * 1e6) as u64;
    let mut out = Vec::with_capacity(edges.len());
    let mut last_good_width: u64 = PULSE_MIN_US;
    let mut pending_rise: Option<u64> = None;
    for e in edges {
        if e.channel != fault.channel {
            out.push(*e);
            continue;
        }
        if e.rising {
            pending_rise = Some(e.timestamp_us);
            out.push(*e);
            continue;
        }
        let rise = match pending_rise.take() {
            Some(r) => r,
            None => {
                out.push(*e);
                continue;
            }
        };
        let nominal_width = e.timestamp_us - rise;
        let affected = rise >= fault_us;
        let watchdog_cleared = matches!(watchdog_window_us, Some(w) if rise >= fault_us + w);
        let width = if !affected {
            last_good_width = nominal_width;
            nominal_width
        } else if watchdog_cleared {
            // watchdog clamps the degenerate output to the last valid command
            last_good_width
        } else {
            match fault.kind {
                TimingFaultKind::LostTimer => PULSE_MAX_US,
                TimingFaultKind::DelayedTimer => {
                    (nominal_width + fault.delay_us).min(PULSE_MAX_US)
                }
            }
        };
        out.push(Edge {
            timestamp_us: rise + width,
            channel: e.channel,
            rising: false,
        });
    }
    out
}

/// Decode the command a channel's pulses carry over time, for inspecting
/// fault effects: returns (pulse start us, decoded command).
pub fn channel_command_trace(edges: &[Edge], channel: u8) -> Vec<(u64, f64)> {
    let mut trace = Vec::new();
    let mut rise: Option<u64> = None;
    for e in edges.iter().filter(|e| e.channel == channel) {
        if e.rising {
            rise = Some(e.timestamp_us);
        } else if let Some(r) = rise.take() {
            let width = e.timestamp_us - r;
            trace.push((r, width_to_command(width).unwrap_or(1.0)));
        }
    }
    trace
}

/// One task in the per-cycle control pipeline.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineTask {
    pub name: String,
    pub cost_us: u64,
}

/// A feasible per-cycle timeline.
#[derive(Debug, Clone)]
pub struct FrameSchedule {
    pub period_us: u64,
    /// (task name, start us, end us) within the cycle.
    pub slots: Vec<(String, u64, u64)>,
    pub slack_us: u64,
}

/// Assign the pipeline tasks to slots within one control cycle. Over-budget
/// configurations are rejected up front with the violating tasks listed.
pub fn schedule_frame(tasks: &[PipelineTask], rate_hz: f64) -> Result<FrameSchedule, SimError> {
    if rate_hz <= 0.0 {
        return Err(SimError::Schedulability("rate must be > 0".into()));
    }
    let period_us = (1e6 / rate_hz).round() as u64;
    let total: u64 = tasks.iter().map(|t| t.cost_us).sum();
    if total >= period_us {
        let names: Vec<&str> = tasks.iter().map(|t| t.name.as_str()).collect();
        return Err(SimError::Schedulability(format!(
            "tasks [{}] total {total} us but the {rate_hz} Hz cycle is only {period_us} us",
            names.join(", ")
        )));
    }
    let mut slots = Vec::with_capacity(tasks.len());
    let mut cursor = 0u64;
    for t in tasks {
        slots.push((t.name.clone(), cursor, cursor + t.cost_us));
        cursor += t.cost_us;
    }
    Ok(FrameSchedule {
        period_us,
        slots,
        slack_us: period_us - total,
    })
}

/// The default control pipeline: sensor read, estimate, control, encode.
pub fn default_pipeline() -> Vec<PipelineTask> {
    [
        ("sensor_read", 120),
        ("estimate", 420),
        ("control", 260),
        ("encode", 80),
    ]
    .iter()
    .map(|&(name, cost_us)| PipelineTask {
        name: name.to_string(),
        cost_us,
    })
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn decode_counts_400_edges_per_second() {
        let edges = synthesize_input_edges([0.5; 4], 50.0, 1.0);
        assert_eq!(edges.len(), 400);
        let mut dec = PpmDecoder::default();
        let cmds = dec.feed(&edges).unwrap();
        assert_eq!(dec.edge_count, 400);
        for c in cmds {
            assert_abs_diff_eq!(c, 0.5, epsilon = 1e-3);
        }
    }

    #[test]
    fn decode_endpoint_mapping() {
        let edges = synthesize_input_edges([0.0, 1.0, 0.0, 1.0], 50.0, 0.1);
        let mut dec = PpmDecoder::default();
        let cmds = dec.feed(&edges).unwrap();
        assert_eq!(cmds[0], 0.0);
        assert_eq!(cmds[1], 1.0);
    }

    #[test]
    fn decode_out_of_bounds_invalidates() {
        let edges = vec![
            Edge { timestamp_us: 0, channel: 0, rising: true },
            Edge { timestamp_us: 3000, channel: 0, rising: false },
        ];
        let mut dec = PpmDecoder::default();
        dec.feed(&edges).unwrap();
        assert!(!dec.channels[0].valid);
    }

    #[test]
    fn decode_dropped_frame_holds_value() {
        // two good frames, then silence on channel 2 for one frame
        let mut edges = synthesize_input_edges([0.3; 4], 50.0, 0.04);
        edges.extend(
            synthesize_input_edges([0.3; 4], 50.0, 0.02)
                .into_iter()
                .filter(|e| e.channel != 2)
                .map(|mut e| {
                    e.timestamp_us += 40_000;
                    e
                }),
        );
        let mut dec = PpmDecoder::default();
        let cmds = dec.feed(&edges).unwrap();
        assert_abs_diff_eq!(cmds[2], 0.3, epsilon = 1e-3);
        // after well past the timeout, the channel flags stale but holds
        dec.refresh_staleness(200_000);
        assert!(dec.channels[2].stale);
        assert_abs_diff_eq!(dec.commands()[2], 0.3, epsilon = 1e-3);
    }

    #[test]
    fn decode_rejects_unordered_edges() {
        let edges = vec![
            Edge { timestamp_us: 100, channel: 0, rising: true },
            Edge { timestamp_us: 50, channel: 0, rising: false },
        ];
        assert!(PpmDecoder::default().feed(&edges).is_err());
    }

    #[test]
    fn encode_signal_change_rate_at_500hz() {
        let edges = ppm_encode(&[(0, [0.5; 4])], 500.0, 1.0).unwrap();
        assert!(edges.len() >= 3000, "only {} signal changes", edges.len());
    }

    #[test]
    fn encode_periodic_uncontended() {
        let edges = ppm_encode(&[(0, [0.25; 4])], 500.0, 0.1).unwrap();
        let rises: Vec<u64> = edges
            .iter()
            .filter(|e| e.channel == 0 && e.rising)
            .map(|e| e.timestamp_us)
            .collect();
        for pair in rises.windows(2) {
            assert_eq!(pair[1] - pair[0], 2000);
        }
    }

    #[test]
    fn encode_command_updates_at_pulse_boundary() {
        // command changes at 2.5 ms; the 500 Hz pulses at 0 and 2 ms carry
        // the old value, the pulse at 4 ms the new one
        let edges = ppm_encode(&[(0, [0.2; 4]), (2500, [0.8; 4])], 500.0, 0.01).unwrap();
        let trace = channel_command_trace(&edges, 0);
        assert_abs_diff_eq!(trace[0].1, 0.2, epsilon = 1e-3);
        assert_abs_diff_eq!(trace[1].1, 0.2, epsilon = 1e-3);
        assert_abs_diff_eq!(trace[2].1, 0.8, epsilon = 1e-3);
    }

    #[test]
    fn contention_single_event_no_jitter() {
        let events = vec![TimedEvent {
            timestamp_us: 100,
            kind: EventKind::OutputTimer,
            channel: 0,
        }];
        let report = simulate_contention(&events, &IsrCostModel::default(), 40).unwrap();
        assert_eq!(report.max_jitter_us, 0);
        assert_eq!(report.deadline_miss_count, 0);
    }

    #[test]
    fn contention_spread_events_no_jitter() {
        let events: Vec<TimedEvent> = (0..10)
            .map(|i| TimedEvent {
                timestamp_us: i * 1000,
                kind: EventKind::OutputTimer,
                channel: (i % 4) as u8,
            })
            .collect();
        let report = simulate_contention(&events, &IsrCostModel::default(), 40).unwrap();
        assert_eq!(report.max_jitter_us, 0);
    }

    #[test]
    fn contention_worst_case_within_40us() {
        let events = worst_case_collision(10_000);
        let model = IsrCostModel::default();
        let report = simulate_contention(&events, &model, 40).unwrap();
        let bound = enumerate_jitter_bound(&events, &model);
        assert_eq!(report.max_jitter_us, bound);
        assert!(report.max_jitter_us <= 40);
        assert_eq!(report.deadline_miss_count, 0);
    }

    #[test]
    fn contention_cost_doubling_doubles_bound() {
        let events = worst_case_collision(0);
        let model = IsrCostModel::default();
        let mut doubled = model.clone();
        for c in doubled.cost_us.values_mut() {
            *c *= 2;
        }
        assert_eq!(
            enumerate_jitter_bound(&events, &doubled),
            2 * enumerate_jitter_bound(&events, &model)
        );
        let r1 = simulate_contention(&events, &model, 1_000_000).unwrap();
        let r2 = simulate_contention(&events, &doubled, 1_000_000).unwrap();
        assert_eq!(r2.max_jitter_us, 2 * r1.max_jitter_us);
    }

    #[test]
    fn contention_deterministic() {
        let mut events = worst_case_collision(5_000);
        events.extend((0..50).map(|i| TimedEvent {
            timestamp_us: i * 137,
            kind: EventKind::ComputeSlot,
            channel: 0,
        }));
        let model = IsrCostModel::default();
        let a = simulate_contention(&events, &model, 40).unwrap();
        let b = simulate_contention(&events, &model, 40).unwrap();
        assert_eq!(a.serviced, b.serviced);
        assert_eq!(a.histogram, b.histogram);
    }

    #[test]
    fn edge_order_preserved_per_channel() {
        let mut events = worst_case_collision(1_000);
        events.push(TimedEvent {
            timestamp_us: 1_010,
            kind: EventKind::OutputTimer,
            channel: 0,
        });
        let report = simulate_contention(&events, &IsrCostModel::default(), 40).unwrap();
        let ch0: Vec<u64> = report
            .serviced
            .iter()
            .filter(|(e, _)| e.kind == EventKind::OutputTimer && e.channel == 0)
            .map(|(_, done)| *done)
            .collect();
        assert!(ch0.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn timing_fault_none_is_identity() {
        let edges = ppm_encode(&[(0, [0.3; 4])], 100.0, 0.1).unwrap();
        let fault = TimingFault {
            kind: TimingFaultKind::LostTimer,
            channel: 0,
            at_time_s: 10.0, // beyond the run
            delay_us: 0,
        };
        assert_eq!(inject_timing_fault(&edges, &fault, None), edges);
    }

    #[test]
    fn lost_timer_goes_full_throttle() {
        let edges = ppm_encode(&[(0, [0.3; 4])], 100.0, 0.2).unwrap();
        let fault = TimingFault {
            kind: TimingFaultKind::LostTimer,
            channel: 1,
            at_time_s: 0.1,
            delay_us: 0,
        };
        let faulted = inject_timing_fault(&edges, &fault, None);
        let trace = channel_command_trace(&faulted, 1);
        for (t, cmd) in trace {
            if t >= 100_000 {
                assert_eq!(cmd, 1.0, "pulse at {t} us should be full throttle");
            } else {
                assert_abs_diff_eq!(cmd, 0.3, epsilon = 1e-3);
            }
        }
    }

    #[test]
    fn watchdog_clamps_within_window() {
        let edges = ppm_encode(&[(0, [0.3; 4])], 100.0, 0.3).unwrap();
        let fault = TimingFault {
            kind: TimingFaultKind::LostTimer,
            channel: 1,
            at_time_s: 0.1,
            delay_us: 0,
        };
        let window = 30_000; // 3 cycles
        let guarded = inject_timing_fault(&edges, &fault, Some(window));
        let trace = channel_command_trace(&guarded, 1);
        for (t, cmd) in trace {
            if t >= 100_000 + window {
                assert_abs_diff_eq!(cmd, 0.3, epsilon = 1e-3);
            }
        }
        // and without the watchdog the condition persists
        let unguarded = inject_timing_fault(&edges, &fault, None);
        let last = channel_command_trace(&unguarded, 1).last().unwrap().1;
        assert_eq!(last, 1.0);
    }

    #[test]
    fn schedule_empty_tasks() {
        let s = schedule_frame(&[], 300.0).unwrap();
        assert_eq!(s.slack_us, s.period_us);
    }

    #[test]
    fn schedule_over_budget_rejected() {
        let tasks = vec![PipelineTask {
            name: "estimate".into(),
            cost_us: 5000,
        }];
        let err = schedule_frame(&tasks, 300.0).unwrap_err();
        assert!(err.to_string().contains("estimate"));
    }

    #[test]
    fn schedule_default_pipeline_slack_shrinks_with_rate() {
        let tasks = default_pipeline();
        let mut prev_slack = u64::MAX;
        for rate in [50.0, 100.0, 300.0, 500.0] {
            let s = schedule_frame(&tasks, rate).unwrap();
            assert!(s.slack_us < prev_slack);
            prev_slack = s.slack_us;
        }
    }
}
