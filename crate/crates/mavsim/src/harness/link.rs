//! Serial wireless link model: fixed baud-rate serialization, optional
//! random loss, latency, and a bounded transmit queue that drops the oldest
//! frame under overload.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::SimError;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct LinkConfig {
    pub baud: u32,
    /// Framing overhead added to every payload, bytes.
    pub overhead_bytes: u32,
    pub loss_probability: f64,
    /// Propagation/processing latency, s.
    pub latency_s: f64,
    /// Frames that may wait for the line; beyond this the oldest queued
    /// frame is dropped.
    pub queue_depth: usize,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self {
            baud: 19_200,
            overhead_bytes: 0,
            loss_probability: 0.0,
            latency_s: 0.0,
            queue_depth: 8,
        }
    }
}

impl LinkConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.baud == 0 {
            return Err(SimError::config("telemetry.baud", "must be > 0"));
        }
        if !(0.0..=1.0).contains(&self.loss_probability) {
            return Err(SimError::config(
                "telemetry.loss_probability",
                "must be in [0, 1]",
            ));
        }
        Ok(())
    }

    /// Time the line is busy for one frame: 10 bits per byte (8N1).
    pub fn serialization_time_s(&self, payload_bytes: u32) -> f64 {
        (payload_bytes + self.overhead_bytes) as f64 * 10.0 / self.baud as f64
    }
}

/// Fate of one offered frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Delivery {
    /// Delivered; the instant the last byte (plus latency) arrives.
    At(f64),
    /// Dropped by the random loss process.
    Lost,
    /// Pushed out of the queue by overload.
    QueueDrop,
}

/// One frame on or waiting for the line.
#[derive(Debug, Clone, Copy)]
struct QueuedFrame {
    done: f64,
    ser: f64,
    wire_bytes: u32,
}

/// Stateful link: tracks when the line frees up and how many frames wait.
#[derive(Debug, Clone)]
pub struct TelemetryLink {
    pub config: LinkConfig,
    busy_until: f64,
    /// In-flight and waiting frames, oldest first.
    queue: Vec<QueuedFrame>,
    pub delivered: u64,
    pub lost: u64,
    pub queue_dropped: u64,
    /// Bytes put on the wire with their start times, for throughput audits.
    pub wire_log: Vec<(f64, u32)>,
}

impl TelemetryLink {
    pub fn new(config: LinkConfig) -> Self {
        Self {
            config,
            busy_until: 0.0,
            queue: Vec::new(),
            delivered: 0,
            lost: 0,
            queue_dropped: 0,
            wire_log: Vec::new(),
        }
    }

    /// Account for every frame finished by time `t`.
    fn retire(&mut self, t: f64) {
        while let Some(&frame) = self.queue.first() {
            if frame.done > t {
                break;
            }
            self.queue.remove(0);
            self.delivered += 1;
            self.wire_log.push((frame.done - frame.ser, frame.wire_bytes));
        }
    }

    /// Retire everything still pending; call once after the last offer.
    pub fn flush(&mut self) {
        self.retire(f64::INFINITY);
    }

    /// Offer one frame at time `t`. Frames queue while the line is busy; a
    /// full queue evicts the oldest frame not yet on the wire, releasing
    /// its line reservation.
    pub fn transmit<R: Rng>(
        &mut self,
        payload_bytes: u32,
        t: f64,
        rng: &mut R,
    ) -> Result<Delivery, SimError> {
        if payload_bytes == 0 {
            return Err(SimError::domain("link_transmit: frame size must be > 0"));
        }
        self.retire(t);

        if self.config.loss_probability > 0.0 && rng.gen::<f64>() < self.config.loss_probability {
            self.lost += 1;
            return Ok(Delivery::Lost);
        }

        if self.queue.len() >= self.config.queue_depth {
            // never pull a frame that already started transmitting
            let first_started = self
                .queue
                .first()
                .map(|f| f.done - f.ser < t)
                .unwrap_or(false);
            let evict = if first_started && self.queue.len() > 1 { 1 } else { 0 };
            let evicted = self.queue.remove(evict);
            self.queue_dropped += 1;
            self.busy_until -= evicted.ser;
            for frame in &mut self.queue[evict..] {
                frame.done -= evicted.ser;
            }
        }

        let start = self.busy_until.max(t);
        let ser = self.config.serialization_time_s(payload_bytes);
        let done = start + ser;
        self.busy_until = done;
        self.queue.push(QueuedFrame {
            done,
            ser,
            wire_bytes: payload_bytes + self.config.overhead_bytes,
        });
        Ok(Delivery::At(done + self.config.latency_s))
    }

    /// Maximum bytes carried entirely within any sliding window of
    /// `window_s`: a frame counts only if its last byte also falls inside,
    /// so the figure never exceeds what the baud rate can move in a window.
    pub fn max_window_bytes(&self, window_s: f64) -> u32 {
        let mut max = 0u32;
        for (i, &(t0, _)) in self.wire_log.iter().enumerate() {
            let sum: u32 = self.wire_log[i..]
                .iter()
                // wire_log bytes already include framing overhead
                .take_while(|&&(t, b)| {
                    t + b as f64 * 10.0 / self.config.baud as f64 <= t0 + window_s
                })
                .map(|&(_, b)| b)
                .sum();
            max = max.max(sum);
        }
        max
    }
}
