//! The wireless serial link: serialization time at 19200 baud, queueing
//! under overload, and in-flight parameter updates applied mid-run.
//!
//! Run with: cargo run --example telemetry_link

use std::path::PathBuf;

use mavsim::harness::link::{Delivery, LinkConfig, TelemetryLink};
use mavsim::harness::{run_scenario, ScenarioConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let config = LinkConfig::default();
    println!("line timing at {} baud (10 bits per byte):", config.baud);
    for bytes in [16, 64, 192] {
        println!("  {bytes:4} byte frame -> {:.1} ms on the wire", 1e3 * config.serialization_time_s(bytes));
    }

    // overload: offer 100 Hz of 64-byte frames to a line that carries 30/s
    let mut link = TelemetryLink::new(config);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut delayed_max = 0.0f64;
    for i in 0..500 {
        let t = i as f64 * 0.01;
        if let Delivery::At(done) = link.transmit(64, t, &mut rng).unwrap() {
            delayed_max = delayed_max.max(done - t);
        }
    }
    link.flush();
    println!(
        "\n5 s at 100 frames/s of 64 bytes: {} delivered, {} pushed out of the queue, worst latency {:.2} s",
        link.delivered, link.queue_dropped, delayed_max
    );
    println!("max bytes carried in any 1 s window: {} (line limit {})", link.max_window_bytes(1.0), link.config.baud / 10);

    // parameter updates ride the same link during a flight
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/tuning_replay.toml");
    let scenario = ScenarioConfig::load(&path).unwrap();
    let (log, report) = run_scenario(&scenario).unwrap();
    println!("\nin-flight retuning run `{}`:", scenario.name);
    for (t, text) in &log.annotations {
        println!("  [{t:8.3}s] {text}");
    }
    println!("residual oscillation after the kd update: {:.3} m peak to peak", report.get("altitude_p2p_last10s_m").unwrap());
}
