//! The microsecond-level PPM duty: decoding four input channels, encoding
//! four output channels, the interrupt collision worst case, and what a
//! lost falling-edge timer does to a motor.
//!
//! Run with: cargo run --example ppm_timing

use mavsim::scheduler::{
    channel_command_trace, enumerate_jitter_bound, inject_timing_fault, ppm_encode,
    simulate_contention, synthesize_input_edges, worst_case_collision, IsrCostModel, PpmDecoder,
    TimingFault, TimingFaultKind,
};

fn main() {
    // decode a second of transmitter traffic
    let commands = [0.10, 0.45, 0.80, 0.50];
    let edges = synthesize_input_edges(commands, 50.0, 1.0);
    let mut decoder = PpmDecoder::default();
    let decoded = decoder.feed(&edges).unwrap();
    println!("input: {} edges/s over 4 channels at 50 Hz", edges.len());
    println!("  sent {commands:?}");
    println!("  decoded {decoded:?}");

    // encode the motor side at the regulation rate
    let out = ppm_encode(&[(0, [0.3; 4])], 500.0, 1.0).unwrap();
    println!("output: {} signal changes/s at 500 Hz regulation", out.len());

    // worst case interrupt pileup: one input edge plus four output timers
    let model = IsrCostModel::default();
    let collision = worst_case_collision(0);
    let report = simulate_contention(&collision, &model, 40).unwrap();
    println!(
        "\ncollision of {} simultaneous events: max jitter {} us (enumerated bound {} us), {} deadline misses",
        collision.len(),
        report.max_jitter_us,
        enumerate_jitter_bound(&collision, &model),
        report.deadline_miss_count
    );

    // a lost falling-edge timer leaves the pulse high: full throttle
    let fault = TimingFault {
        kind: TimingFaultKind::LostTimer,
        channel: 0,
        at_time_s: 0.5,
        delay_us: 0,
    };
    for (watchdog, label) in [(None, "no watchdog"), (Some(200_000), "watchdog 200 ms")] {
        let faulted = inject_timing_fault(&out, &fault, watchdog);
        let trace = channel_command_trace(&faulted, 0);
        let at = |t_us: u64| {
            trace
                .iter()
                .rev()
                .find(|(t, _)| *t <= t_us)
                .map(|(_, c)| *c)
                .unwrap_or(f64::NAN)
        };
        println!(
            "lost timer at 0.5 s, {label}: cmd(0.4s) = {:.2}, cmd(0.6s) = {:.2}, cmd(0.9s) = {:.2}",
            at(400_000),
            at(600_000),
            at(900_000)
        );
    }
}
