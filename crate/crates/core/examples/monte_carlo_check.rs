//! Simulates heralding and routing photon by photon and compares the
//! counts with the analytic distribution.
//!
//! Run with `cargo run --release --example monte_carlo_check`.

use asymux::mc::{compare, simulate, McSettings};
use asymux::{output_distribution, DetectionStrategy, MultiplexerSpec, PumpProfile, TruncationPolicy};

pub fn run_example() -> asymux::Result<f64> {
    let spec = MultiplexerSpec::new(0.9, 0.985, 0.9, 0.85, 5)?;
    let pump = PumpProfile::new(vec![0.8, 0.9, 1.0, 1.1, 1.2])?;
    let strategy = DetectionStrategy::up_to(2)?;
    let mc = McSettings {
        trials: 1_000_000,
        seed: 42,
        ..McSettings::default()
    };

    let estimate = simulate(&spec, &pump, &strategy, &mc)?;
    let dist = output_distribution(&spec, &pump, &strategy, mc.max_count, &TruncationPolicy::default())?;
    println!(" i   analytic   simulated   std err");
    for i in 0..5 {
        println!(
            " {i}   {:.6}   {:.6}    {:.1e}",
            dist.probs[i], estimate.estimates[i], estimate.std_errors[i]
        );
    }
    let worst = compare(&dist, &estimate, 0.0).iter().map(|d| d.z).fold(0.0, f64::max);
    println!("largest deviation: {worst:.2} sigma");
    Ok(worst)
}

#[allow(dead_code)]
fn main() {
    run_example().expect("example failed");
}
