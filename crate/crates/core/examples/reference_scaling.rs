//! Compensating arm loss by pumping each unit at `λ / V_n` is a natural
//! guess, but it is not the optimum when router losses are large.
//!
//! Run with `cargo run --release --example reference_scaling`.

use asymux::{optimize_pump, optimize_scaled_reference, DetectionStrategy, MultiplexerSpec, OptimizerSettings};

pub fn run_example() -> asymux::Result<Vec<(f64, f64)>> {
    let settings = OptimizerSettings::quick();
    let strategy = DetectionStrategy::spd();
    let mut gaps = Vec::new();
    for v_r in [0.85, 0.95] {
        let spec = MultiplexerSpec::new(v_r, 0.985, 0.85, 0.9, 10)?;
        let optimal = optimize_pump(&spec, &strategy, &settings, None)?;
        let scaled = optimize_scaled_reference(&spec, &strategy, &settings)?;
        println!(
            "V_r = {v_r}: per-unit P1 = {:.5}, scaled P1 = {:.5}, gap = {:.1e}",
            optimal.best_p1,
            scaled.best_p1,
            optimal.best_p1 - scaled.best_p1
        );
        println!("  n   optimal  scaled");
        for (n, (a, b)) in optimal
            .best_pump
            .as_slice()
            .iter()
            .zip(scaled.best_pump.as_slice())
            .enumerate()
        {
            println!("  {:<3} {a:.4}   {b:.4}", n + 1);
        }
        gaps.push((v_r, optimal.best_p1 - scaled.best_p1));
    }
    Ok(gaps)
}

#[allow(dead_code)]
fn main() {
    run_example().expect("example failed");
}
