//! Which heralding counts should open the gate?
//!
//! With lossy routers and detectors, also accepting two-photon heralds
//! can beat single-photon detection. The scan widens `S = {1..J}` until
//! the optimum stops improving and compares with threshold detection.
//!
//! Run with `cargo run --release --example detection_strategies`.

use asymux::{strategy_scan, DetectionStrategy, Mode, MultiplexerSpec, OptimizerSettings};

pub fn run_example() -> asymux::Result<Vec<(DetectionStrategy, usize, f64)>> {
    let spec = MultiplexerSpec::new(0.8, 0.985, 0.8, 0.85, 1)?;
    let outcomes = strategy_scan(&spec, &OptimizerSettings::quick(), Mode::PerUnit, 40, 1e-3)?;
    println!("V_r = 0.8, V_b = 0.8, V_D = 0.85, per-unit pumps");
    for o in &outcomes {
        println!(
            "  {:<10} N_opt = {:>2}  P1 = {:.4}",
            o.strategy.label(),
            o.n_opt,
            o.p1_max
        );
    }
    Ok(outcomes.into_iter().map(|o| (o.strategy, o.n_opt, o.p1_max)).collect())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("example failed");
}
