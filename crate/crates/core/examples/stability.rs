//! How far can all pumps drift together before the per-unit optimum
//! loses its edge over the best shared pump?
//!
//! Run with `cargo run --release --example stability`.

use asymux::experiments::{stability_report, ResultRow, SizeChoice};
use asymux::{DetectionStrategy, MultiplexerSpec, OptimizerSettings};

pub fn run_example() -> asymux::Result<ResultRow> {
    let spec = MultiplexerSpec::new(0.9, 0.985, 0.98, 0.8, 1)?;
    let size = SizeChoice::Search {
        n_ref: 40,
        threshold: 1e-3,
    };
    let row = stability_report(&spec, &DetectionStrategy::spd(), size, &OptimizerSettings::quick())?;
    println!(
        "N = {}: per-unit P1 = {:.4}, shared-pump P1 = {:.4}",
        row.n_units,
        row.p1_max,
        row.baseline_p1.unwrap()
    );
    println!(
        "common shift δ keeps the advantage for δ in [{:.4}, {:.4}]",
        row.delta_minus.unwrap(),
        row.delta_plus.unwrap()
    );
    Ok(row)
}

#[allow(dead_code)]
fn main() {
    run_example().expect("example failed");
}
