//! Advantage of accepting two-photon heralds over single-photon
//! detection on a small (V_r, V_D) grid, written as CSV to stdout.
//!
//! Run with `cargo run --release --example delta_surface`.

use asymux::experiments::{delta_surface, output, Axis, Param, ResultRow, SizeChoice, SweepGrid};
use asymux::{DetectionStrategy, Mode, MultiplexerSpec, OptimizerSettings};

pub fn run_example() -> asymux::Result<(SweepGrid, Vec<ResultRow>)> {
    let base = MultiplexerSpec::new(0.8, 0.985, 0.8, 0.8, 1)?;
    let mut grid = SweepGrid::new(
        base,
        vec![
            Axis::new(Param::Reflection, 0.8, 0.9, 0.1),
            Axis::new(Param::Detector, 0.8, 0.9, 0.1),
        ],
    );
    grid.size = SizeChoice::Search {
        n_ref: 30,
        threshold: 1e-3,
    };
    let rows = delta_surface(
        &grid,
        &DetectionStrategy::up_to(2)?,
        Mode::PerUnit,
        &DetectionStrategy::spd(),
        Mode::PerUnit,
        &OptimizerSettings::quick(),
    )?;
    for r in &rows {
        eprintln!("V_r = {:.2}, V_D = {:.2}: Δ = {:+.4}", r.v_r, r.v_d, r.delta.unwrap());
    }
    Ok((grid, rows))
}

#[allow(dead_code)]
fn main() {
    let (grid, rows) = run_example().expect("example failed");
    output::write_csv(std::io::stdout().lock(), &grid, &rows).expect("write failed");
}
