//! A sweep that writes each finished batch to disk and, when restarted,
//! skips the cells already present in the file.
//!
//! Run with `cargo run --release --example resumable_sweep`.

use std::collections::HashSet;
use std::path::Path;

use asymux::experiments::output::CsvSink;
use asymux::experiments::{sweep_with, Axis, Param, SizeChoice, SweepGrid};
use asymux::{Mode, MultiplexerSpec, OptimizerSettings};

pub fn run_example(path: &Path) -> asymux::Result<usize> {
    let mut grid = SweepGrid::new(
        MultiplexerSpec::new(0.9, 0.985, 0.9, 0.9, 1)?,
        vec![Axis::new(Param::General, 0.8, 0.98, 0.06)],
    );
    grid.modes = vec![Mode::PerUnit, Mode::Uniform];
    grid.size = SizeChoice::Fixed(8);
    let settings = OptimizerSettings::quick();

    // first pass stops after the first batch, as if interrupted
    {
        let (mut sink, _) = CsvSink::open(path, &grid)?;
        let mut first = true;
        let _ = sweep_with(&grid, &settings, &HashSet::new(), |rows| {
            if !first {
                return Err(asymux::Error::Io("interrupted".into()));
            }
            first = false;
            sink.append(&rows)
        });
    }
    let (mut sink, done) = CsvSink::open(path, &grid)?;
    println!("resuming with {} of {} jobs done", done.len(), grid.jobs().len());
    sweep_with(&grid, &settings, &done, |rows| sink.append(&rows))?;
    let lines = std::fs::read_to_string(path)?.lines().count();
    println!("{} has {lines} lines", path.display());
    Ok(lines)
}

#[allow(dead_code)]
fn main() {
    let path = std::env::temp_dir().join("asymux_resumable_sweep.csv");
    let _ = std::fs::remove_file(&path);
    run_example(&path).expect("example failed");
}
