//! Smallest number of units that gets within 1e-3 of the saturated
//! single-photon probability.
//!
//! Run with `cargo run --release --example optimal_system_size`.

use asymux::{find_optimal_n, DetectionStrategy, Mode, MultiplexerSpec, OptimizerSettings};

pub fn run_example() -> asymux::Result<Vec<(Mode, usize, f64)>> {
    let spec = MultiplexerSpec::new(0.95, 0.985, 0.9, 0.9, 1)?;
    let settings = OptimizerSettings::quick();
    let mut found = Vec::new();
    for mode in [Mode::PerUnit, Mode::Uniform] {
        let search = find_optimal_n(&spec, &DetectionStrategy::spd(), &settings, 40, 1e-3, mode)?;
        let curve = search.curve();
        println!(
            "{mode}: N_opt = {}, P1 = {:.4} (saturates at {:.4})",
            search.n_opt, search.p1_max, search.p1_reference
        );
        let samples: Vec<String> = [1, 2, 4, 8, 12, 16, 24, 40]
            .iter()
            .map(|&n| format!("N={n}: {:.4}", curve[n - 1]))
            .collect();
        println!("  {}", samples.join("  "));
        found.push((mode, search.n_opt, search.p1_max));
    }
    Ok(found)
}

#[allow(dead_code)]
fn main() {
    run_example().expect("example failed");
}
