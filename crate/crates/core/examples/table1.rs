//! Recomputes rows of the reference table of optimal probabilities.
//!
//! Pass `--all` to recompute all 63 rows (a few minutes in release mode).
//!
//! Run with `cargo run --release --example table1`.

use asymux::experiments::{reproduce_table1_entries, table1, ResultRow};
use asymux::OptimizerSettings;

pub fn run_example(all: bool) -> asymux::Result<Vec<ResultRow>> {
    let entries = if all {
        table1::TABLE1.to_vec()
    } else {
        table1::golden_entries()[..2].to_vec()
    };
    let rows = reproduce_table1_entries(&entries, &OptimizerSettings::quick(), 100)?;
    println!(" V_r  V_D  V_b   P1 ref / got     N ref / got   λ ref / got");
    for (e, pair) in entries.iter().zip(rows.chunks(2)) {
        println!(
            "{:.2} {:.2} {:.2}   {:.3} / {:.4}   {:>2} / {:>2}       {:.3} / {:.4}",
            e.v_r,
            e.v_d,
            e.v_b,
            e.p1_per_unit,
            pair[0].p1_max,
            e.n_opt_per_unit,
            pair[0].n_units,
            e.lambda_uniform,
            pair[1].scalar_lambda.unwrap()
        );
    }
    Ok(rows)
}

#[allow(dead_code)]
fn main() {
    let all = std::env::args().any(|a| a == "--all");
    run_example(all).expect("example failed");
}
