//! Output photon-number distribution of a multiplexer for a given pump.
//!
//! Run with `cargo run --release --example output_distribution`.

use asymux::{
    output_distribution, DetectionStrategy, MultiplexerSpec, OutputDistribution, PumpProfile, SourceFamily,
    TruncationPolicy,
};

pub fn run_example() -> asymux::Result<Vec<OutputDistribution>> {
    let trunc = TruncationPolicy::default();
    // eight units of a high-quality router chain, pumped a little harder
    // towards the end of the chain where transmission is lower
    let spec = MultiplexerSpec::new(0.99, 0.985, 0.98, 0.9, 8)?;
    let pump = PumpProfile::new(vec![0.35, 0.37, 0.4, 0.43, 0.47, 0.52, 0.6, 0.7])?;

    let mut out = Vec::new();
    for (label, spec, strategy) in [
        ("Poisson, SPD", spec, DetectionStrategy::spd()),
        ("Poisson, threshold", spec, DetectionStrategy::threshold()),
        (
            "thermal, SPD",
            spec.with_source(SourceFamily::Thermal),
            DetectionStrategy::spd(),
        ),
    ] {
        let dist = output_distribution(&spec, &pump, &strategy, 6, &trunc)?;
        println!("{label}:");
        for (i, p) in dist.probs.iter().enumerate() {
            println!("  P_{i} = {p:.6}");
        }
        println!("  P(>6) = {:.2e}, total = {:.12}", dist.truncation_mass, dist.total());
        out.push(dist);
    }
    Ok(out)
}

#[allow(dead_code)]
fn main() {
    run_example().expect("example failed");
}
