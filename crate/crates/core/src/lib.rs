//! Exact photon-number statistics and input optimisation for heralded
//! single-photon sources built from a chain of asymmetric photon routers
//! with photon-number-resolving heralding detectors.
//!
//! The crate is organised bottom-up:
//!
//! - [`topology`]: arm transmissions of the router chain.
//! - [`stats`]: source, detector and loss probabilities and the output
//!   photon-number distribution.
//! - [`objective`]: a tabulated single-photon objective for optimizers.
//! - [`optimizer`]: per-unit, uniform and transmission-scaled pump
//!   optimisation, system-size search, strategy scan, stability intervals.
//! - [`mc`]: direct Monte Carlo simulation of the heralding and routing
//!   process, used to cross-check the analytic distribution.
//! - [`experiments`]: parameter sweeps and result tables with CSV/JSON output.
//! - [`cli`]: the command-line front end behind the `asymux` binary.
//!
//! ```
//! use asymux::{output_distribution, DetectionStrategy, MultiplexerSpec, PumpProfile, TruncationPolicy};
//!
//! let spec = MultiplexerSpec::new(0.99, 0.985, 0.98, 1.0, 1)?;
//! let pump = PumpProfile::uniform(1, 0.5)?;
//! let dist = output_distribution(&spec, &pump, &DetectionStrategy::spd(), 10, &TruncationPolicy::default())?;
//! assert!((dist.probs[1] - 0.5 * (-0.5f64).exp() * 0.98).abs() < 1e-12);
//! # Ok::<(), asymux::Error>(())
//! ```

// `!(x >= lo && x <= hi)` is used on purpose so that NaN is rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod experiments;
mod math;
pub mod mc;
pub mod objective;
pub mod optimizer;
pub mod seeds;
pub mod stats;
pub mod topology;

pub use error::{Error, Result};
pub use objective::SinglePhotonObjective;
pub use optimizer::{
    find_optimal_n, optimize, optimize_pump, optimize_scaled_reference, optimize_uniform, stability_interval,
    strategy_scan, Mode, OptimizationReport, OptimizerSettings, SizeSearch, StabilityInterval,
};
pub use stats::{
    detect_cond_prob, detect_total_prob, output_distribution, pair_gen_prob, single_photon_prob,
    single_photon_prob_with, transmit_cond_prob, DetectionStrategy, OutputDistribution, PumpProfile, StrategyKind,
    TruncationPolicy,
};
pub use topology::{MultiplexerSpec, SourceFamily, DEFAULT_V_T};
