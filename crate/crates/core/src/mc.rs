//! Direct simulation of the heralding and routing process.
//!
//! Each trial walks the units in priority order: draw the pair number,
//! thin the idler photons through the detector, and stop at the first unit
//! whose count is accepted. That unit's signal photons are then thinned by
//! its arm transmission. Units behind the winner cannot influence the
//! output and are not sampled.
//!
//! Trials are split into a fixed number of streams, each with its own
//! seeded generator, so the estimates do not depend on the thread count.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::seeds;
use crate::stats::{DetectionStrategy, OutputDistribution, PumpProfile};
use crate::topology::{MultiplexerSpec, SourceFamily, DEFAULT_V_T};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSettings {
    pub trials: u64,
    pub seed: u64,
    /// Highest photon count tracked individually; the last bucket collects
    /// every count `>= max_count`.
    pub max_count: usize,
    pub streams: usize,
}

impl Default for McSettings {
    fn default() -> Self {
        McSettings {
            trials: 10_000_000,
            seed: 0x0DDB_1A5E,
            max_count: 10,
            streams: 64,
        }
    }
}

impl McSettings {
    pub fn validate(&self) -> Result<()> {
        if self.trials < 1_000 {
            return Err(invalid(format!("trials = {} must be at least 1000", self.trials)));
        }
        if self.max_count == 0 || self.streams == 0 {
            return Err(invalid("max_count and streams must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    /// Relative frequencies of `0..max_count` photons, then `>= max_count`.
    pub estimates: Vec<f64>,
    /// Binomial standard errors of the estimates.
    pub std_errors: Vec<f64>,
    pub trials: u64,
}

/// Simulates `mc.trials` periods of the source.
pub fn simulate(
    spec: &MultiplexerSpec,
    pump: &PumpProfile,
    strategy: &DetectionStrategy,
    mc: &McSettings,
) -> Result<McEstimate> {
    spec.validate()?;
    mc.validate()?;
    if pump.len() != spec.n_units {
        return Err(invalid("pump profile length does not match the multiplexer"));
    }
    let arms = spec.transmission_vector();
    let lambdas = pump.as_slice();
    let buckets = mc.max_count + 1;
    let streams = mc.streams as u64;

    let counts: Vec<u64> = (0..streams)
        .into_par_iter()
        .map(|stream| {
            let share = mc.trials / streams + u64::from(stream < mc.trials % streams);
            let mut rng = seeds::rng(mc.seed, &[stream]);
            let mut local = vec![0u64; buckets];
            for _ in 0..share {
                let out = one_period(spec, lambdas, &arms, strategy, &mut rng);
                local[(out as usize).min(mc.max_count)] += 1;
            }
            local
        })
        .reduce(
            || vec![0u64; buckets],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );

    let n = mc.trials as f64;
    let estimates: Vec<f64> = counts.iter().map(|&c| c as f64 / n).collect();
    let std_errors = estimates.iter().map(|&p| (p * (1.0 - p) / n).sqrt()).collect();
    Ok(McEstimate {
        estimates,
        std_errors,
        trials: mc.trials,
    })
}

fn one_period(
    spec: &MultiplexerSpec,
    lambdas: &[f64],
    arms: &[f64],
    strategy: &DetectionStrategy,
    rng: &mut ChaCha8Rng,
) -> u64 {
    for (&lambda, &v_n) in lambdas.iter().zip(arms) {
        let pairs = sample_pairs(spec.source, lambda, rng);
        if pairs == 0 {
            continue;
        }
        let detected = sample_binomial(pairs, spec.v_d, rng);
        if strategy.accepts(detected) {
            return sample_binomial(pairs, v_n, rng);
        }
    }
    0
}

/// Inversion sampling of the pair number.
fn sample_pairs(family: SourceFamily, lambda: f64, rng: &mut ChaCha8Rng) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    let u: f64 = rng.gen();
    match family {
        SourceFamily::Poisson => {
            let mut k = 0u64;
            let mut p = (-lambda).exp();
            let mut cdf = p;
            while u > cdf && k < 10_000 {
                k += 1;
                p *= lambda / k as f64;
                cdf += p;
                if p == 0.0 {
                    break;
                }
            }
            k
        }
        SourceFamily::Thermal => {
            // P(X >= k) = r^k
            let r = lambda / (1.0 + lambda);
            let v = 1.0 - u;
            (v.ln() / r.ln()).floor() as u64
        }
    }
}

fn sample_binomial(n: u64, p: f64, rng: &mut ChaCha8Rng) -> u64 {
    (0..n).filter(|_| rng.gen::<f64>() < p).count() as u64
}

/// One bucket that disagrees with the analytic value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deviation {
    pub count: usize,
    pub analytic: f64,
    pub estimate: f64,
    /// `|estimate - analytic| / sigma`, with `sigma` the binomial standard
    /// error at the analytic probability.
    pub z: f64,
}

/// Analytic bucket probabilities aligned with [`McEstimate::estimates`].
pub fn analytic_buckets(dist: &OutputDistribution, max_count: usize) -> Vec<f64> {
    let mut buckets: Vec<f64> = (0..max_count).map(|i| dist.p(i)).collect();
    let head: f64 = buckets.iter().sum();
    buckets.push((1.0 - head).max(0.0));
    buckets
}

/// Every bucket whose estimate is more than `k_sigma` standard errors from
/// the analytic value.
pub fn compare(dist: &OutputDistribution, estimate: &McEstimate, k_sigma: f64) -> Vec<Deviation> {
    let max_count = estimate.estimates.len() - 1;
    let n = estimate.trials as f64;
    analytic_buckets(dist, max_count)
        .into_iter()
        .zip(&estimate.estimates)
        .enumerate()
        .filter_map(|(count, (analytic, &est))| {
            let sigma = (analytic * (1.0 - analytic) / n).sqrt();
            let diff = (est - analytic).abs();
            let z = if sigma > 0.0 {
                diff / sigma
            } else if diff == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
            (z > k_sigma).then_some(Deviation {
                count,
                analytic,
                estimate: est,
                z,
            })
        })
        .collect()
}

/// One entry of the randomized regression corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McCase {
    pub spec: MultiplexerSpec,
    pub pump: PumpProfile,
    pub strategy: DetectionStrategy,
    /// Seed for the simulation of this case.
    pub seed: u64,
}

/// Master seed of the stored regression corpus.
pub const CORPUS_SEED: u64 = 20_201_007;

/// Random configurations with `N <= 10`, efficiencies drawn from
/// `V_r ∈ [0.8, 0.99]`, `V_D, V_b ∈ [0.8, 0.98]`, `λ_n ∈ [0, 1.5]` and
/// a strategy among SPD, `{1,2}`, `{1,3}` and threshold detection.
pub fn regression_corpus(master_seed: u64, count: usize) -> Vec<McCase> {
    let strategies = [
        DetectionStrategy::spd(),
        DetectionStrategy::up_to(2).expect("valid"),
        DetectionStrategy::explicit([1, 3]).expect("valid"),
        DetectionStrategy::threshold(),
    ];
    (0..count)
        .map(|k| {
            let mut rng = seeds::rng(master_seed, &[k as u64]);
            let n_units = rng.gen_range(1..=10);
            let spec = MultiplexerSpec {
                v_r: rng.gen_range(0.8..=0.99),
                v_t: DEFAULT_V_T,
                v_b: rng.gen_range(0.8..=0.98),
                v_d: rng.gen_range(0.8..=0.98),
                n_units,
                source: SourceFamily::Poisson,
            };
            let pump = PumpProfile::new((0..n_units).map(|_| rng.gen_range(0.0..=1.5)).collect()).expect("nonnegative");
            let strategy = strategies[rng.gen_range(0..strategies.len())].clone();
            McCase {
                spec,
                pump,
                strategy,
                seed: rng.gen(),
            }
        })
        .collect()
}
