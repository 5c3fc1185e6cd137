//! Maximisation of the single-photon probability over pump profiles,
//! system size and detection strategy.
//!
//! Three search spaces are supported, see [`Mode`]. The per-unit search
//! runs a seeded genetic algorithm (with restarts) followed by an optional
//! coordinate-wise golden-section polish; the two scalar families use a
//! dense scan plus golden-section refinement.

pub mod ga;
pub mod scalar;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::objective::SinglePhotonObjective;
use crate::seeds;
use crate::stats::{single_photon_prob_with, DetectionStrategy, PumpProfile, TruncationPolicy};
use crate::topology::MultiplexerSpec;

pub use scalar::{golden_section_max, grid_golden_max, ScalarMax};

/// Saturation reference size used when searching for the optimal number of units.
pub const DEFAULT_N_REF: usize = 100;
/// Allowed shortfall from the saturated value at the optimal size.
pub const DEFAULT_SIZE_THRESHOLD: f64 = 1e-3;

const SCALAR_GRID: usize = 250;
const SCALAR_XTOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSettings {
    pub population: usize,
    pub max_generations: usize,
    pub stall_generations: usize,
    pub function_tolerance: f64,
    pub lambda_lower: f64,
    pub lambda_upper: f64,
    pub seed: u64,
    pub restarts: usize,
    pub local_refine: bool,
    #[serde(default)]
    pub truncation: TruncationPolicy,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        OptimizerSettings {
            population: 200,
            max_generations: 500,
            stall_generations: 60,
            function_tolerance: 1e-9,
            lambda_lower: 0.0,
            lambda_upper: 5.0,
            seed: 0x5EED,
            restarts: 3,
            local_refine: true,
            truncation: TruncationPolicy::default(),
        }
    }
}

impl OptimizerSettings {
    /// Smaller GA budget for sweeps and interactive use.
    pub fn quick() -> Self {
        OptimizerSettings {
            population: 40,
            max_generations: 150,
            stall_generations: 20,
            restarts: 1,
            ..Default::default()
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        OptimizerSettings { seed, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.population < 10 {
            return Err(invalid(format!("population = {} must be at least 10", self.population)));
        }
        if !(self.lambda_lower >= 0.0 && self.lambda_lower < self.lambda_upper) {
            return Err(invalid(format!(
                "need 0 <= lambda_lower < lambda_upper, got [{}, {}]",
                self.lambda_lower, self.lambda_upper
            )));
        }
        if self.restarts == 0 {
            return Err(invalid("restarts must be at least 1"));
        }
        if !(self.function_tolerance > 0.0) {
            return Err(invalid("function_tolerance must be positive"));
        }
        self.truncation.validate()
    }

    fn ga_config(&self) -> ga::GaConfig {
        ga::GaConfig {
            stall_generations: self.stall_generations,
            function_tolerance: self.function_tolerance,
            ..ga::GaConfig::new(
                self.population,
                self.max_generations,
                self.lambda_lower,
                self.lambda_upper,
            )
        }
    }
}

/// Search space over pump profiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    /// Independent `λ_n` per unit.
    #[serde(rename = "per-unit")]
    PerUnit,
    /// One shared `λ`.
    #[serde(rename = "uniform")]
    Uniform,
    /// `λ_n = λ / V_n` for a scalar `λ`.
    #[serde(rename = "scaled-ref")]
    ScaledReference,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::PerUnit, Mode::Uniform, Mode::ScaledReference];

    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::PerUnit => "per-unit",
            Mode::Uniform => "uniform",
            Mode::ScaledReference => "scaled-ref",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "per-unit" | "perunit" | "lambda-n" => Ok(Mode::PerUnit),
            "uniform" | "identical" => Ok(Mode::Uniform),
            "scaled-ref" | "scaled-reference" | "scaledreference" | "reference" => Ok(Mode::ScaledReference),
            other => Err(invalid(format!("unknown mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationReport {
    pub mode: Mode,
    pub strategy: DetectionStrategy,
    pub n_units: usize,
    pub best_pump: PumpProfile,
    /// `P_1` of `best_pump`, re-evaluated through the full distribution.
    pub best_p1: f64,
    /// Optimal scalar parameter for the uniform and scaled-reference modes.
    pub scalar_lambda: Option<f64>,
    pub evaluations: u64,
    pub converged: bool,
    /// Some `λ / V_n` hit `lambda_upper` and was clamped.
    pub bound_clamped: bool,
    pub seed_used: u64,
}

/// Dispatches to the optimizer for `mode`.
pub fn optimize(
    spec: &MultiplexerSpec,
    strategy: &DetectionStrategy,
    settings: &OptimizerSettings,
    mode: Mode,
    warm_start: Option<&PumpProfile>,
) -> Result<OptimizationReport> {
    match mode {
        Mode::PerUnit => optimize_pump(spec, strategy, settings, warm_start),
        Mode::Uniform => optimize_uniform(spec, strategy, settings),
        Mode::ScaledReference => optimize_scaled_reference(spec, strategy, settings),
    }
}

/// Per-unit optimisation of `λ_1..λ_N`.
pub fn optimize_pump(
    spec: &MultiplexerSpec,
    strategy: &DetectionStrategy,
    settings: &OptimizerSettings,
    warm_start: Option<&PumpProfile>,
) -> Result<OptimizationReport> {
    settings.validate()?;
    let objective = SinglePhotonObjective::new(spec, strategy, &settings.truncation)?;
    let dim = spec.n_units;
    if let Some(w) = warm_start {
        if w.len() != dim {
            return Err(invalid(format!("warm start has {} entries, expected {dim}", w.len())));
        }
    }
    let injected: Vec<Vec<f64>> = warm_start.map(|w| w.as_slice().to_vec()).into_iter().collect();
    let config = settings.ga_config();

    let mut best: Option<ga::GaOutcome> = None;
    let mut evaluations = 0;
    for restart in 0..settings.restarts {
        let outcome = ga::run(
            &config,
            dim,
            |x| objective.evaluate(x),
            &injected,
            seeds::derive(settings.seed, &[restart as u64]),
        );
        evaluations += outcome.evaluations;
        if best.as_ref().is_none_or(|b| outcome.best_fitness > b.best_fitness) {
            best = Some(outcome);
        }
    }
    let best = best.expect("at least one restart");
    let mut lambdas = best.best;
    let mut converged = best.converged;
    if settings.local_refine {
        let polish = scalar::refine_profile(
            &objective,
            &mut lambdas,
            settings.lambda_lower,
            settings.lambda_upper,
            settings.function_tolerance * 1e-3,
            20,
        );
        evaluations += polish.evaluations;
        converged = polish.converged;
    }

    let mut pump = PumpProfile::new(lambdas)?;
    let mut p1 = single_photon_prob_with(spec, &pump, strategy, &settings.truncation)?;
    if let Some(w) = warm_start {
        let warm_p1 = single_photon_prob_with(spec, w, strategy, &settings.truncation)?;
        if warm_p1 > p1 {
            pump = w.clone();
            p1 = warm_p1;
        }
    }
    Ok(OptimizationReport {
        mode: Mode::PerUnit,
        strategy: strategy.clone(),
        n_units: dim,
        best_pump: pump,
        best_p1: p1,
        scalar_lambda: None,
        evaluations,
        converged,
        bound_clamped: false,
        seed_used: settings.seed,
    })
}

/// Best shared `λ` for all units.
pub fn optimize_uniform(
    spec: &MultiplexerSpec,
    strategy: &DetectionStrategy,
    settings: &OptimizerSettings,
) -> Result<OptimizationReport> {
    settings.validate()?;
    let objective = SinglePhotonObjective::new(spec, strategy, &settings.truncation)?;
    let found = grid_golden_max(
        |l| objective.evaluate_uniform(l),
        settings.lambda_lower,
        settings.lambda_upper,
        SCALAR_GRID,
        SCALAR_XTOL,
    );
    let pump = PumpProfile::uniform(spec.n_units, found.x)?;
    let p1 = single_photon_prob_with(spec, &pump, strategy, &settings.truncation)?;
    Ok(OptimizationReport {
        mode: Mode::Uniform,
        strategy: strategy.clone(),
        n_units: spec.n_units,
        best_pump: pump,
        best_p1: p1,
        scalar_lambda: Some(found.x),
        evaluations: found.evaluations,
        converged: true,
        bound_clamped: false,
        seed_used: settings.seed,
    })
}

/// Profile `λ_n = λ / V_n`, each entry clamped to the search box.
pub fn scaled_reference_profile(arms: &[f64], lambda: f64, lower: f64, upper: f64) -> (Vec<f64>, bool) {
    let mut clamped = false;
    let profile = arms
        .iter()
        .map(|&v| {
            let raw = if v > 0.0 { lambda / v } else { f64::INFINITY };
            if raw > upper {
                clamped = true;
            }
            raw.clamp(lower, upper)
        })
        .collect();
    (profile, clamped)
}

/// Best scalar `λ` for the transmission-compensating profile `λ / V_n`.
pub fn optimize_scaled_reference(
    spec: &MultiplexerSpec,
    strategy: &DetectionStrategy,
    settings: &OptimizerSettings,
) -> Result<OptimizationReport> {
    settings.validate()?;
    let objective = SinglePhotonObjective::new(spec, strategy, &settings.truncation)?;
    let arms = objective.arms().to_vec();
    let (lo, hi) = (settings.lambda_lower, settings.lambda_upper);
    let v_max = arms.iter().copied().fold(0.0, f64::max);
    let scalar_hi = (hi * v_max).max(lo + f64::EPSILON);
    let found = grid_golden_max(
        |l| objective.evaluate(&scaled_reference_profile(&arms, l, lo, hi).0),
        lo,
        scalar_hi,
        SCALAR_GRID,
        SCALAR_XTOL,
    );
    let (profile, clamped) = scaled_reference_profile(&arms, found.x, lo, hi);
    let pump = PumpProfile::new(profile)?;
    let p1 = single_photon_prob_with(spec, &pump, strategy, &settings.truncation)?;
    Ok(OptimizationReport {
        mode: Mode::ScaledReference,
        strategy: strategy.clone(),
        n_units: spec.n_units,
        best_pump: pump,
        best_p1: p1,
        scalar_lambda: Some(found.x),
        evaluations: found.evaluations,
        converged: true,
        bound_clamped: clamped,
        seed_used: settings.seed,
    })
}

/// Outcome of the search for the optimal number of units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeSearch {
    pub n_opt: usize,
    pub p1_max: f64,
    /// Saturated reference value the threshold is measured against.
    pub p1_reference: f64,
    /// One report per `N = 1..=n_ref`.
    pub reports: Vec<OptimizationReport>,
}

impl SizeSearch {
    pub fn at(&self, n_units: usize) -> Option<&OptimizationReport> {
        self.reports.get(n_units.checked_sub(1)?)
    }

    pub fn best_report(&self) -> &OptimizationReport {
        &self.reports[self.n_opt - 1]
    }

    /// `P_{1,N}` for `N = 1..=n_ref`.
    pub fn curve(&self) -> Vec<f64> {
        self.reports.iter().map(|r| r.best_p1).collect()
    }
}

/// Optimises every size `N = 1..=n_ref` and returns the smallest `N` whose
/// optimum is within `threshold` of the saturated value.
///
/// `spec.n_units` is ignored. The saturated value is the largest optimum
/// found over all sizes, which coincides with `P_{1,n_ref}` whenever the
/// curve is nondecreasing. Per-unit searches at size `N` are warm-started
/// from the size `N - 1` optimum with its last entry copied.
pub fn find_optimal_n(
    spec: &MultiplexerSpec,
    strategy: &DetectionStrategy,
    settings: &OptimizerSettings,
    n_ref: usize,
    threshold: f64,
    mode: Mode,
) -> Result<SizeSearch> {
    if n_ref < 2 {
        return Err(invalid(format!("n_ref = {n_ref} must be at least 2")));
    }
    settings.validate()?;
    let mut reports: Vec<OptimizationReport> = Vec::with_capacity(n_ref);
    for n in 1..=n_ref {
        let sized = spec.with_units(n)?;
        let local = settings.with_seed(seeds::derive(settings.seed, &[n as u64]));
        let warm = reports.last().map(|r| r.best_pump.extended());
        let report = optimize(&sized, strategy, &local, mode, warm.as_ref())?;
        reports.push(report);
    }
    let reference = reports.iter().map(|r| r.best_p1).fold(f64::NEG_INFINITY, f64::max);
    let n_opt = reports
        .iter()
        .position(|r| reference - r.best_p1 < threshold)
        .expect("the maximum itself satisfies the threshold")
        + 1;
    Ok(SizeSearch {
        n_opt,
        p1_max: reports[n_opt - 1].best_p1,
        p1_reference: reference,
        reports,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyOutcome {
    pub strategy: DetectionStrategy,
    pub n_opt: usize,
    pub p1_max: f64,
    pub report: OptimizationReport,
}

/// Evaluates `S = {1..J}` for `J = 1, 2, ...` until the optimum drops
/// below that of `J - 1`, then threshold detection. Results are sorted
/// best first.
pub fn strategy_scan(
    spec: &MultiplexerSpec,
    settings: &OptimizerSettings,
    mode: Mode,
    n_ref: usize,
    threshold: f64,
) -> Result<Vec<StrategyOutcome>> {
    let run = |strategy: DetectionStrategy| -> Result<StrategyOutcome> {
        let search = find_optimal_n(spec, &strategy, settings, n_ref, threshold, mode)?;
        Ok(StrategyOutcome {
            strategy,
            n_opt: search.n_opt,
            p1_max: search.p1_max,
            report: search.best_report().clone(),
        })
    };
    let mut outcomes = Vec::new();
    let mut previous = f64::NEG_INFINITY;
    for j in 1..=crate::stats::DEFAULT_J_CAP {
        let outcome = run(DetectionStrategy::up_to(j)?)?;
        let p1 = outcome.p1_max;
        outcomes.push(outcome);
        if p1 < previous {
            break;
        }
        previous = p1;
    }
    outcomes.push(run(DetectionStrategy::threshold())?);
    outcomes.sort_by(|a, b| b.p1_max.total_cmp(&a.p1_max));
    Ok(outcomes)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityInterval {
    pub delta_minus: f64,
    pub delta_plus: f64,
    /// `P_1` of the unshifted profile.
    pub p1_at_optimum: f64,
    /// The unshifted profile does not reach the baseline.
    pub empty: bool,
}

const STABILITY_RESOLUTION: f64 = 1e-6;

/// Largest `[δ-, δ+]` such that shifting every `λ_n` by the same `δ`
/// (clamped at zero) keeps `P_1 >= baseline_p1`.
pub fn stability_interval(
    spec: &MultiplexerSpec,
    strategy: &DetectionStrategy,
    optimal_pump: &PumpProfile,
    baseline_p1: f64,
    trunc: &TruncationPolicy,
) -> Result<StabilityInterval> {
    if optimal_pump.len() != spec.n_units {
        return Err(invalid("pump profile length does not match the multiplexer"));
    }
    let objective = SinglePhotonObjective::new(spec, strategy, trunc)?;
    let base = optimal_pump.as_slice();
    let shifted = |delta: f64| -> f64 {
        let lambdas: Vec<f64> = base.iter().map(|l| (l + delta).max(0.0)).collect();
        objective.evaluate(&lambdas)
    };
    let p1_at_optimum = single_photon_prob_with(spec, optimal_pump, strategy, trunc)?;
    if shifted(0.0) < baseline_p1 {
        return Ok(StabilityInterval {
            delta_minus: 0.0,
            delta_plus: 0.0,
            p1_at_optimum,
            empty: true,
        });
    }
    let ok = |delta: f64| shifted(delta) >= baseline_p1;
    let max_lambda = base.iter().copied().fold(0.0, f64::max);
    let delta_plus = edge(&ok, 1.0, 50.0);
    let delta_minus = -edge(&|d: f64| ok(-d), 1.0, max_lambda.max(STABILITY_RESOLUTION));
    Ok(StabilityInterval {
        delta_minus,
        delta_plus,
        p1_at_optimum,
        empty: false,
    })
}

/// Largest `d` in `[0, limit]` with `ok(d)`, assuming `ok` holds on an
/// interval starting at zero.
fn edge(ok: &dyn Fn(f64) -> bool, direction: f64, limit: f64) -> f64 {
    let mut good = 0.0;
    let mut step = 1e-2;
    let mut bad = None;
    while good < limit {
        let trial = (good + step).min(limit);
        if ok(direction * trial) {
            good = trial;
            step *= 2.0;
        } else {
            bad = Some(trial);
            break;
        }
    }
    let Some(mut bad) = bad else { return limit };
    while bad - good > STABILITY_RESOLUTION {
        let mid = 0.5 * (good + bad);
        if ok(direction * mid) {
            good = mid;
        } else {
            bad = mid;
        }
    }
    good
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lossless_single() -> MultiplexerSpec {
        MultiplexerSpec::new(1.0, 1.0, 1.0, 1.0, 1).unwrap()
    }

    #[test]
    fn settings_validation() {
        assert!(OptimizerSettings::default().validate().is_ok());
        let bad = OptimizerSettings {
            population: 5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = OptimizerSettings {
            lambda_lower: 2.0,
            lambda_upper: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = OptimizerSettings {
            restarts: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn mode_parsing() {
        for mode in Mode::ALL {
            assert_eq!(mode.as_str().parse::<Mode>().unwrap(), mode);
        }
        assert!("bogus".parse::<Mode>().is_err());
    }

    #[test]
    fn uniform_lossless_single_unit_peaks_at_one() {
        let r = optimize_uniform(
            &lossless_single(),
            &DetectionStrategy::spd(),
            &OptimizerSettings::quick(),
        )
        .unwrap();
        assert!((r.scalar_lambda.unwrap() - 1.0).abs() < 1e-6);
        assert!((r.best_p1 - (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn scaled_reference_equals_uniform_when_lossless() {
        let spec = MultiplexerSpec::new(1.0, 1.0, 1.0, 0.9, 6).unwrap();
        let settings = OptimizerSettings::quick();
        let spd = DetectionStrategy::spd();
        let a = optimize_uniform(&spec, &spd, &settings).unwrap();
        let b = optimize_scaled_reference(&spec, &spd, &settings).unwrap();
        assert!((a.best_p1 - b.best_p1).abs() < 1e-12);
        assert!((a.scalar_lambda.unwrap() - b.scalar_lambda.unwrap()).abs() < 1e-6);
        assert!(!b.bound_clamped);
    }

    #[test]
    fn scaled_reference_flags_clamping() {
        let (profile, clamped) = scaled_reference_profile(&[0.5, 0.1], 1.0, 0.0, 5.0);
        assert_eq!(profile, vec![2.0, 5.0]);
        assert!(clamped);
    }

    #[test]
    fn warm_start_length_checked() {
        let spec = MultiplexerSpec::new(0.9, 0.985, 0.9, 0.9, 3).unwrap();
        let warm = PumpProfile::uniform(2, 0.5).unwrap();
        let r = optimize_pump(
            &spec,
            &DetectionStrategy::spd(),
            &OptimizerSettings::quick(),
            Some(&warm),
        );
        assert!(r.is_err());
    }

    #[test]
    fn find_optimal_n_rejects_tiny_reference() {
        let spec = MultiplexerSpec::new(0.9, 0.985, 0.9, 0.9, 1).unwrap();
        let r = find_optimal_n(
            &spec,
            &DetectionStrategy::spd(),
            &OptimizerSettings::quick(),
            1,
            1e-3,
            Mode::Uniform,
        );
        assert!(r.is_err());
    }

    #[test]
    fn stability_closed_form_single_unit() {
        // P_1(λ) = λ e^{-λ} on a lossless single unit; with baseline b the
        // interval ends solve λ e^{-λ} = b around λ = 1.
        let spec = lossless_single();
        let pump = PumpProfile::uniform(1, 1.0).unwrap();
        let baseline = 0.3;
        let s = stability_interval(
            &spec,
            &DetectionStrategy::spd(),
            &pump,
            baseline,
            &TruncationPolicy::default(),
        )
        .unwrap();
        let f = |l: f64| l * (-l).exp() - baseline;
        let root = |mut a: f64, mut b: f64| {
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if f(a) * f(m) <= 0.0 {
                    b = m
                } else {
                    a = m
                }
            }
            0.5 * (a + b)
        };
        let lo = root(0.1, 1.0);
        let hi = root(1.0, 4.0);
        assert!((s.delta_minus - (lo - 1.0)).abs() < 1e-4, "{s:?}");
        assert!((s.delta_plus - (hi - 1.0)).abs() < 1e-4, "{s:?}");
        assert!(!s.empty);

        let s = stability_interval(
            &spec,
            &DetectionStrategy::spd(),
            &pump,
            0.5,
            &TruncationPolicy::default(),
        )
        .unwrap();
        assert!(s.empty);
        assert_eq!((s.delta_minus, s.delta_plus), (0.0, 0.0));
    }
}
