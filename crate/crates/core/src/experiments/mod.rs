//! Reproducible result sets: parameter sweeps, size curves, difference
//! surfaces, the reference table and stability intervals.
//!
//! Every computation produces [`ResultRow`]s, which carry enough
//! information to re-evaluate their `p1_max` from the stored profile.
//! Grid cells draw their optimizer seed from the master seed and a hash of
//! the cell coordinates, so a cell gives the same answer whether it is run
//! alone, as part of a sweep, or on any number of threads.

pub mod output;
pub mod table1;

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::optimizer::{
    find_optimal_n, optimize, optimize_pump, optimize_uniform, stability_interval, Mode, OptimizationReport,
    OptimizerSettings, DEFAULT_N_REF, DEFAULT_SIZE_THRESHOLD,
};
use crate::seeds;
use crate::stats::{single_photon_prob_with, DetectionStrategy, PumpProfile};
use crate::topology::{MultiplexerSpec, SourceFamily, DEFAULT_V_T};

pub use table1::{Table1Entry, TABLE1};

/// How the number of units is chosen for a cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SizeChoice {
    Fixed(usize),
    Search { n_ref: usize, threshold: f64 },
}

impl Default for SizeChoice {
    fn default() -> Self {
        SizeChoice::Search {
            n_ref: DEFAULT_N_REF,
            threshold: DEFAULT_SIZE_THRESHOLD,
        }
    }
}

/// One output record. Optional columns are filled by the experiments that
/// need them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub v_r: f64,
    pub v_t: f64,
    pub v_b: f64,
    pub v_d: f64,
    pub source: SourceFamily,
    pub strategy: DetectionStrategy,
    pub mode: Mode,
    /// Size the row was optimised at.
    pub n_units: usize,
    /// Set when `n_units` came out of a size search.
    pub n_opt: Option<usize>,
    pub n_ref: Option<usize>,
    pub p1_max: f64,
    pub scalar_lambda: Option<f64>,
    pub bound_clamped: bool,
    pub converged: bool,
    pub evaluations: u64,
    pub seed: u64,
    /// Configuration this row is compared against, if any.
    pub baseline_strategy: Option<DetectionStrategy>,
    pub baseline_mode: Option<Mode>,
    pub baseline_n_units: Option<usize>,
    pub baseline_p1: Option<f64>,
    /// `p1_max - baseline_p1`.
    pub delta: Option<f64>,
    pub delta_minus: Option<f64>,
    pub delta_plus: Option<f64>,
    pub lambdas: Vec<f64>,
    /// Not serialised, so result files stay byte-stable, and ignored by
    /// comparisons.
    #[serde(skip)]
    pub wall_time: WallTime,
}

/// Elapsed time of a job. All values compare equal.
#[derive(Debug, Clone, Copy, Default)]
pub struct WallTime(pub Duration);

impl PartialEq for WallTime {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl std::ops::AddAssign for WallTime {
    fn add_assign(&mut self, other: Self) {
        self.0 += other.0;
    }
}

impl ResultRow {
    pub fn from_report(spec: &MultiplexerSpec, report: &OptimizationReport, seed: u64) -> Self {
        ResultRow {
            v_r: spec.v_r,
            v_t: spec.v_t,
            v_b: spec.v_b,
            v_d: spec.v_d,
            source: spec.source,
            strategy: report.strategy.clone(),
            mode: report.mode,
            n_units: report.n_units,
            n_opt: None,
            n_ref: None,
            p1_max: report.best_p1,
            scalar_lambda: report.scalar_lambda,
            bound_clamped: report.bound_clamped,
            converged: report.converged,
            evaluations: report.evaluations,
            seed,
            baseline_strategy: None,
            baseline_mode: None,
            baseline_n_units: None,
            baseline_p1: None,
            delta: None,
            delta_minus: None,
            delta_plus: None,
            lambdas: report.best_pump.as_slice().to_vec(),
            wall_time: WallTime::default(),
        }
    }

    pub fn spec(&self) -> Result<MultiplexerSpec> {
        let spec = MultiplexerSpec {
            v_r: self.v_r,
            v_t: self.v_t,
            v_b: self.v_b,
            v_d: self.v_d,
            n_units: self.n_units,
            source: self.source,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn pump(&self) -> Result<PumpProfile> {
        PumpProfile::new(self.lambdas.clone())
    }

    /// `P_1` of the stored profile under the default truncation.
    pub fn reevaluate(&self) -> Result<f64> {
        single_photon_prob_with(&self.spec()?, &self.pump()?, &self.strategy, &Default::default())
    }

    /// Identity of the job that produced this row, used to resume sweeps.
    pub fn key(&self) -> String {
        job_key(&self.spec_coordinates(), &self.strategy, self.mode)
    }

    fn spec_coordinates(&self) -> MultiplexerSpec {
        MultiplexerSpec {
            v_r: self.v_r,
            v_t: self.v_t,
            v_b: self.v_b,
            v_d: self.v_d,
            n_units: self.n_units,
            source: self.source,
        }
    }

    fn attach_baseline(&mut self, baseline: &ResultRow) {
        self.baseline_strategy = Some(baseline.strategy.clone());
        self.baseline_mode = Some(baseline.mode);
        self.baseline_n_units = Some(baseline.n_units);
        self.baseline_p1 = Some(baseline.p1_max);
        self.delta = Some(self.p1_max - baseline.p1_max);
        self.wall_time += baseline.wall_time;
    }
}

fn job_key(spec: &MultiplexerSpec, strategy: &DetectionStrategy, mode: Mode) -> String {
    format!(
        "{}|{}|{}|{}|{}|{}|{}",
        spec.v_r, spec.v_t, spec.v_b, spec.v_d, spec.source, strategy, mode
    )
}

/// Seed of the grid cell at the coordinates of `spec`.
pub fn cell_seed(master: u64, spec: &MultiplexerSpec) -> u64 {
    let coords = format!("{}|{}|{}|{}|{}", spec.v_r, spec.v_t, spec.v_b, spec.v_d, spec.source);
    seeds::derive(master, &[seeds::hash_bytes(coords.as_bytes())])
}

/// Optimises one configuration. `settings.seed` is the master seed; the
/// optimizer runs with the cell seed. `spec.n_units` is only used for
/// [`SizeChoice::Fixed`].
pub fn run_cell(
    spec: &MultiplexerSpec,
    strategy: &DetectionStrategy,
    mode: Mode,
    size: SizeChoice,
    settings: &OptimizerSettings,
) -> Result<ResultRow> {
    let started = Instant::now();
    let seed = cell_seed(settings.seed, spec);
    let local = settings.with_seed(seed);
    let mut row = match size {
        SizeChoice::Fixed(n) => {
            let sized = spec.with_units(n)?;
            let report = optimize(&sized, strategy, &local, mode, None)?;
            ResultRow::from_report(&sized, &report, seed)
        }
        SizeChoice::Search { n_ref, threshold } => {
            let search = find_optimal_n(spec, strategy, &local, n_ref, threshold, mode)?;
            let best = search.best_report();
            let mut row = ResultRow::from_report(&spec.with_units(best.n_units)?, best, seed);
            row.n_opt = Some(search.n_opt);
            row.n_ref = Some(n_ref);
            row.evaluations = search.reports.iter().map(|r| r.evaluations).sum();
            row
        }
    };
    row.wall_time = WallTime(started.elapsed());
    Ok(row)
}

/// Efficiency parameter that a sweep axis can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Param {
    #[serde(rename = "v_r")]
    Reflection,
    #[serde(rename = "v_d")]
    Detector,
    #[serde(rename = "v_b")]
    General,
}

impl Param {
    pub fn as_str(&self) -> &'static str {
        match self {
            Param::Reflection => "v_r",
            Param::Detector => "v_d",
            Param::General => "v_b",
        }
    }

    /// Default sweep range: `[0.8, 0.99]` for `V_r`, `[0.8, 0.98]` otherwise.
    pub fn default_range(&self) -> (f64, f64) {
        match self {
            Param::Reflection => (0.8, 0.99),
            Param::Detector | Param::General => (0.8, 0.98),
        }
    }

    fn set(&self, spec: &mut MultiplexerSpec, value: f64) {
        match self {
            Param::Reflection => spec.v_r = value,
            Param::Detector => spec.v_d = value,
            Param::General => spec.v_b = value,
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Param {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "v_r" | "vr" => Ok(Param::Reflection),
            "v_d" | "vd" => Ok(Param::Detector),
            "v_b" | "vb" => Ok(Param::General),
            other => Err(invalid(format!("unknown sweep parameter '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub param: Param,
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl Axis {
    pub fn new(param: Param, min: f64, max: f64, step: f64) -> Self {
        Axis { param, min, max, step }
    }

    /// The default range of `param` at the given step.
    pub fn with_default_range(param: Param, step: f64) -> Self {
        let (min, max) = param.default_range();
        Axis { param, min, max, step }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) || !(self.min <= self.max) {
            return Err(invalid(format!(
                "axis {}: need min <= max and step > 0, got {}..{} step {}",
                self.param, self.min, self.max, self.step
            )));
        }
        if self.min < 0.0 || self.max > 1.0 {
            return Err(invalid(format!("axis {} must stay within [0, 1]", self.param)));
        }
        Ok(())
    }

    /// Grid values, `min + k step` up to `max`, rounded to ten decimals so
    /// that coordinates (and cell seeds) are free of accumulation noise.
    pub fn values(&self) -> Vec<f64> {
        let count = ((self.max - self.min) / self.step + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|k| ((self.min + k as f64 * self.step) * 1e10).round() / 1e10)
            .collect()
    }
}

impl FromStr for Axis {
    type Err = Error;
    /// `param:min:max:step`, or `param:step` for the default range.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let num = |t: &str| -> Result<f64> {
            t.parse()
                .map_err(|_| invalid(format!("bad number '{t}' in axis '{s}'")))
        };
        let axis = match parts.as_slice() {
            [p, step] => Axis::with_default_range(p.parse()?, num(step)?),
            [p, lo, hi, step] => Axis::new(p.parse()?, num(lo)?, num(hi)?, num(step)?),
            _ => return Err(invalid(format!("axis '{s}' is not param:min:max:step"))),
        };
        axis.validate()?;
        Ok(axis)
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}:{}", self.param, self.min, self.max, self.step)
    }
}

/// A sweep over up to two efficiency axes, for every strategy and mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    /// Values of the parameters that are not swept. `n_units` is unused.
    pub base: MultiplexerSpec,
    pub axes: Vec<Axis>,
    pub strategies: Vec<DetectionStrategy>,
    pub modes: Vec<Mode>,
    #[serde(default)]
    pub size: SizeChoice,
    /// When set, every row also records this configuration's optimum at
    /// the same cell and the difference to it.
    #[serde(default)]
    pub baseline: Option<(DetectionStrategy, Mode)>,
}

impl SweepGrid {
    pub fn new(base: MultiplexerSpec, axes: Vec<Axis>) -> Self {
        SweepGrid {
            base,
            axes,
            strategies: vec![DetectionStrategy::spd()],
            modes: vec![Mode::PerUnit],
            size: SizeChoice::default(),
            baseline: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.axes.len() > 2 {
            return Err(invalid("a sweep has at most two axes"));
        }
        if self.axes.len() == 2 && self.axes[0].param == self.axes[1].param {
            return Err(invalid("sweep axes must vary different parameters"));
        }
        for axis in &self.axes {
            axis.validate()?;
        }
        if self.strategies.is_empty() || self.modes.is_empty() {
            return Err(invalid("a sweep needs at least one strategy and one mode"));
        }
        if let SizeChoice::Fixed(0) = self.size {
            return Err(invalid("fixed size must be at least 1"));
        }
        Ok(())
    }

    /// Cell specs in row-major order (first axis outermost).
    pub fn cells(&self) -> Vec<MultiplexerSpec> {
        let mut cells = vec![self.base];
        for axis in &self.axes {
            cells = cells
                .into_iter()
                .flat_map(|spec| {
                    axis.values().into_iter().map(move |v| {
                        let mut s = spec;
                        axis.param.set(&mut s, v);
                        s
                    })
                })
                .collect();
        }
        cells
    }

    /// Every (cell, strategy, mode) job in output order.
    pub fn jobs(&self) -> Vec<(MultiplexerSpec, DetectionStrategy, Mode)> {
        let mut jobs = Vec::new();
        for cell in self.cells() {
            for strategy in &self.strategies {
                for &mode in &self.modes {
                    jobs.push((cell, strategy.clone(), mode));
                }
            }
        }
        jobs
    }
}

fn run_job(
    grid: &SweepGrid,
    job: &(MultiplexerSpec, DetectionStrategy, Mode),
    settings: &OptimizerSettings,
) -> Result<ResultRow> {
    let (spec, strategy, mode) = job;
    let mut row = run_cell(spec, strategy, *mode, grid.size, settings)?;
    if let Some((b_strategy, b_mode)) = &grid.baseline {
        let baseline = run_cell(spec, b_strategy, *b_mode, grid.size, settings)?;
        row.attach_baseline(&baseline);
    }
    Ok(row)
}

/// Runs the sweep, skipping jobs whose [`ResultRow::key`] is in `done`.
/// Jobs run in parallel in batches; `sink` receives each batch in job
/// order as soon as it completes, so partial results can be persisted.
pub fn sweep_with<F>(grid: &SweepGrid, settings: &OptimizerSettings, done: &HashSet<String>, mut sink: F) -> Result<()>
where
    F: FnMut(Vec<ResultRow>) -> Result<()>,
{
    grid.validate()?;
    settings.validate()?;
    let pending: Vec<_> = grid
        .jobs()
        .into_iter()
        .filter(|(spec, strategy, mode)| !done.contains(&job_key(spec, strategy, *mode)))
        .collect();
    let batch = rayon::current_num_threads().max(1);
    for chunk in pending.chunks(batch) {
        let rows = chunk
            .par_iter()
            .map(|job| run_job(grid, job, settings))
            .collect::<Result<Vec<_>>>()?;
        sink(rows)?;
    }
    Ok(())
}

pub fn sweep(grid: &SweepGrid, settings: &OptimizerSettings) -> Result<Vec<ResultRow>> {
    let mut rows = Vec::new();
    sweep_with(grid, settings, &HashSet::new(), |batch| {
        rows.extend(batch);
        Ok(())
    })?;
    Ok(rows)
}

/// `P_1` of configuration A minus configuration B at every cell of `grid`
/// (its strategy and mode lists are replaced by A).
pub fn delta_surface(
    grid: &SweepGrid,
    strategy_a: &DetectionStrategy,
    mode_a: Mode,
    strategy_b: &DetectionStrategy,
    mode_b: Mode,
    settings: &OptimizerSettings,
) -> Result<Vec<ResultRow>> {
    let grid = SweepGrid {
        strategies: vec![strategy_a.clone()],
        modes: vec![mode_a],
        baseline: Some((strategy_b.clone(), mode_b)),
        ..grid.clone()
    };
    sweep(&grid, settings)
}

/// Optimum at each fixed size in `n_range`, for every mode. Per-unit
/// searches are warm-started along the curve, and size `N` uses the same
/// seed as size `N` of [`find_optimal_n`] with the cell seed as master.
pub fn fixed_n_curve(
    spec: &MultiplexerSpec,
    strategy: &DetectionStrategy,
    modes: &[Mode],
    n_range: std::ops::RangeInclusive<usize>,
    settings: &OptimizerSettings,
) -> Result<Vec<ResultRow>> {
    if n_range.is_empty() || *n_range.start() == 0 {
        return Err(invalid("size range must be nonempty and start at 1 or above"));
    }
    let cell = cell_seed(settings.seed, spec);
    let per_mode = modes
        .par_iter()
        .map(|&mode| -> Result<Vec<ResultRow>> {
            let mut rows: Vec<ResultRow> = Vec::new();
            let mut warm: Option<PumpProfile> = None;
            for n in n_range.clone() {
                let started = Instant::now();
                let sized = spec.with_units(n)?;
                let seed = seeds::derive(cell, &[n as u64]);
                let warm_start = warm.as_ref().filter(|w| w.len() == n);
                let report = optimize(&sized, strategy, &settings.with_seed(seed), mode, warm_start)?;
                warm = Some(report.best_pump.extended());
                let mut row = ResultRow::from_report(&sized, &report, seed);
                row.wall_time = WallTime(started.elapsed());
                rows.push(row);
            }
            Ok(rows)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_mode.into_iter().flatten().collect())
}

/// Pairs each row of `a` with the row of `b` at the same size and records
/// the difference. Rows without a partner are dropped.
pub fn curve_difference(a: &[ResultRow], b: &[ResultRow]) -> Vec<ResultRow> {
    a.iter()
        .filter_map(|row| {
            let other = b.iter().find(|o| o.n_units == row.n_units)?;
            let mut row = row.clone();
            row.attach_baseline(other);
            Some(row)
        })
        .collect()
}

/// Stability of the per-unit optimum against a common shift of all pumps.
///
/// The size is the optimal size of the uniform pump. The per-unit profile
/// is optimised at that size (warm-started from the uniform optimum) and
/// the interval is measured against the uniform optimum there.
pub fn stability_report(
    spec: &MultiplexerSpec,
    strategy: &DetectionStrategy,
    size: SizeChoice,
    settings: &OptimizerSettings,
) -> Result<ResultRow> {
    let started = Instant::now();
    let seed = cell_seed(settings.seed, spec);
    let local = settings.with_seed(seed);
    let (n, n_opt, n_ref) = match size {
        SizeChoice::Fixed(n) => (n, None, None),
        SizeChoice::Search { n_ref, threshold } => {
            let search = find_optimal_n(spec, strategy, &local, n_ref, threshold, Mode::Uniform)?;
            (search.n_opt, Some(search.n_opt), Some(n_ref))
        }
    };
    let sized = spec.with_units(n)?;
    let uniform = optimize_uniform(&sized, strategy, &local)?;
    let per_unit = optimize_pump(&sized, strategy, &local, Some(&uniform.best_pump))?;
    let interval = stability_interval(
        &sized,
        strategy,
        &per_unit.best_pump,
        uniform.best_p1,
        &settings.truncation,
    )?;
    let mut row = ResultRow::from_report(&sized, &per_unit, seed);
    row.n_opt = n_opt;
    row.n_ref = n_ref;
    row.attach_baseline(&ResultRow::from_report(&sized, &uniform, seed));
    row.delta_minus = Some(interval.delta_minus);
    row.delta_plus = Some(interval.delta_plus);
    row.wall_time = WallTime(started.elapsed());
    Ok(row)
}

/// Per-unit and uniform optima for the given reference entries, using the
/// size search at `n_ref`. Rows come in entry order, per-unit first.
pub fn reproduce_table1_entries(
    entries: &[Table1Entry],
    settings: &OptimizerSettings,
    n_ref: usize,
) -> Result<Vec<ResultRow>> {
    let size = SizeChoice::Search {
        n_ref,
        threshold: DEFAULT_SIZE_THRESHOLD,
    };
    let jobs: Vec<(MultiplexerSpec, Mode)> = entries
        .iter()
        .flat_map(|e| {
            let spec = MultiplexerSpec {
                v_r: e.v_r,
                v_t: DEFAULT_V_T,
                v_b: e.v_b,
                v_d: e.v_d,
                n_units: 1,
                source: SourceFamily::Poisson,
            };
            [(spec, Mode::PerUnit), (spec, Mode::Uniform)]
        })
        .collect();
    let spd = DetectionStrategy::spd();
    jobs.par_iter()
        .map(|(spec, mode)| run_cell(spec, &spd, *mode, size, settings))
        .collect()
}

/// All 63 reference combinations at the default reference size.
pub fn reproduce_table1(settings: &OptimizerSettings) -> Result<Vec<ResultRow>> {
    reproduce_table1_entries(&TABLE1, settings, DEFAULT_N_REF)
}

/// Result of the bisection for the general transmission at which the
/// advantage of one strategy over another vanishes everywhere on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Crossover {
    /// Midpoint of the final bracket.
    pub v_b: f64,
    /// Final bracket: the advantage is positive at the first end and not
    /// positive at the second.
    pub bracket: (f64, f64),
    /// Every probed `(V_b, max over the grid of P_A - P_B)`.
    pub probes: Vec<(f64, f64)>,
}

/// Bisection on `V_b` of the sign of the largest difference
/// `P_1(A) - P_1(B)` over the cells of `grid` (whose own `V_b` axis, if
/// any, is ignored). The difference must be positive at `lo` and not
/// positive at `hi`.
#[allow(clippy::too_many_arguments)]
pub fn vb_crossover(
    grid: &SweepGrid,
    strategy_a: &DetectionStrategy,
    strategy_b: &DetectionStrategy,
    mode: Mode,
    settings: &OptimizerSettings,
    lo: f64,
    hi: f64,
    tolerance: f64,
) -> Result<Crossover> {
    if !(lo < hi) || !(tolerance > 0.0) {
        return Err(invalid("need lo < hi and a positive tolerance"));
    }
    let mut probes = Vec::new();
    let mut advantage = |v_b: f64| -> Result<f64> {
        let probe = SweepGrid {
            base: MultiplexerSpec { v_b, ..grid.base },
            axes: grid
                .axes
                .iter()
                .copied()
                .filter(|a| a.param != Param::General)
                .collect(),
            ..grid.clone()
        };
        let rows = delta_surface(&probe, strategy_a, mode, strategy_b, mode, settings)?;
        let best = rows.iter().filter_map(|r| r.delta).fold(f64::NEG_INFINITY, f64::max);
        probes.push((v_b, best));
        Ok(best)
    };
    if advantage(lo)? <= 0.0 {
        return Err(invalid(format!("no advantage at the lower end V_b = {lo}")));
    }
    if advantage(hi)? > 0.0 {
        return Err(invalid(format!("advantage persists at the upper end V_b = {hi}")));
    }
    let (mut good, mut bad) = (lo, hi);
    while bad - good > tolerance {
        let mid = 0.5 * (good + bad);
        if advantage(mid)? > 0.0 {
            good = mid;
        } else {
            bad = mid;
        }
    }
    Ok(Crossover {
        v_b: 0.5 * (good + bad),
        bracket: (good, bad),
        probes,
    })
}
