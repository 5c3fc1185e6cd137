//! End-to-end acceptance checks against published values and model
//! properties. Runs as a plain binary and prints one PASS/FAIL line per
//! criterion; the process fails if any criterion fails.

use std::collections::HashSet;
use std::time::Instant;

use asymux::experiments::{
    self, cell_seed, delta_surface, fixed_n_curve, table1, vb_crossover, Axis, Param, ResultRow, SizeChoice, SweepGrid,
};
use asymux::mc::{self, McSettings};
use asymux::optimizer::{optimize_pump, optimize_scaled_reference, optimize_uniform};
use asymux::*;
use rand::Rng;

struct Report {
    failures: Vec<String>,
}

impl Report {
    fn criterion(&mut self, id: &str, title: &str, pass: bool, detail: &str, started: Instant) {
        let verdict = if pass { "PASS" } else { "FAIL" };
        println!(
            "[{verdict}] {id} {title}: {detail} ({:.1}s)",
            started.elapsed().as_secs_f64()
        );
        if !pass {
            self.failures.push(id.to_string());
        }
    }
}

fn spec(v_r: f64, v_b: f64, v_d: f64) -> MultiplexerSpec {
    MultiplexerSpec::new(v_r, DEFAULT_V_T, v_b, v_d, 1).unwrap()
}

fn within(value: f64, target: f64, tol: f64) -> bool {
    (value - target).abs() <= tol
}

fn search(n_ref: usize) -> SizeChoice {
    SizeChoice::Search { n_ref, threshold: 1e-3 }
}

fn peak_position(lambdas: &[f64]) -> usize {
    lambdas
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i + 1)
        .unwrap()
}

fn main() {
    let mut report = Report { failures: Vec::new() };
    let default = OptimizerSettings::default();
    let quick = OptimizerSettings::quick();

    // AC1 and AC2 share the golden-row optimisations
    let t = Instant::now();
    let golden = table1::golden_entries();
    let rows = experiments::reproduce_table1_entries(&golden, &default, 100).unwrap();
    let mut ok = true;
    let mut notes = Vec::new();
    for (entry, pair) in golden.iter().zip(rows.chunks(2)) {
        let (per_unit, uniform) = (&pair[0], &pair[1]);
        let n = per_unit.n_opt.unwrap();
        let n_tol = if entry.n_opt_per_unit == 23 { 2 } else { 1 };
        let lam = uniform.scalar_lambda.unwrap();
        let row_ok = within(per_unit.p1_max, entry.p1_per_unit, 0.002)
            && n.abs_diff(entry.n_opt_per_unit) <= n_tol
            && within(lam, entry.lambda_uniform, 0.005);
        println!(
            "    ({:.2}, {:.2}, {:.2}) P1 {:.4} [{}] N {} [{}] lambda {:.4} [{}] {}",
            entry.v_r,
            entry.v_d,
            entry.v_b,
            per_unit.p1_max,
            entry.p1_per_unit,
            n,
            entry.n_opt_per_unit,
            lam,
            entry.lambda_uniform,
            if row_ok { "ok" } else { "MISS" }
        );
        ok &= row_ok;
        notes.push(format!("{:.4}", per_unit.p1_max));
    }
    report.criterion("AC1", "reference table golden rows", ok, &notes.join(" "), t);

    let t = Instant::now();
    let headline = &rows[0];
    report.criterion(
        "AC2",
        "state-of-the-art maximum",
        within(headline.p1_max, 0.935, 0.002),
        &format!("P1 = {:.4} at N = {}", headline.p1_max, headline.n_units),
        t,
    );

    // AC3: differences at single cells
    let t = Instant::now();
    let cell = |v_b: f64| SweepGrid::new(spec(0.8, v_b, 0.8), vec![]);
    let spd = DetectionStrategy::spd();
    let thd = DetectionStrategy::threshold();
    let s12 = DetectionStrategy::up_to(2).unwrap();
    let gap = |grid: SweepGrid, a: &DetectionStrategy, ma: Mode, b: &DetectionStrategy, mb: Mode| {
        delta_surface(&grid, a, ma, b, mb, &quick).unwrap()[0].delta.unwrap()
    };
    let thd_gap = gap(cell(0.98), &thd, Mode::PerUnit, &thd, Mode::Uniform);
    let spd_gap = gap(cell(0.98), &spd, Mode::PerUnit, &spd, Mode::Uniform);
    let s12_gap = gap(cell(0.8), &s12, Mode::PerUnit, &spd, Mode::PerUnit);
    report.criterion(
        "AC3",
        "difference-surface extremes",
        within(thd_gap, 0.0225, 0.003) && within(spd_gap, 0.006, 0.002) && within(s12_gap, 0.007, 0.002),
        &format!("ThD {thd_gap:.4} [0.0225], SPD {spd_gap:.4} [0.006], S12-SPD {s12_gap:.4} [0.007]"),
        t,
    );

    // AC4: crossover in N with a shared pump, then in V_b over the grid
    let t = Instant::now();
    let base = spec(0.8, 0.8, 0.85);
    let curve_s12 = fixed_n_curve(&base, &s12, &[Mode::Uniform], 1..=15, &quick).unwrap();
    let curve_spd = fixed_n_curve(&base, &spd, &[Mode::Uniform], 1..=15, &quick).unwrap();
    let s12_wins: Vec<bool> = curve_s12
        .iter()
        .zip(&curve_spd)
        .map(|(a, b)| a.p1_max > b.p1_max)
        .collect();
    let cross = s12_wins.iter().position(|w| !w).map(|i| i + 1).unwrap_or(usize::MAX);
    let clean = cross != usize::MAX && s12_wins[cross - 1..].iter().all(|w| !w);
    // coarse version of the default grid; the reference size only has to
    // exceed the saturation size, which is below 30 for V_b < 0.9
    let mut grid = SweepGrid::new(
        spec(0.8, 0.8, 0.8),
        vec![
            Axis::with_default_range(Param::Reflection, 0.05),
            Axis::with_default_range(Param::Detector, 0.05),
        ],
    );
    grid.size = search(40);
    let crossover = vb_crossover(&grid, &s12, &spd, Mode::PerUnit, &quick, 0.8, 0.9, 0.005).unwrap();
    report.criterion(
        "AC4",
        "strategy crossovers",
        clean && cross.abs_diff(7) <= 1 && within(crossover.v_b, 0.837, 0.01),
        &format!(
            "shared-pump S12 loses from N = {cross} [7]; V_b crossover {:.4} in ({:.4}, {:.4}) [0.837]",
            crossover.v_b, crossover.bracket.0, crossover.bracket.1
        ),
        t,
    );

    // AC5: stability intervals at the optimal uniform size
    let t = Instant::now();
    let a = experiments::stability_report(&spec(0.99, 0.98, 0.9), &spd, search(100), &default).unwrap();
    let b = experiments::stability_report(&spec(0.9, 0.98, 0.8), &spd, search(100), &default).unwrap();
    let (am, ap) = (a.delta_minus.unwrap(), a.delta_plus.unwrap());
    let (bm, bp) = (b.delta_minus.unwrap(), b.delta_plus.unwrap());
    let ok = within(am, -0.05, 0.01)
        && within(ap, 0.057, 0.01)
        && within(a.p1_max, 0.9059, 0.001)
        && within(a.baseline_p1.unwrap(), 0.9052, 0.001)
        && within(bm, -0.129, 0.015)
        && within(bp, 0.15, 0.015);
    report.criterion(
        "AC5",
        "stability intervals",
        ok,
        &format!(
            "[{am:.4}, {ap:.4}] at N = {} with maxima {:.4}/{:.4}; [{bm:.4}, {bp:.4}] at N = {}",
            a.n_units,
            a.p1_max,
            a.baseline_p1.unwrap(),
            b.n_units
        ),
        t,
    );

    // AC6: property suite
    let t = Instant::now();
    let (props_ok, props_detail) = property_suite(&quick);
    report.criterion("AC6", "property suite", props_ok, &props_detail, t);

    // AC7: stored-seed Monte Carlo corpus
    let t = Instant::now();
    let mut worst = 0.0f64;
    let mut failing = 0;
    let trunc = TruncationPolicy::default();
    for case in mc::regression_corpus(mc::CORPUS_SEED, 20) {
        let settings = McSettings {
            seed: case.seed,
            ..McSettings::default()
        };
        let estimate = mc::simulate(&case.spec, &case.pump, &case.strategy, &settings).unwrap();
        let dist = output_distribution(&case.spec, &case.pump, &case.strategy, settings.max_count, &trunc).unwrap();
        let z = mc::compare(&dist, &estimate, 0.0)
            .iter()
            .map(|d| d.z)
            .fold(0.0, f64::max);
        worst = worst.max(z);
        failing += usize::from(!mc::compare(&dist, &estimate, 3.0).is_empty());
    }
    report.criterion(
        "AC7",
        "Monte Carlo agreement",
        failing == 0,
        &format!("20 cases x 1e7 trials, {failing} outside 3 sigma, largest deviation {worst:.2} sigma"),
        t,
    );

    // AC8: enhancement at suboptimal sizes
    let t = Instant::now();
    let curve = fixed_n_curve(
        &spec(0.99, 0.98, 0.8),
        &spd,
        &[Mode::PerUnit, Mode::Uniform],
        1..=20,
        &quick,
    )
    .unwrap();
    let (per_unit, uniform) = curve.split_at(20);
    let gaps = experiments::curve_difference(per_unit, uniform);
    let gap_at = |n: usize| gaps[n - 1].delta.unwrap();
    let all_above = (9..=13).all(|n| gap_at(n) > 0.01);
    let peak = (1..=20).max_by(|&x, &y| gap_at(x).total_cmp(&gap_at(y))).unwrap();
    let p11 = per_unit[10].p1_max;
    report.criterion(
        "AC8",
        "enhancement below the optimal size",
        all_above && within(p11, 0.846, 0.003) && peak.abs_diff(11) <= 1,
        &format!(
            "gaps N=9..13: {}; peak at N = {peak}; P1(N=11) = {p11:.4} [0.846]",
            (9..=13)
                .map(|n| format!("{:.4}", gap_at(n)))
                .collect::<Vec<_>>()
                .join(" ")
        ),
        t,
    );

    if report.failures.is_empty() {
        println!("acceptance: all criteria passed");
    } else {
        println!("acceptance: failed {}", report.failures.join(", "));
        std::process::exit(1);
    }
}

fn random_spec(rng: &mut impl Rng, max_units: usize) -> MultiplexerSpec {
    let mut spec = MultiplexerSpec::new(
        rng.gen_range(0.8..=0.99),
        DEFAULT_V_T,
        rng.gen_range(0.8..=0.98),
        rng.gen_range(0.8..=0.98),
        rng.gen_range(1..=max_units),
    )
    .unwrap();
    if rng.gen_bool(0.3) {
        spec = spec.with_source(SourceFamily::Thermal);
    }
    spec
}

fn random_strategy(rng: &mut impl Rng) -> DetectionStrategy {
    match rng.gen_range(0..4) {
        0 => DetectionStrategy::spd(),
        1 => DetectionStrategy::threshold(),
        2 => DetectionStrategy::up_to(rng.gen_range(2..=4)).unwrap(),
        _ => DetectionStrategy::explicit([1, 3]).unwrap(),
    }
}

fn property_suite(quick: &OptimizerSettings) -> (bool, String) {
    let mut rng = asymux::seeds::rng(0xAC6, &[]);
    let trunc = TruncationPolicy::default();
    let mut checks: Vec<(&str, bool)> = Vec::new();

    // normalisation over 1000 random configurations
    let mut worst_norm = 0.0f64;
    for _ in 0..1000 {
        let spec = random_spec(&mut rng, 12);
        let pump = PumpProfile::new((0..spec.n_units).map(|_| rng.gen_range(0.0..=1.5)).collect()).unwrap();
        let dist = output_distribution(&spec, &pump, &random_strategy(&mut rng), 10, &trunc).unwrap();
        worst_norm = worst_norm.max((dist.total() - 1.0).abs());
    }
    checks.push(("normalisation", worst_norm <= 1e-9));

    // threshold detection is the limit of accepting every count up to J
    let mut worst_thd = 0.0f64;
    for _ in 0..200 {
        let spec = random_spec(&mut rng, 8);
        let pump = PumpProfile::new((0..spec.n_units).map(|_| rng.gen_range(0.0..=1.5)).collect()).unwrap();
        let cap = trunc.l_hard_cap as u32;
        let up_to = DetectionStrategy::up_to_with_cap(cap, cap).unwrap();
        let a = output_distribution(&spec, &pump, &DetectionStrategy::threshold(), 10, &trunc).unwrap();
        let b = output_distribution(&spec, &pump, &up_to, 10, &trunc).unwrap();
        for (x, y) in a.probs.iter().zip(&b.probs) {
            worst_thd = worst_thd.max((x - y).abs());
        }
    }
    checks.push(("threshold limit", worst_thd <= 1e-10));

    // a Poisson source seen through a lossy detector is Poisson again
    let mut worst_thin = 0.0f64;
    for _ in 0..200 {
        let lambda: f64 = rng.gen_range(0.0..=3.0);
        let v_d: f64 = rng.gen_range(0.5..=1.0);
        for j in 0..8u64 {
            let direct = detect_total_prob(SourceFamily::Poisson, lambda, v_d, j, &trunc).unwrap();
            let mu = lambda * v_d;
            let thinned = (-mu).exp() * mu.powi(j as i32) / (1..=j).map(|k| k as f64).product::<f64>();
            worst_thin = worst_thin.max((direct - thinned).abs());
        }
    }
    checks.push(("Poisson thinning", worst_thin <= 1e-10));

    // dominance of the richer search spaces
    let mut dominance = true;
    for _ in 0..12 {
        let spec = random_spec(&mut rng, 10).with_source(SourceFamily::Poisson);
        let strategy = random_strategy(&mut rng);
        let pu = optimize_pump(&spec, &strategy, quick, None).unwrap().best_p1;
        let un = optimize_uniform(&spec, &strategy, quick).unwrap().best_p1;
        let sr = optimize_scaled_reference(&spec, &strategy, quick).unwrap().best_p1;
        let grid_floor = (0..=100)
            .map(|k| {
                single_photon_prob(
                    &spec,
                    &PumpProfile::uniform(spec.n_units, 0.05 * k as f64).unwrap(),
                    &strategy,
                )
                .unwrap()
            })
            .fold(0.0, f64::max);
        dominance &= pu >= un - 1e-6 && pu >= sr - 1e-6 && un >= grid_floor - 1e-12;
    }
    checks.push(("dominance", dominance));

    // identical seeds give identical bytes, whatever the thread count
    let cell = MultiplexerSpec::new(0.9, DEFAULT_V_T, 0.85, 0.9, 1).unwrap();
    let run = |threads: usize| -> Vec<u8> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let rows: Vec<ResultRow> = pool.install(|| {
            ["spd", "S={1,2}"]
                .iter()
                .map(|s| {
                    experiments::run_cell(
                        &cell,
                        &s.parse().unwrap(),
                        Mode::PerUnit,
                        SizeChoice::Search {
                            n_ref: 30,
                            threshold: 1e-3,
                        },
                        quick,
                    )
                    .unwrap()
                })
                .collect()
        });
        let mut buf = Vec::new();
        experiments::output::write_csv(&mut buf, &"determinism", &rows).unwrap();
        buf
    };
    checks.push(("seed determinism", run(1) == run(4)));

    // optimal profile shapes
    let spd = DetectionStrategy::spd();
    let rising = find_optimal_n(&spec(0.99, 0.98, 0.9), &spd, quick, 100, 1e-3, Mode::PerUnit).unwrap();
    let profile = rising.best_report().best_pump.as_slice().to_vec();
    checks.push(("rising profile", profile.windows(2).all(|w| w[1] >= w[0])));
    let base = spec(0.8, 0.8, 0.85);
    let mut peaks = Vec::new();
    for (strategy, expected) in [(spd.clone(), 8usize), (DetectionStrategy::up_to(2).unwrap(), 6)] {
        let seed = cell_seed(quick.seed, &base);
        let found = find_optimal_n(&base, &strategy, &quick.with_seed(seed), 100, 1e-3, Mode::PerUnit).unwrap();
        let lambdas = found.best_report().best_pump.as_slice().to_vec();
        let at = peak_position(&lambdas);
        peaks.push(format!("{strategy} peak {at}/{}", found.n_opt));
        checks.push(("interior peak", at.abs_diff(expected) <= 1 && at < found.n_opt));
    }

    let failed: HashSet<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    let detail = format!(
        "{} checks, norm err {worst_norm:.1e}, thd err {worst_thd:.1e}, thinning err {worst_thin:.1e}, {}{}",
        checks.len(),
        peaks.join(", "),
        if failed.is_empty() {
            String::new()
        } else {
            format!("; failed: {failed:?}")
        }
    );
    (failed.is_empty(), detail)
}
