//! Published optima and qualitative trends of the router-chain source.

use asymux::mc::{compare, simulate, McSettings};
use asymux::{
    find_optimal_n, optimize_pump, optimize_scaled_reference, optimize_uniform, output_distribution, strategy_scan,
    DetectionStrategy, Mode, MultiplexerSpec, OptimizerSettings, PumpProfile, StrategyKind, TruncationPolicy,
};

fn spec(v_r: f64, v_b: f64, v_d: f64, n: usize) -> MultiplexerSpec {
    MultiplexerSpec::new(v_r, 0.985, v_b, v_d, n).unwrap()
}

fn quick() -> OptimizerSettings {
    OptimizerSettings::quick()
}

#[test]
fn per_unit_optima_at_fixed_size() {
    let spd = DetectionStrategy::spd();
    let a = optimize_pump(&spec(0.99, 0.98, 0.9, 21), &spd, &quick(), None).unwrap();
    assert!((a.best_p1 - 0.905).abs() <= 0.002, "{}", a.best_p1);
    let b = optimize_pump(&spec(0.99, 0.98, 0.98, 16), &spd, &quick(), None).unwrap();
    assert!((b.best_p1 - 0.935).abs() <= 0.002, "{}", b.best_p1);
}

#[test]
fn shared_pump_optima_at_fixed_size() {
    let spd = DetectionStrategy::spd();
    let a = optimize_uniform(&spec(0.9, 0.8, 0.8, 13), &spd, &quick()).unwrap();
    assert!(
        (a.scalar_lambda.unwrap() - 0.859).abs() <= 0.005,
        "{:?}",
        a.scalar_lambda
    );
    let b = optimize_uniform(&spec(0.95, 0.9, 0.9, 15), &spd, &quick()).unwrap();
    assert!(
        (b.scalar_lambda.unwrap() - 0.719).abs() <= 0.005,
        "{:?}",
        b.scalar_lambda
    );
}

#[test]
fn optimal_sizes() {
    let spd = DetectionStrategy::spd();
    let best = spec(0.99, 0.98, 0.98, 1);
    let pu = find_optimal_n(&best, &spd, &quick(), 100, 1e-3, Mode::PerUnit).unwrap();
    assert!(
        pu.n_opt.abs_diff(16) <= 1 && (pu.p1_max - 0.935).abs() <= 0.002,
        "{} {}",
        pu.n_opt,
        pu.p1_max
    );
    let u = find_optimal_n(&best, &spd, &quick(), 100, 1e-3, Mode::Uniform).unwrap();
    assert!(u.n_opt.abs_diff(17) <= 1, "{}", u.n_opt);
    let lossy = find_optimal_n(&spec(0.9, 0.8, 0.8, 1), &spd, &quick(), 100, 1e-3, Mode::PerUnit).unwrap();
    assert!(lossy.n_opt.abs_diff(13) <= 1 && (lossy.p1_max - 0.622).abs() <= 0.002);
}

#[test]
fn two_photon_heralds_help_with_lossy_routers() {
    let outcomes = strategy_scan(&spec(0.8, 0.8, 0.85, 1), &quick(), Mode::PerUnit, 60, 1e-3).unwrap();
    let p = |label: &str| outcomes.iter().find(|o| o.strategy.label() == label).map(|o| o.p1_max);
    let (spd, s12, s123) = (p("SPD").unwrap(), p("S={1,2}").unwrap(), p("S={1,2,3}").unwrap());
    assert!(s12 > spd, "{s12} vs {spd}");
    assert!(s123 <= s12);
    assert_eq!(outcomes[0].strategy.label(), "S={1,2}");
}

#[test]
fn single_photon_detection_beats_threshold_beyond_one_unit() {
    let base = spec(0.99, 0.98, 0.9, 1);
    let (spd, thd) = (DetectionStrategy::spd(), DetectionStrategy::threshold());
    let (mut warm_spd, mut warm_thd): (Option<PumpProfile>, Option<PumpProfile>) = (None, None);
    for n in 1..=25 {
        let s = base.with_units(n).unwrap();
        let a = optimize_pump(&s, &spd, &quick(), warm_spd.map(|w| w.extended()).as_ref()).unwrap();
        let b = optimize_pump(&s, &thd, &quick(), warm_thd.map(|w| w.extended()).as_ref()).unwrap();
        if n == 1 {
            // a lone unit has nothing downstream, so accepting more
            // heralds can only add single-photon events
            assert!(b.best_p1 >= a.best_p1);
        } else {
            assert!(a.best_p1 > b.best_p1, "N={n}: {} vs {}", a.best_p1, b.best_p1);
        }
        warm_spd = Some(a.best_pump);
        warm_thd = Some(b.best_pump);
    }
}

#[test]
fn single_photon_detection_is_optimal_with_good_general_transmission() {
    for v_r in [0.8, 0.9, 0.99] {
        for v_d in [0.8, 0.9, 0.98] {
            let outcomes = strategy_scan(&spec(v_r, 0.86, v_d, 1), &quick(), Mode::PerUnit, 40, 1e-3).unwrap();
            let winner = &outcomes[0].strategy;
            assert!(
                matches!(winner.kind(), StrategyKind::AcceptUpTo(1))
                    || (outcomes[0].p1_max - outcomes[1].p1_max) < 1e-4,
                "V_r={v_r} V_D={v_d}: {} wins",
                winner.label()
            );
        }
    }
}

#[test]
fn loss_scaled_reference_is_suboptimal() {
    let spd = DetectionStrategy::spd();
    let lossless = spec(1.0, 1.0, 1.0, 5).with_units(5).unwrap();
    let lossless = MultiplexerSpec { v_t: 1.0, ..lossless };
    let a = optimize_scaled_reference(&lossless, &spd, &quick()).unwrap();
    let b = optimize_uniform(&lossless, &spd, &quick()).unwrap();
    assert!((a.best_p1 - b.best_p1).abs() < 1e-12);

    let base = spec(0.85, 0.85, 0.9, 1);
    let n = find_optimal_n(&base, &spd, &quick(), 60, 1e-3, Mode::PerUnit)
        .unwrap()
        .n_opt;
    let s = base.with_units(n).unwrap();
    let gap = optimize_pump(&s, &spd, &quick(), None).unwrap().best_p1
        - optimize_scaled_reference(&s, &spd, &quick()).unwrap().best_p1;
    assert!(gap > 1e-3, "gap {gap} at N={n}");
}

#[test]
fn loss_scaled_profile_departs_from_the_optimum_late_in_the_chain() {
    let spd = DetectionStrategy::spd();
    let base = spec(0.95, 0.85, 0.9, 1);
    let n = find_optimal_n(&base, &spd, &quick(), 60, 1e-3, Mode::PerUnit)
        .unwrap()
        .n_opt;
    let s = base.with_units(n).unwrap();
    let opt = optimize_pump(&s, &spd, &quick(), None).unwrap().best_pump.into_vec();
    let scaled = optimize_scaled_reference(&s, &spd, &quick())
        .unwrap()
        .best_pump
        .into_vec();
    let rel: Vec<f64> = opt.iter().zip(&scaled).map(|(a, b)| (a - b).abs() / a).collect();
    let head = rel[..3].iter().cloned().fold(0.0, f64::max);
    let tail = rel[n - 3..].iter().cloned().fold(0.0, f64::max);
    assert!(head < 0.1 && tail > 2.0 * head, "relative differences {rel:?}");
}

#[test]
fn simulation_reproduces_the_closed_form_single_unit() {
    let s = MultiplexerSpec::new(0.99, 0.985, 0.98, 1.0, 1).unwrap();
    let pump = PumpProfile::uniform(1, 0.5).unwrap();
    let p1 = 0.5 * (-0.5f64).exp() * 0.98;
    let dist = output_distribution(&s, &pump, &DetectionStrategy::spd(), 10, &TruncationPolicy::default()).unwrap();
    assert!((dist.p(1) - p1).abs() < 1e-12 && (dist.p(0) - (1.0 - p1)).abs() < 1e-12);
    let est = simulate(
        &s,
        &pump,
        &DetectionStrategy::spd(),
        &McSettings {
            trials: 1_000_000,
            ..Default::default()
        },
    )
    .unwrap();
    let sigma = (p1 * (1.0 - p1) / 1e6).sqrt();
    assert!((est.estimates[1] - p1).abs() < 3.0 * sigma);
    assert!(compare(&dist, &est, 3.0).is_empty());
}
