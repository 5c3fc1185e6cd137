//! One-dimensional bounded maximisation and chain-wise coordinate polish.

use crate::objective::SinglePhotonObjective;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarMax {
    pub x: f64,
    pub value: f64,
    pub evaluations: u64,
}

/// Golden-section search for the maximum of `f` on `[lo, hi]`.
pub fn golden_section_max<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, xtol: f64) -> ScalarMax {
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut evaluations = 2;
    while (b - a).abs() > xtol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        evaluations += 1;
    }
    let (x, value) = if fc >= fd { (c, fc) } else { (d, fd) };
    ScalarMax { x, value, evaluations }
}

/// Dense scan of `grid + 1` points followed by golden-section refinement
/// inside the bracket around the best grid point. Endpoints are kept if
/// they beat the interior optimum.
pub fn grid_golden_max<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, grid: usize, xtol: f64) -> ScalarMax {
    let grid = grid.max(2);
    let step = (hi - lo) / grid as f64;
    let mut best_k = 0;
    let mut best = f64::NEG_INFINITY;
    for k in 0..=grid {
        let v = f(lo + step * k as f64);
        if v > best {
            best = v;
            best_k = k;
        }
    }
    let a = lo + step * best_k.saturating_sub(1) as f64;
    let b = (lo + step * (best_k + 1) as f64).min(hi);
    let polished = golden_section_max(&mut f, a, b, xtol);
    let evaluations = grid as u64 + 1 + polished.evaluations;
    if polished.value >= best {
        ScalarMax {
            evaluations,
            ..polished
        }
    } else {
        ScalarMax {
            x: lo + step * best_k as f64,
            value: best,
            evaluations,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineOutcome {
    pub value: f64,
    pub evaluations: u64,
    pub sweeps: usize,
    pub converged: bool,
}

/// Coordinate-wise golden-section polish of a pump profile.
///
/// Units are visited from the last to the first. With the suffix value
/// `R` of the units behind it fixed, unit `n` enters `P_1` only through
/// `t_n(λ) + q_n(λ) R`, so each coordinate step is a scalar problem that
/// does not depend on the units in front of it. A coordinate is only
/// replaced when the new value is at least as good.
pub fn refine_profile(
    objective: &SinglePhotonObjective,
    lambdas: &mut [f64],
    lower: f64,
    upper: f64,
    tolerance: f64,
    max_sweeps: usize,
) -> RefineOutcome {
    let mut evaluations = 0;
    let mut value = objective.evaluate(lambdas);
    for sweep in 1..=max_sweeps {
        let mut suffix = 0.0;
        for unit in (0..lambdas.len()).rev() {
            let local = |lambda: f64| {
                let t = objective.unit_terms(unit, lambda);
                t.deliver_one + t.fail * suffix
            };
            let current = local(lambdas[unit]);
            let best = grid_golden_max(local, lower, upper, 40, 1e-10);
            evaluations += best.evaluations + 1;
            if best.value > current {
                lambdas[unit] = best.x;
                suffix = best.value;
            } else {
                suffix = current;
            }
        }
        let improvement = suffix - value;
        value = suffix;
        if improvement <= tolerance {
            return RefineOutcome {
                value,
                evaluations,
                sweeps: sweep,
                converged: true,
            };
        }
    }
    RefineOutcome {
        value,
        evaluations,
        sweeps: max_sweeps,
        converged: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_section_finds_interior_maximum() {
        let r = golden_section_max(|x| x * (-x).exp(), 0.0, 5.0, 1e-10);
        assert!((r.x - 1.0).abs() < 1e-8);
        assert!((r.value - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn grid_search_handles_boundary_and_multimodal_functions() {
        let r = grid_golden_max(|x| x, 0.0, 2.0, 10, 1e-10);
        assert!((r.x - 2.0).abs() < 1e-8);
        // two bumps, the right one higher
        let f = |x: f64| (-(x - 1.0).powi(2) * 20.0).exp() + 1.5 * (-(x - 3.0).powi(2) * 20.0).exp();
        let r = grid_golden_max(f, 0.0, 4.0, 40, 1e-10);
        assert!((r.x - 3.0).abs() < 1e-4);
    }
}
