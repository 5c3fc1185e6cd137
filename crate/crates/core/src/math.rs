//! Binomial and factorial helpers.

/// Above this count binomial coefficients are formed in log space.
const EXACT_BINOMIAL_LIMIT: u64 = 30;

use std::sync::OnceLock;

const LN_FACTORIAL_TABLE: usize = 1024;

pub(crate) fn ln_factorial(n: u64) -> f64 {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        let mut t = Vec::with_capacity(LN_FACTORIAL_TABLE);
        let mut acc = 0.0;
        t.push(0.0);
        for k in 1..LN_FACTORIAL_TABLE {
            acc += (k as f64).ln();
            t.push(acc);
        }
        t
    });
    match table.get(n as usize) {
        Some(&v) => v,
        None => table[LN_FACTORIAL_TABLE - 1] + (LN_FACTORIAL_TABLE as u64..=n).map(|k| (k as f64).ln()).sum::<f64>(),
    }
}

pub(crate) fn choose(n: u64, k: u64) -> f64 {
    debug_assert!(k <= n);
    let k = k.min(n - k);
    (1..=k).fold(1.0, |acc, i| acc * (n - k + i) as f64 / i as f64)
}

/// `C(n, k) p^k (1-p)^(n-k)`, zero for `k > n`.
pub(crate) fn binomial_pmf(k: u64, n: u64, p: f64) -> f64 {
    if k > n {
        return 0.0;
    }
    if p <= 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if p >= 1.0 {
        return if k == n { 1.0 } else { 0.0 };
    }
    if n <= EXACT_BINOMIAL_LIMIT {
        choose(n, k) * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)
    } else {
        let ln_c = ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k);
        (ln_c + k as f64 * p.ln() + (n - k) as f64 * (-p).ln_1p()).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exact_and_log_space_agree_at_the_boundary() {
        for n in [30u64, 31, 60] {
            let total: f64 = (0..=n).map(|k| binomial_pmf(k, n, 0.37)).sum();
            assert_relative_eq!(total, 1.0, epsilon = 1e-12);
        }
        // C(31, 7) computed exactly vs through logs
        let exact = choose(31, 7) * 0.2f64.powi(7) * 0.8f64.powi(24);
        assert_relative_eq!(binomial_pmf(7, 31, 0.2), exact, max_relative = 1e-12);
    }

    #[test]
    fn log_factorial_table_and_tail_agree() {
        let direct = |n: u64| (2..=n).map(|k| (k as f64).ln()).sum::<f64>();
        for n in [0u64, 1, 5, 170, 1023, 1024, 1500] {
            assert_relative_eq!(ln_factorial(n), direct(n), max_relative = 1e-13);
        }
    }

    #[test]
    fn edge_probabilities() {
        assert_eq!(binomial_pmf(0, 5, 0.0), 1.0);
        assert_eq!(binomial_pmf(2, 5, 0.0), 0.0);
        assert_eq!(binomial_pmf(5, 5, 1.0), 1.0);
        assert_eq!(binomial_pmf(4, 5, 1.0), 0.0);
        assert_eq!(binomial_pmf(6, 5, 0.5), 0.0);
    }
}
