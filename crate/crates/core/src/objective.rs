//! Fast evaluation of `P_1` for repeated calls with varying pump profiles.
//!
//! `P_1` factorises along the priority chain,
//! `P_1 = t_1 + q_1 (t_2 + q_2 (t_3 + ...))`, where unit `n` contributes its
//! single-photon delivery probability `t_n(λ_n)` and its failure-to-herald
//! probability `q_n(λ_n)`. Both are sums over the pair number against
//! weights that depend only on the arm and strategy, so they are tabulated
//! once per (spec, strategy).

use crate::error::Result;
use crate::stats::{DetectionStrategy, TruncationPolicy};
use crate::topology::{MultiplexerSpec, SourceFamily};

#[derive(Debug, Clone)]
pub struct SinglePhotonObjective {
    family: SourceFamily,
    trunc: TruncationPolicy,
    /// `Σ_{j∈S} P(j|l)` for `l = 0..=l_hard_cap`.
    acceptance: Vec<f64>,
    /// Per arm: `acceptance[l] * l V_n (1 - V_n)^(l-1)`.
    delivery: Vec<Vec<f64>>,
    arms: Vec<f64>,
}

/// Contribution of one unit with a given mean photon number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitTerms {
    /// Probability the unit heralds and delivers exactly one photon.
    pub deliver_one: f64,
    /// Probability the unit does not herald with an accepted count.
    pub fail: f64,
}

impl SinglePhotonObjective {
    pub fn new(spec: &MultiplexerSpec, strategy: &DetectionStrategy, trunc: &TruncationPolicy) -> Result<Self> {
        spec.validate()?;
        trunc.validate()?;
        let acceptance: Vec<f64> = (0..=trunc.l_hard_cap as u64)
            .map(|l| strategy.acceptance(spec.v_d, l))
            .collect();
        let arms = spec.transmission_vector();
        let delivery = arms
            .iter()
            .map(|&v| {
                acceptance
                    .iter()
                    .enumerate()
                    .map(|(l, a)| {
                        if l == 0 {
                            0.0
                        } else {
                            a * l as f64 * v * (1.0 - v).powi(l as i32 - 1)
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(SinglePhotonObjective {
            family: spec.source,
            trunc: *trunc,
            acceptance,
            delivery,
            arms,
        })
    }

    pub fn n_units(&self) -> usize {
        self.arms.len()
    }

    pub fn arms(&self) -> &[f64] {
        &self.arms
    }

    /// `t_n` and `q_n` of unit `unit` (0-based). Negative `lambda` is
    /// treated as zero.
    pub fn unit_terms(&self, unit: usize, lambda: f64) -> UnitTerms {
        let lambda = lambda.max(0.0);
        if lambda == 0.0 {
            return UnitTerms {
                deliver_one: 0.0,
                fail: 1.0,
            };
        }
        let delivery = &self.delivery[unit];
        let (mut p, ratio) = match self.family {
            SourceFamily::Poisson => ((-lambda).exp(), lambda),
            SourceFamily::Thermal => (1.0 / (1.0 + lambda), lambda / (1.0 + lambda)),
        };
        let mut cumulative = 0.0;
        let mut deliver = 0.0;
        let mut accept = 0.0;
        #[allow(clippy::needless_range_loop)]
        for l in 0..=self.trunc.l_hard_cap {
            cumulative += p;
            deliver += p * delivery[l];
            accept += p * self.acceptance[l];
            let tail = match self.family {
                SourceFamily::Poisson => 1.0 - cumulative,
                SourceFamily::Thermal => ratio.powi(l as i32 + 1),
            };
            if tail < self.trunc.tail_epsilon {
                break;
            }
            p *= match self.family {
                SourceFamily::Poisson => ratio / (l + 1) as f64,
                SourceFamily::Thermal => ratio,
            };
        }
        UnitTerms {
            deliver_one: deliver,
            fail: 1.0 - accept,
        }
    }

    /// `P_1` for the given per-unit mean photon numbers.
    pub fn evaluate(&self, lambdas: &[f64]) -> f64 {
        debug_assert_eq!(lambdas.len(), self.n_units());
        let mut prefix = 1.0;
        let mut total = 0.0;
        for (unit, &lambda) in lambdas.iter().enumerate() {
            let terms = self.unit_terms(unit, lambda);
            total += prefix * terms.deliver_one;
            prefix *= terms.fail;
            if prefix == 0.0 {
                break;
            }
        }
        total
    }

    /// `P_1` with every unit at the same mean photon number.
    pub fn evaluate_uniform(&self, lambda: f64) -> f64 {
        let mut prefix = 1.0;
        let mut total = 0.0;
        for unit in 0..self.n_units() {
            let terms = self.unit_terms(unit, lambda);
            total += prefix * terms.deliver_one;
            prefix *= terms.fail;
        }
        total
    }
}
