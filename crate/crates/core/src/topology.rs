//! Chained-router geometry of the asymmetric multiplexer.
//!
//! Unit `n` (1-based, ordered by priority) reaches the output through
//! `n - 1` router reflections. Every arm except the last additionally
//! passes the transmission port of one router.

use serde::{Deserialize, Serialize};

use crate::error::{check_probability, invalid, Result};

/// Transmission efficiency of the router's straight-through port used
/// when none is given.
pub const DEFAULT_V_T: f64 = 0.985;

/// Pair-number statistics of the nonlinear sources.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SourceFamily {
    /// Multimode pair generation.
    #[default]
    Poisson,
    /// Single-mode pair generation (geometric photon-number distribution).
    Thermal,
}

impl std::fmt::Display for SourceFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SourceFamily::Poisson => "poisson",
            SourceFamily::Thermal => "thermal",
        })
    }
}

impl std::str::FromStr for SourceFamily {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "poisson" => Ok(SourceFamily::Poisson),
            "thermal" => Ok(SourceFamily::Thermal),
            other => Err(invalid(format!("unknown source family '{other}'"))),
        }
    }
}

/// Loss parameters and size of one multiplexed source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiplexerSpec {
    /// Reflection efficiency of one router.
    pub v_r: f64,
    /// Transmission efficiency of one router.
    pub v_t: f64,
    /// Losses before the multiplexer input.
    pub v_b: f64,
    /// Heralding detector efficiency.
    pub v_d: f64,
    pub n_units: usize,
    #[serde(default)]
    pub source: SourceFamily,
}

impl MultiplexerSpec {
    /// Poisson-source spec; fails if any efficiency leaves `[0, 1]` or `n_units == 0`.
    pub fn new(v_r: f64, v_t: f64, v_b: f64, v_d: f64, n_units: usize) -> Result<Self> {
        let spec = MultiplexerSpec {
            v_r,
            v_t,
            v_b,
            v_d,
            n_units,
            source: SourceFamily::Poisson,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_source(mut self, source: SourceFamily) -> Self {
        self.source = source;
        self
    }

    /// Same losses, different number of units.
    pub fn with_units(&self, n_units: usize) -> Result<Self> {
        let spec = MultiplexerSpec { n_units, ..*self };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        check_probability("v_r", self.v_r)?;
        check_probability("v_t", self.v_t)?;
        check_probability("v_b", self.v_b)?;
        check_probability("v_d", self.v_d)?;
        if self.n_units == 0 {
            return Err(invalid("n_units must be at least 1"));
        }
        Ok(())
    }

    /// Total transmission `V_n` of arm `n` (1-based).
    pub fn arm_transmission(&self, n: usize) -> Result<f64> {
        if n == 0 || n > self.n_units {
            return Err(invalid(format!("arm index {n} outside 1..={}", self.n_units)));
        }
        Ok(self.arm_unchecked(n))
    }

    fn arm_unchecked(&self, n: usize) -> f64 {
        let reflections = self.v_r.powi(n as i32 - 1);
        if n < self.n_units {
            self.v_b * self.v_t * reflections
        } else {
            self.v_b * reflections
        }
    }

    /// `[V_1, ..., V_N]`.
    pub fn transmission_vector(&self) -> Vec<f64> {
        (1..=self.n_units).map(|n| self.arm_unchecked(n)).collect()
    }
}
