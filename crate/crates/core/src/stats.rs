//! Source, detector and loss probability algebra, and the full output
//! photon-number distribution of the multiplexer.
//!
//! The multiplexer admits the signal of the first unit (in priority order)
//! whose heralding count lies in the accepted set `S`. Writing `a_k` for
//! the acceptance probability of unit `k` and `T_n(i)` for the probability
//! that unit `n` is accepted and delivers `i` photons to the output,
//!
//! ```text
//! P_i = δ_{i,0} Π_k (1 - a_k) + Σ_n [Π_{k<n} (1 - a_k)] T_n(i)
//! T_n(i) = Σ_{l≥i} Σ_{j∈S} P(j|l) P_λn(l) V_n(i|l)
//! ```
//!
//! All infinite pair-number sums are cut at the smallest `L` whose source
//! tail mass is below [`TruncationPolicy::tail_epsilon`].

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_probability, invalid, Error, Result};
use crate::math::{binomial_pmf, ln_factorial};
use crate::topology::{MultiplexerSpec, SourceFamily};

/// Largest resolvable heralding count assumed when none is given.
pub const DEFAULT_J_CAP: u32 = 64;

/// Number of output photon counts reported by default.
pub const DEFAULT_I_MAX: usize = 10;

/// Which heralding counts open the multiplexer input.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum StrategyKind {
    /// `S = {1, ..., J}`.
    AcceptUpTo(u32),
    /// Arbitrary nonempty subset of `1..=j_cap`.
    ExplicitSet(BTreeSet<u32>),
    /// `S = Z+`: any click heralds.
    Threshold,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct DetectionStrategy {
    kind: StrategyKind,
    j_cap: u32,
}

impl DetectionStrategy {
    /// Single-photon detection, `S = {1}`.
    pub fn spd() -> Self {
        Self::up_to(1).expect("J = 1 is always valid")
    }

    pub fn threshold() -> Self {
        DetectionStrategy {
            kind: StrategyKind::Threshold,
            j_cap: DEFAULT_J_CAP,
        }
    }

    pub fn up_to(j: u32) -> Result<Self> {
        Self::up_to_with_cap(j, DEFAULT_J_CAP.max(j))
    }

    pub fn up_to_with_cap(j: u32, j_cap: u32) -> Result<Self> {
        if j == 0 || j > j_cap {
            return Err(invalid(format!("J = {j} must lie in 1..={j_cap}")));
        }
        Ok(DetectionStrategy {
            kind: StrategyKind::AcceptUpTo(j),
            j_cap,
        })
    }

    pub fn explicit<I: IntoIterator<Item = u32>>(counts: I) -> Result<Self> {
        let set: BTreeSet<u32> = counts.into_iter().collect();
        let cap = DEFAULT_J_CAP.max(set.last().copied().unwrap_or(0));
        Self::explicit_with_cap(set, cap)
    }

    pub fn explicit_with_cap(set: BTreeSet<u32>, j_cap: u32) -> Result<Self> {
        if set.is_empty() {
            return Err(invalid("accepted-count set is empty"));
        }
        if set.contains(&0) || set.last().is_some_and(|&j| j > j_cap) {
            return Err(invalid(format!("accepted counts must lie in 1..={j_cap}")));
        }
        Ok(DetectionStrategy {
            kind: StrategyKind::ExplicitSet(set),
            j_cap,
        })
    }

    pub fn kind(&self) -> &StrategyKind {
        &self.kind
    }

    pub fn j_cap(&self) -> u32 {
        self.j_cap
    }

    pub fn accepts(&self, j: u64) -> bool {
        match &self.kind {
            StrategyKind::AcceptUpTo(cap) => (1..=*cap as u64).contains(&j),
            StrategyKind::ExplicitSet(set) => u32::try_from(j).is_ok_and(|j| set.contains(&j)),
            StrategyKind::Threshold => j >= 1,
        }
    }

    /// Probability that a unit holding `l` pairs heralds with an accepted
    /// count, `Σ_{j∈S} P(j|l)`.
    pub fn acceptance(&self, v_d: f64, l: u64) -> f64 {
        match &self.kind {
            StrategyKind::Threshold => 1.0 - (1.0 - v_d).powi(l as i32),
            StrategyKind::AcceptUpTo(cap) => (1..=(*cap as u64).min(l)).map(|j| detect_cond_prob(v_d, j, l)).sum(),
            StrategyKind::ExplicitSet(set) => set
                .iter()
                .map(|&j| j as u64)
                .take_while(|&j| j <= l)
                .map(|j| detect_cond_prob(v_d, j, l))
                .sum(),
        }
    }

    /// Short label: `SPD`, `ThD` or `S={1,2}`.
    pub fn label(&self) -> String {
        match &self.kind {
            StrategyKind::Threshold => "ThD".to_string(),
            StrategyKind::AcceptUpTo(1) => "SPD".to_string(),
            StrategyKind::AcceptUpTo(j) => {
                let items: Vec<String> = (1..=*j).map(|k| k.to_string()).collect();
                format!("S={{{}}}", items.join(","))
            }
            StrategyKind::ExplicitSet(set) => {
                if set.len() == 1 && set.contains(&1) {
                    return "SPD".to_string();
                }
                let items: Vec<String> = set.iter().map(|k| k.to_string()).collect();
                format!("S={{{}}}", items.join(","))
            }
        }
    }
}

impl fmt::Display for DetectionStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())?;
        if self.j_cap != DEFAULT_J_CAP && !matches!(self.kind, StrategyKind::Threshold) {
            write!(f, "/Jb={}", self.j_cap)?;
        }
        Ok(())
    }
}

impl FromStr for DetectionStrategy {
    type Err = Error;

    /// Accepts `SPD`, `ThD`/`threshold`, `upto:J`, `J=2`, `S={1,3}`, `{1,3}`
    /// or `set:1,3`, optionally followed by `/Jb=<cap>`.
    fn from_str(s: &str) -> Result<Self> {
        let (body, cap) = match s.split_once("/Jb=") {
            Some((body, cap)) => {
                let cap: u32 = cap
                    .trim()
                    .parse()
                    .map_err(|_| invalid(format!("bad detector cap in '{s}'")))?;
                (body.trim(), Some(cap))
            }
            None => (s.trim(), None),
        };
        let lower = body.to_ascii_lowercase();
        let parse_list = |list: &str| -> Result<BTreeSet<u32>> {
            list.split(',')
                .filter(|t| !t.trim().is_empty())
                .map(|t| {
                    t.trim()
                        .parse::<u32>()
                        .map_err(|_| invalid(format!("bad count '{t}' in strategy '{s}'")))
                })
                .collect()
        };
        let strategy = match lower.as_str() {
            "spd" => Self::up_to_with_cap(1, cap.unwrap_or(DEFAULT_J_CAP))?,
            "thd" | "threshold" => DetectionStrategy::threshold(),
            _ => {
                if let Some(j) = lower.strip_prefix("upto:").or_else(|| lower.strip_prefix("j=")) {
                    let j: u32 = j
                        .trim()
                        .parse()
                        .map_err(|_| invalid(format!("bad J in strategy '{s}'")))?;
                    Self::up_to_with_cap(j, cap.unwrap_or(DEFAULT_J_CAP.max(j)))?
                } else {
                    let list = lower
                        .strip_prefix("set:")
                        .or_else(|| {
                            lower
                                .trim_start_matches("s=")
                                .strip_prefix('{')
                                .and_then(|x| x.strip_suffix('}'))
                        })
                        .ok_or_else(|| invalid(format!("unrecognised strategy '{s}'")))?;
                    let set = parse_list(list)?;
                    let contiguous = set.iter().copied().eq(1..=set.len() as u32);
                    let j_cap = cap.unwrap_or(DEFAULT_J_CAP.max(set.last().copied().unwrap_or(0)));
                    if contiguous && !set.is_empty() {
                        Self::up_to_with_cap(set.len() as u32, j_cap)?
                    } else {
                        Self::explicit_with_cap(set, j_cap)?
                    }
                }
            }
        };
        Ok(strategy)
    }
}

impl TryFrom<String> for DetectionStrategy {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<DetectionStrategy> for String {
    fn from(s: DetectionStrategy) -> String {
        s.to_string()
    }
}

/// Per-unit input mean photon numbers `λ_1..λ_N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PumpProfile(Vec<f64>);

impl PumpProfile {
    pub fn new(lambdas: Vec<f64>) -> Result<Self> {
        if lambdas.is_empty() {
            return Err(invalid("pump profile is empty"));
        }
        if let Some(bad) = lambdas.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
            return Err(invalid(format!("mean photon number {bad} is negative or not finite")));
        }
        Ok(PumpProfile(lambdas))
    }

    pub fn uniform(n_units: usize, lambda: f64) -> Result<Self> {
        Self::new(vec![lambda; n_units])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Appends a copy of the last unit's value.
    pub fn extended(&self) -> Self {
        let mut v = self.0.clone();
        v.push(*v.last().expect("nonempty profile"));
        PumpProfile(v)
    }
}

impl TryFrom<Vec<f64>> for PumpProfile {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        PumpProfile::new(v)
    }
}

impl From<PumpProfile> for Vec<f64> {
    fn from(p: PumpProfile) -> Vec<f64> {
        p.0
    }
}

/// Cutoff rule for the infinite pair-number sums.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    pub tail_epsilon: f64,
    pub l_hard_cap: usize,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy {
            tail_epsilon: 1e-12,
            l_hard_cap: 400,
        }
    }
}

impl TruncationPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.tail_epsilon > 0.0 && self.tail_epsilon < 1e-6) {
            return Err(invalid(format!(
                "tail_epsilon = {} must lie in (0, 1e-6)",
                self.tail_epsilon
            )));
        }
        if self.l_hard_cap < 50 {
            return Err(invalid(format!("l_hard_cap = {} must be at least 50", self.l_hard_cap)));
        }
        Ok(())
    }

    /// Smallest `L` with `P(l > L) < tail_epsilon`, together with the
    /// pair-number probabilities `P(0..=L)` and the remaining tail mass.
    pub fn truncated_source(&self, family: SourceFamily, lambda: f64) -> Result<TruncatedSource> {
        check_lambda(lambda)?;
        let mut probs = Vec::with_capacity(32);
        let mut cumulative = 0.0;
        for l in 0..=self.l_hard_cap as u64 {
            let p = pair_gen_prob_unchecked(family, lambda, l);
            probs.push(p);
            cumulative += p;
            let tail = source_tail(family, lambda, l, cumulative);
            if tail < self.tail_epsilon {
                return Ok(TruncatedSource { probs, tail });
            }
        }
        Err(Error::Truncation {
            tail: source_tail(family, lambda, self.l_hard_cap as u64, cumulative),
            epsilon: self.tail_epsilon,
            cap: self.l_hard_cap,
        })
    }
}

/// Pair-number probabilities up to the cutoff.
#[derive(Debug, Clone)]
pub struct TruncatedSource {
    /// `P(l)` for `l = 0..=L`.
    pub probs: Vec<f64>,
    /// `P(l > L)`.
    pub tail: f64,
}

impl TruncatedSource {
    pub fn cutoff(&self) -> usize {
        self.probs.len() - 1
    }
}

/// Tail mass beyond `l`; exact for the thermal case.
fn source_tail(family: SourceFamily, lambda: f64, l: u64, cumulative: f64) -> f64 {
    match family {
        SourceFamily::Poisson => (1.0 - cumulative).max(0.0),
        SourceFamily::Thermal => (lambda / (1.0 + lambda)).powi(l as i32 + 1),
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda.is_finite() && lambda >= 0.0 {
        Ok(())
    } else {
        Err(invalid(format!(
            "mean photon number {lambda} is negative or not finite"
        )))
    }
}

/// Probability that a source with mean pair number `lambda` emits `l` pairs.
pub fn pair_gen_prob(family: SourceFamily, lambda: f64, l: u64) -> Result<f64> {
    check_lambda(lambda)?;
    Ok(pair_gen_prob_unchecked(family, lambda, l))
}

fn pair_gen_prob_unchecked(family: SourceFamily, lambda: f64, l: u64) -> f64 {
    if lambda == 0.0 {
        return if l == 0 { 1.0 } else { 0.0 };
    }
    match family {
        SourceFamily::Poisson => (l as f64 * lambda.ln() - lambda - ln_factorial(l)).exp(),
        SourceFamily::Thermal => {
            let r = lambda / (1.0 + lambda);
            r.powi(l as i32) / (1.0 + lambda)
        }
    }
}

/// `P(j|l)`: the detector registers `j` of the `l` idler photons.
pub fn detect_cond_prob(v_d: f64, j: u64, l: u64) -> f64 {
    binomial_pmf(j, l, v_d)
}

/// `V_n(i|l)`: `i` of `l` signal photons survive arm transmission `v_n`.
pub fn transmit_cond_prob(v_n: f64, i: u64, l: u64) -> f64 {
    binomial_pmf(i, l, v_n)
}

/// Total probability of registering exactly `j` heralding photons.
pub fn detect_total_prob(family: SourceFamily, lambda: f64, v_d: f64, j: u64, trunc: &TruncationPolicy) -> Result<f64> {
    check_probability("v_d", v_d)?;
    let source = trunc.truncated_source(family, lambda)?;
    Ok(source
        .probs
        .iter()
        .enumerate()
        .skip(j as usize)
        .map(|(l, p)| detect_cond_prob(v_d, j, l as u64) * p)
        .sum())
}

/// Output photon-number distribution `P_0..P_{i_max}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputDistribution {
    pub probs: Vec<f64>,
    pub i_max: usize,
    /// Probability of more than `i_max` photons at the output.
    pub truncation_mass: f64,
    /// Upper bound on the probability ignored by cutting the pair-number sums.
    pub source_tail_bound: f64,
}

impl OutputDistribution {
    pub fn p(&self, i: usize) -> f64 {
        self.probs.get(i).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum::<f64>() + self.truncation_mass
    }
}

/// Evaluates the full output distribution of the multiplexer.
pub fn output_distribution(
    spec: &MultiplexerSpec,
    pump: &PumpProfile,
    strategy: &DetectionStrategy,
    i_max: usize,
    trunc: &TruncationPolicy,
) -> Result<OutputDistribution> {
    spec.validate()?;
    trunc.validate()?;
    if pump.len() != spec.n_units {
        return Err(invalid(format!(
            "pump profile has {} entries but the multiplexer has {} units",
            pump.len(),
            spec.n_units
        )));
    }
    if i_max == 0 {
        return Err(invalid("i_max must be at least 1"));
    }

    let arms = spec.transmission_vector();
    let mut acceptance_by_l: Vec<f64> = Vec::new();
    let mut probs = vec![0.0; i_max + 1];
    let mut beyond = 0.0;
    let mut tail_bound = 0.0;
    // probability that every higher-priority unit failed to herald
    let mut prefix = 1.0;

    for (&lambda, &v_n) in pump.as_slice().iter().zip(&arms) {
        let source = trunc.truncated_source(spec.source, lambda)?;
        while acceptance_by_l.len() <= source.cutoff() {
            let l = acceptance_by_l.len() as u64;
            acceptance_by_l.push(strategy.acceptance(spec.v_d, l));
        }

        let mut accepted = 0.0;
        let mut delivered = 0.0;
        for (l, &p_l) in source.probs.iter().enumerate() {
            let weight = p_l * acceptance_by_l[l];
            if weight == 0.0 {
                continue;
            }
            accepted += weight;
            for (i, slot) in probs.iter_mut().enumerate().take(l.min(i_max) + 1) {
                let t = prefix * weight * transmit_cond_prob(v_n, i as u64, l as u64);
                *slot += t;
                delivered += t;
            }
        }
        beyond += (prefix * accepted - delivered).max(0.0);
        tail_bound += prefix * source.tail;
        prefix *= 1.0 - accepted;
    }
    probs[0] += prefix;

    Ok(OutputDistribution {
        probs,
        i_max,
        truncation_mass: beyond,
        source_tail_bound: tail_bound,
    })
}

/// `P_1` of the multiplexer under the default truncation policy.
pub fn single_photon_prob(spec: &MultiplexerSpec, pump: &PumpProfile, strategy: &DetectionStrategy) -> Result<f64> {
    single_photon_prob_with(spec, pump, strategy, &TruncationPolicy::default())
}

pub fn single_photon_prob_with(
    spec: &MultiplexerSpec,
    pump: &PumpProfile,
    strategy: &DetectionStrategy,
    trunc: &TruncationPolicy,
) -> Result<f64> {
    Ok(output_distribution(spec, pump, strategy, 1, trunc)?.probs[1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn trunc() -> TruncationPolicy {
        TruncationPolicy::default()
    }

    #[test]
    fn pair_generation_examples() {
        let p = pair_gen_prob(SourceFamily::Poisson, 1.0, 0).unwrap();
        assert_abs_diff_eq!(p, (-1.0f64).exp(), epsilon = 1e-15);
        assert_eq!(pair_gen_prob(SourceFamily::Poisson, 0.0, 0).unwrap(), 1.0);
        assert_eq!(pair_gen_prob(SourceFamily::Poisson, 0.0, 3).unwrap(), 0.0);
        assert_abs_diff_eq!(
            pair_gen_prob(SourceFamily::Thermal, 1.0, 2).unwrap(),
            0.125,
            epsilon = 1e-15
        );
        assert!(pair_gen_prob(SourceFamily::Poisson, -0.1, 0).is_err());
        assert!(pair_gen_prob(SourceFamily::Thermal, -1.0, 0).is_err());
    }

    #[test]
    fn detection_examples() {
        assert_abs_diff_eq!(detect_cond_prob(0.98, 1, 1), 0.98, epsilon = 1e-15);
        assert_abs_diff_eq!(detect_cond_prob(0.9, 1, 2), 0.18, epsilon = 1e-15);
        assert_eq!(detect_cond_prob(0.9, 3, 2), 0.0);

        let t = trunc();
        let p = detect_total_prob(SourceFamily::Poisson, 0.5, 1.0, 1, &t).unwrap();
        assert_abs_diff_eq!(p, 0.5 * (-0.5f64).exp(), epsilon = 1e-12);
        let p = detect_total_prob(SourceFamily::Poisson, 0.5, 0.9, 1, &t).unwrap();
        assert_abs_diff_eq!(p, 0.45 * (-0.45f64).exp(), epsilon = 1e-12);
        assert_abs_diff_eq!(p, 0.286933, epsilon = 1e-6);
        for family in [SourceFamily::Poisson, SourceFamily::Thermal] {
            assert_eq!(detect_total_prob(family, 0.0, 0.9, 1, &t).unwrap(), 0.0);
        }
    }

    #[test]
    fn transmission_examples() {
        assert_eq!(transmit_cond_prob(1.0, 3, 3), 1.0);
        assert_abs_diff_eq!(transmit_cond_prob(0.5, 1, 2), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(transmit_cond_prob(0.32768, 0, 1), 0.67232, epsilon = 1e-12);
        assert_eq!(transmit_cond_prob(0.5, 3, 2), 0.0);
    }

    #[test]
    fn truncation_policy_bounds() {
        assert!(TruncationPolicy {
            tail_epsilon: 1e-5,
            l_hard_cap: 400
        }
        .validate()
        .is_err());
        assert!(TruncationPolicy {
            tail_epsilon: 0.0,
            l_hard_cap: 400
        }
        .validate()
        .is_err());
        assert!(TruncationPolicy {
            tail_epsilon: 1e-12,
            l_hard_cap: 49
        }
        .validate()
        .is_err());

        let t = trunc();
        let src = t.truncated_source(SourceFamily::Poisson, 1.0).unwrap();
        assert!(src.tail < 1e-12);
        assert!((10..=25).contains(&src.cutoff()));
        assert_eq!(t.truncated_source(SourceFamily::Poisson, 0.0).unwrap().cutoff(), 0);

        // thermal tail at large λ runs into the cap
        let tight = TruncationPolicy {
            tail_epsilon: 1e-12,
            l_hard_cap: 50,
        };
        let err = tight.truncated_source(SourceFamily::Thermal, 5.0).unwrap_err();
        assert!(matches!(err, Error::Truncation { cap: 50, .. }));
    }

    #[test]
    fn strategy_parsing_and_labels() {
        assert_eq!("SPD".parse::<DetectionStrategy>().unwrap(), DetectionStrategy::spd());
        assert_eq!(
            "thd".parse::<DetectionStrategy>().unwrap(),
            DetectionStrategy::threshold()
        );
        let s12: DetectionStrategy = "S={1,2}".parse().unwrap();
        assert_eq!(s12, DetectionStrategy::up_to(2).unwrap());
        assert_eq!(s12.label(), "S={1,2}");
        let gap: DetectionStrategy = "{1,3}".parse().unwrap();
        assert!(matches!(gap.kind(), StrategyKind::ExplicitSet(_)));
        assert_eq!(gap.to_string(), "S={1,3}");
        let capped: DetectionStrategy = "upto:2/Jb=4".parse().unwrap();
        assert_eq!(capped.j_cap(), 4);
        assert_eq!(capped.to_string().parse::<DetectionStrategy>().unwrap(), capped);

        assert!(DetectionStrategy::up_to(0).is_err());
        assert!(DetectionStrategy::up_to_with_cap(5, 4).is_err());
        assert!(DetectionStrategy::explicit([]).is_err());
        assert!(DetectionStrategy::explicit([0, 1]).is_err());
        assert!("S={1,9}/Jb=4".parse::<DetectionStrategy>().is_err());
        assert!("bogus".parse::<DetectionStrategy>().is_err());
    }

    #[test]
    fn acceptance_matches_set_definition() {
        let v_d = 0.85;
        let up_to = DetectionStrategy::up_to(3).unwrap();
        let set = DetectionStrategy::explicit_with_cap([1, 2, 3].into(), 64).unwrap();
        for l in 0..20 {
            assert_abs_diff_eq!(up_to.acceptance(v_d, l), set.acceptance(v_d, l), epsilon = 1e-15);
        }
        let th = DetectionStrategy::threshold();
        let all = DetectionStrategy::up_to(64).unwrap();
        for l in 0..40 {
            assert_abs_diff_eq!(th.acceptance(v_d, l), all.acceptance(v_d, l), epsilon = 1e-13);
        }
    }

    #[test]
    fn vacuum_input_gives_vacuum_output() {
        let spec = MultiplexerSpec::new(0.9, 0.985, 0.9, 0.9, 1).unwrap();
        let pump = PumpProfile::uniform(1, 0.0).unwrap();
        for strategy in [DetectionStrategy::spd(), DetectionStrategy::threshold()] {
            let d = output_distribution(&spec, &pump, &strategy, 10, &trunc()).unwrap();
            assert_eq!(d.probs[0], 1.0);
            assert!(d.probs[1..].iter().all(|&p| p == 0.0));
            assert_eq!(single_photon_prob(&spec, &pump, &strategy).unwrap(), 0.0);
        }
    }

    #[test]
    fn perfect_detector_closed_form() {
        let spec = MultiplexerSpec::new(0.99, 0.985, 0.98, 1.0, 1).unwrap();
        let pump = PumpProfile::uniform(1, 0.5).unwrap();
        let d = output_distribution(&spec, &pump, &DetectionStrategy::spd(), 10, &trunc()).unwrap();
        let p1 = 0.5 * (-0.5f64).exp() * 0.98;
        assert_abs_diff_eq!(d.probs[1], p1, epsilon = 1e-12);
        assert_abs_diff_eq!(d.probs[1], 0.297200, epsilon = 1e-6);
        assert_abs_diff_eq!(d.probs[0], 1.0 - p1, epsilon = 1e-12);
    }

    #[test]
    fn argument_errors() {
        let spec = MultiplexerSpec::new(0.9, 0.985, 0.9, 0.9, 3).unwrap();
        let pump = PumpProfile::uniform(2, 0.5).unwrap();
        let spd = DetectionStrategy::spd();
        assert!(output_distribution(&spec, &pump, &spd, 10, &trunc()).is_err());
        let pump = PumpProfile::uniform(3, 0.5).unwrap();
        assert!(output_distribution(&spec, &pump, &spd, 0, &trunc()).is_err());
        assert!(PumpProfile::new(vec![0.1, -0.2]).is_err());
        assert!(PumpProfile::new(vec![]).is_err());

        let tight = TruncationPolicy {
            tail_epsilon: 1e-12,
            l_hard_cap: 50,
        };
        let thermal = spec.with_source(SourceFamily::Thermal);
        let hot = PumpProfile::uniform(3, 5.0).unwrap();
        assert!(matches!(
            output_distribution(&thermal, &hot, &spd, 10, &tight),
            Err(Error::Truncation { .. })
        ));
    }

    #[test]
    fn gapped_set_drops_two_photon_heralds() {
        // with a perfect detector, S={1,3} never admits a two-pair event
        let spec = MultiplexerSpec::new(1.0, 1.0, 1.0, 1.0, 1).unwrap();
        let pump = PumpProfile::uniform(1, 0.7).unwrap();
        let gap = DetectionStrategy::explicit([1, 3]).unwrap();
        let d = output_distribution(&spec, &pump, &gap, 10, &trunc()).unwrap();
        let pois = |k: i32| 0.7f64.powi(k) * (-0.7f64).exp() / [1.0, 1.0, 2.0, 6.0][k as usize];
        assert_abs_diff_eq!(d.probs[1], pois(1), epsilon = 1e-12);
        assert_eq!(d.probs[2], 0.0);
        assert_abs_diff_eq!(d.probs[3], pois(3), epsilon = 1e-12);
    }
}
