//! Entropy-gated fast/deep routing for the initial verdict.
//!
//! The two-class distribution over {real, fake} at the impression token is
//! summarized by its binary entropy (in bits, so the range is [0, 1]). A
//! confident impression (entropy at or below the threshold `tau`) is
//! returned directly; an uncertain one routes the sample to the full
//! reflective transcript. Ties at exactly `tau` stay on the fast path.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::verdict::Verdict;

/// Default entropy threshold in bits.
pub const DEFAULT_TAU: f64 = 0.96;
/// Default probability cut for calling the fast verdict "fake".
pub const DEFAULT_FAKE_THRESHOLD: f64 = 0.58;

/// Bisection tolerance used by [`entropy_band`].
const BAND_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GateError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("missing log-probability candidate for {0}")]
    MissingCandidate(Verdict),
    #[error("non-finite log-probability {0}")]
    NonFinite(f64),
}

/// Renormalized two-class probability over {real, fake}.
///
/// Stores only the fake mass; the real mass is its complement by
/// construction, so the two always sum to exactly one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(transparent)]
pub struct AnswerDistribution {
    p_fake: f64,
}

impl<'de> Deserialize<'de> for AnswerDistribution {
    fn deserialize<D>(deserializer: D) -> Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        let p = f64::deserialize(deserializer)?;
        AnswerDistribution::from_p_fake(p).map_err(serde::de::Error::custom)
    }
}

impl AnswerDistribution {
    pub fn from_p_fake(p_fake: f64) -> Result<Self, GateError> {
        if !p_fake.is_finite() {
            return Err(GateError::NonFinite(p_fake));
        }
        if !(0.0..=1.0).contains(&p_fake) {
            return Err(GateError::Domain(format!(
                "p_fake {p_fake} outside [0, 1]"
            )));
        }
        Ok(AnswerDistribution { p_fake })
    }

    pub fn p_fake(&self) -> f64 {
        self.p_fake
    }

    pub fn p_real(&self) -> f64 {
        1.0 - self.p_fake
    }

    /// Probability mass the distribution puts on `verdict`.
    pub fn mass_on(&self, verdict: Verdict) -> f64 {
        match verdict {
            Verdict::Fake => self.p_fake(),
            Verdict::Real => self.p_real(),
        }
    }
}

/// Gating parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateConfig {
    /// Entropy threshold in bits; strictly above it the sample goes deep.
    pub tau: f64,
    /// Fast-path verdict is fake iff `p_fake >= fake_threshold` (inclusive).
    pub fake_threshold: f64,
}

impl Default for GateConfig {
    fn default() -> Self {
        GateConfig {
            tau: DEFAULT_TAU,
            fake_threshold: DEFAULT_FAKE_THRESHOLD,
        }
    }
}

/// Which generation path a sample took.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InferencePath {
    Fast,
    Deep,
}

/// The routing decision together with the entropy that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateDecision {
    pub path: InferencePath,
    pub entropy_bits: f64,
}

/// Binary entropy of the distribution, in bits, with `0·log2(0) = 0`.
/// The result is clamped into [0, 1] to absorb float round-off.
pub fn binary_entropy(dist: &AnswerDistribution) -> f64 {
    fn term(p: f64) -> f64 {
        if p <= 0.0 {
            0.0
        } else {
            p * p.log2()
        }
    }
    let h = -(term(dist.p_fake()) + term(dist.p_real()));
    h.clamp(0.0, 1.0)
}

/// Route a sample: fast iff the entropy is at or below `tau`.
pub fn gate(dist: &AnswerDistribution, cfg: &GateConfig) -> GateDecision {
    let entropy_bits = binary_entropy(dist);
    let path = if entropy_bits > cfg.tau {
        InferencePath::Deep
    } else {
        InferencePath::Fast
    };
    GateDecision { path, entropy_bits }
}

/// Invert the entropy threshold into the open probability band that routes
/// deep: `gate(p) == deep ⇔ p_lo < p_fake < p_hi`, with `p_lo = 1 − p_hi`.
///
/// `p_hi` is the root of `H(p) = tau` in (0.5, 1), found by bisection.
/// Conventions at the edges: `tau = 1` collapses the band to the single
/// point {0.5} (returned as the empty open interval (0.5, 0.5)), and
/// `tau = 0` opens it to (0, 1).
pub fn entropy_band(tau: f64) -> Result<(f64, f64), GateError> {
    if !tau.is_finite() || !(0.0..=1.0).contains(&tau) {
        return Err(GateError::Domain(format!("tau {tau} outside [0, 1]")));
    }
    if tau == 0.0 {
        return Ok((0.0, 1.0));
    }
    if tau == 1.0 {
        return Ok((0.5, 0.5));
    }
    let h = |p: f64| binary_entropy(&AnswerDistribution { p_fake: p });
    let (mut lo, mut hi) = (0.5, 1.0); // H(lo) = 1 >= tau, H(hi) = 0 < tau
    while hi - lo > BAND_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if h(mid) >= tau {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let p_hi = 0.5 * (lo + hi);
    Ok((1.0 - p_hi, p_hi))
}

/// Turn the impression distribution into a verdict. The comparison is
/// inclusive so the operating point itself maps to fake.
pub fn verdict_from(dist: &AnswerDistribution, fake_threshold: f64) -> Verdict {
    if dist.p_fake() >= fake_threshold {
        Verdict::Fake
    } else {
        Verdict::Real
    }
}

/// Renormalize decoder log-probabilities for the two verdict candidates
/// into an [`AnswerDistribution`], subtracting the max before
/// exponentiating for numerical stability.
pub fn extract_distribution(
    candidates: &HashMap<Verdict, f64>,
) -> Result<AnswerDistribution, GateError> {
    let lp_fake = *candidates
        .get(&Verdict::Fake)
        .ok_or(GateError::MissingCandidate(Verdict::Fake))?;
    let lp_real = *candidates
        .get(&Verdict::Real)
        .ok_or(GateError::MissingCandidate(Verdict::Real))?;
    for lp in [lp_fake, lp_real] {
        if !lp.is_finite() {
            return Err(GateError::NonFinite(lp));
        }
    }
    let m = lp_fake.max(lp_real);
    let wf = (lp_fake - m).exp();
    let wr = (lp_real - m).exp();
    AnswerDistribution::from_p_fake(wf / (wf + wr))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(p: f64) -> AnswerDistribution {
        AnswerDistribution::from_p_fake(p).unwrap()
    }

    #[test]
    fn entropy_endpoints() {
        assert_eq!(binary_entropy(&dist(0.5)), 1.0);
        assert_eq!(binary_entropy(&dist(1.0)), 0.0);
        assert_eq!(binary_entropy(&dist(0.0)), 0.0);
    }

    #[test]
    fn entropy_at_point_nine() {
        // -(0.9·log2 0.9 + 0.1·log2 0.1), frozen from a high-precision oracle
        let expected = 0.468_995_593_589_281_2;
        assert!((binary_entropy(&dist(0.9)) - expected).abs() < 1e-6);
    }

    #[test]
    fn gate_routes_by_threshold() {
        let cfg = GateConfig::default();
        assert_eq!(gate(&dist(0.99), &cfg).path, InferencePath::Fast);
        let d = gate(&dist(0.5), &cfg);
        assert_eq!(d.path, InferencePath::Deep);
        assert_eq!(d.entropy_bits, 1.0);
    }

    #[test]
    fn tie_at_tau_is_fast() {
        let (_, p_hi) = entropy_band(DEFAULT_TAU).unwrap();
        let cfg = GateConfig::default();
        // Exactly at the band edge the entropy equals tau to bisection
        // accuracy; nudge outward and inward to pin the strict inequality.
        assert_eq!(gate(&dist(p_hi + 1e-6), &cfg).path, InferencePath::Fast);
        assert_eq!(gate(&dist(p_hi - 1e-6), &cfg).path, InferencePath::Deep);
    }

    #[test]
    fn band_values_match_oracle() {
        let (p_lo, p_hi) = entropy_band(0.96).unwrap();
        assert!((p_hi - 0.617_193_605_569_474_3).abs() < 1e-9);
        assert!((p_lo - (1.0 - p_hi)).abs() < 1e-15);
        let (_, p_hi) = entropy_band(0.5).unwrap();
        assert!((p_hi - 0.889_972_135_561_640_4).abs() < 1e-9);
    }

    #[test]
    fn band_edge_conventions() {
        assert_eq!(entropy_band(0.0).unwrap(), (0.0, 1.0));
        assert_eq!(entropy_band(1.0).unwrap(), (0.5, 0.5));
        assert!(entropy_band(-0.1).is_err());
        assert!(entropy_band(1.1).is_err());
        assert!(entropy_band(f64::NAN).is_err());
    }

    #[test]
    fn verdict_threshold_is_inclusive() {
        assert_eq!(verdict_from(&dist(0.58), 0.58), Verdict::Fake);
        assert_eq!(verdict_from(&dist(0.0), 0.58), Verdict::Real);
        assert_eq!(verdict_from(&dist(0.5), 0.5), Verdict::Fake);
        assert_eq!(verdict_from(&dist(0.579_999_9), 0.58), Verdict::Real);
    }

    #[test]
    fn extraction_renormalizes() {
        let mut c = HashMap::new();
        c.insert(Verdict::Fake, -1.0);
        c.insert(Verdict::Real, -1.0);
        assert_eq!(extract_distribution(&c).unwrap().p_fake(), 0.5);

        c.insert(Verdict::Fake, -1.0);
        c.insert(Verdict::Real, -2.0);
        let p = extract_distribution(&c).unwrap().p_fake();
        assert!((p - 0.731_058_578_630_004_9).abs() < 1e-6);
    }

    #[test]
    fn extraction_rejects_missing_or_nonfinite() {
        let mut c = HashMap::new();
        c.insert(Verdict::Fake, -1.0);
        assert_eq!(
            extract_distribution(&c),
            Err(GateError::MissingCandidate(Verdict::Real))
        );
        c.insert(Verdict::Real, f64::NEG_INFINITY);
        assert!(matches!(
            extract_distribution(&c),
            Err(GateError::NonFinite(_))
        ));
    }
}
