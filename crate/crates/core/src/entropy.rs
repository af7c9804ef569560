//! Binary entropy and the two-state entropy function `g`.
//!
//! All entropies are in bits. `g(p, γ)` is the von Neumann entropy of the
//! mixture `p |ψ0⟩⟨ψ0| + (1-p) |ψ1⟩⟨ψ1|` of two pure states with
//! `|⟨ψ0|ψ1⟩| = γ`; it vanishes at `γ = 1`, is nonincreasing and concave
//! in `γ`, and symmetric under `p -> 1 - p`.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Slack allowed when validating values that should lie in `[0, 1]`.
pub const DOMAIN_TOL: f64 = 1e-12;

fn unit_interval(what: &'static str, value: f64) -> Result<f64> {
    if value.is_nan() || value < -DOMAIN_TOL || value > 1.0 + DOMAIN_TOL {
        return Err(Error::Domain {
            what,
            value,
            domain: "[0, 1]",
        });
    }
    Ok(value.clamp(0.0, 1.0))
}

/// A probability in `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Probability(f64);

impl Probability {
    pub const HALF: Probability = Probability(0.5);

    /// Values within [`DOMAIN_TOL`] of the interval are clamped onto it.
    pub fn new(value: f64) -> Result<Self> {
        unit_interval("probability", value).map(Self)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn complement(self) -> Self {
        Self(1.0 - self.0)
    }
}

impl TryFrom<f64> for Probability {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

/// Modulus of an inner product between two unit vectors.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Overlap(f64);

impl Overlap {
    pub const ZERO: Overlap = Overlap(0.0);
    pub const ONE: Overlap = Overlap(1.0);

    pub fn new(value: f64) -> Result<Self> {
        unit_interval("overlap", value).map(Self)
    }

    /// Clamps into `[0, 1]` without validation. NaN maps to 0.
    pub fn saturating(value: f64) -> Self {
        if value.is_nan() {
            Self(0.0)
        } else {
            Self(value.clamp(0.0, 1.0))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Overlap {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<Overlap> for f64 {
    fn from(o: Overlap) -> f64 {
        o.0
    }
}

/// `h(z) = -z log2 z - (1 - z) log2 (1 - z)`, with `0 log 0 = 0`.
pub fn binary_entropy(z: Probability) -> f64 {
    h2(z.0)
}

/// `g(p, γ) = h[1/2 - 1/2 sqrt(1 - 4 p (1-p) (1 - γ²))]`.
pub fn g_function(p: Probability, gamma: Overlap) -> f64 {
    g_from_spread(4.0 * p.0 * (1.0 - p.0), gamma.0)
}

/// Unchecked binary entropy for hot loops; `z` must already lie in `[0, 1]`.
#[inline]
pub(crate) fn h2(z: f64) -> f64 {
    if z <= 0.0 || z >= 1.0 {
        return 0.0;
    }
    // (1 - z) ln(1 - z) through ln_1p keeps precision for small z.
    -(z * z.ln() + (1.0 - z) * (-z).ln_1p()) / LN_2
}

/// `g` expressed through `spread = 4 p (1 - p)`, which integrands cache
/// per node. Uses `1/2 - 1/2 sqrt(1 - a) = a / (2 (1 + sqrt(1 - a)))` to
/// avoid cancellation when `a` is small.
#[inline]
pub(crate) fn g_from_spread(spread: f64, gamma: f64) -> f64 {
    let a = (spread * (1.0 - gamma) * (1.0 + gamma)).clamp(0.0, 1.0);
    let z = a / (2.0 * (1.0 + (1.0 - a).sqrt()));
    h2(z)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(v: f64) -> Probability {
        Probability::new(v).unwrap()
    }

    fn o(v: f64) -> Overlap {
        Overlap::new(v).unwrap()
    }

    #[test]
    fn binary_entropy_reference_values() {
        assert_eq!(binary_entropy(p(0.5)), 1.0);
        assert_eq!(binary_entropy(p(0.0)), 0.0);
        assert_eq!(binary_entropy(p(1.0)), 0.0);
        // 40-digit mpmath evaluation of the defining formula.
        assert!((binary_entropy(p(0.11)) - 0.499_915_958_164_527_995_6).abs() < 1e-12);
        assert!((binary_entropy(p(0.25)) - 0.811_278_124_459_132_863_9).abs() < 1e-12);
    }

    #[test]
    fn binary_entropy_matches_naive_formula() {
        for i in 1..1000 {
            let z = i as f64 / 1000.0;
            let naive = -z * z.log2() - (1.0 - z) * (1.0 - z).log2();
            assert!((binary_entropy(p(z)) - naive).abs() < 1e-12, "z = {z}");
        }
    }

    #[test]
    fn domain_errors() {
        assert!(Probability::new(-1e-6).is_err());
        assert!(Probability::new(1.0 + 1e-6).is_err());
        assert!(Probability::new(f64::NAN).is_err());
        assert_eq!(Probability::new(-1e-13).unwrap().value(), 0.0);
        assert!(Overlap::new(1.5).is_err());
        assert_eq!(Overlap::new(1.0 + 5e-13).unwrap().value(), 1.0);
    }

    #[test]
    fn g_vanishes_at_unit_overlap() {
        for i in 0..=100 {
            assert_eq!(g_function(p(i as f64 / 100.0), Overlap::ONE), 0.0);
        }
    }

    #[test]
    fn g_at_half_reduces_to_binary_entropy() {
        for i in 0..=100 {
            let gamma = i as f64 / 100.0;
            let expected = binary_entropy(p((1.0 - gamma) / 2.0));
            assert!((g_function(Probability::HALF, o(gamma)) - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn g_of_deterministic_posterior_is_zero() {
        assert_eq!(g_function(p(0.0), o(0.3)), 0.0);
        assert_eq!(g_function(p(1.0), o(0.3)), 0.0);
    }

    #[test]
    fn g_at_zero_overlap_is_binary_entropy() {
        for i in 0..=100 {
            let q = i as f64 / 100.0;
            assert!((g_function(p(q), Overlap::ZERO) - binary_entropy(p(q))).abs() < 1e-12);
        }
    }

    #[test]
    fn g_matches_unstabilised_formula() {
        for i in 0..=50 {
            for j in 0..=50 {
                let (q, gamma) = (i as f64 / 50.0, j as f64 / 50.0);
                let arg = 0.5
                    - 0.5
                        * (1.0 - 4.0 * q * (1.0 - q) * (1.0 - gamma * gamma))
                            .max(0.0)
                            .sqrt();
                let naive = h2(arg);
                assert!((g_function(p(q), o(gamma)) - naive).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn g_is_symmetric_in_p() {
        for i in 0..=100 {
            for j in 0..=20 {
                let (q, gamma) = (i as f64 / 100.0, j as f64 / 20.0);
                let a = g_function(p(q), o(gamma));
                let b = g_function(p(1.0 - q), o(gamma));
                assert!((a - b).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn g_is_monotone_and_concave_on_grid() {
        let n = 100;
        for i in 0..n {
            let q = (i as f64 + 0.5) / n as f64;
            let values: Vec<f64> = (0..=n)
                .map(|j| g_function(p(q), o(j as f64 / n as f64)))
                .collect();
            for w in values.windows(2) {
                assert!(w[1] <= w[0] + 1e-9);
            }
            for w in values.windows(3) {
                assert!(w[0] - 2.0 * w[1] + w[2] <= 1e-9);
            }
        }
    }

    #[test]
    fn squared_g_over_variance_peaks_at_half() {
        for j in 0..100 {
            let gamma = j as f64 / 100.0;
            let closed = 4.0 * g_function(Probability::HALF, o(gamma)).powi(2);
            let sup = (1..1000)
                .map(|i| {
                    let q = i as f64 / 1000.0;
                    g_function(p(q), o(gamma)).powi(2) / (q * (1.0 - q))
                })
                .fold(f64::MIN, f64::max);
            assert!(sup <= closed + 1e-9, "gamma = {gamma}: {sup} > {closed}");
            assert!((sup - closed).abs() < 1e-9);
        }
    }
}
