//! From observed moments to the intervals that constrain the adversary.
//!
//! The second moments bound the mixedness `ε_x` of Bob's conditional
//! states; the first moments fix the reference overlap `κ`. Together with
//! the interior parameters `(ε_x, ε̃_x)` they bound the overlap of Bob's
//! maximal eigenstates (`[c_l, c_u]`) and then, through conservation of
//! the input overlap, the overlap `γ` of Eve's maximal eigenstates
//! (`[d_l, d_u]`).

use serde::{Deserialize, Serialize};

use crate::entropy::Overlap;
use crate::observation::ObservedStatistics;
use crate::{Error, Result};

/// Slack on squared-root arguments before a point is declared infeasible.
pub const RADICAND_TOL: f64 = 1e-12;
/// Denominators below this are treated as zero.
pub const DENOMINATOR_FLOOR: f64 = 1e-12;
/// Slack on the vacuum uncertainty product `var_q·var_p ≥ 1/4`.
pub const UNCERTAINTY_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentBounds {
    /// Upper bounds `U_x` on the mixedness.
    #[serde(rename = "U")]
    pub u: [f64; 2],
    pub kappa: Overlap,
    pub input_overlap: Overlap,
}

impl MomentBounds {
    pub fn from_stats(stats: &ObservedStatistics, alpha: f64) -> Result<Self> {
        stats.validate()?;
        Ok(Self {
            u: [
                mixedness_bound(stats.var_q[0], stats.var_p[0])?,
                mixedness_bound(stats.var_q[1], stats.var_p[1])?,
            ],
            kappa: kappa_from_stats(stats),
            input_overlap: input_overlap(alpha)?,
        })
    }
}

/// Mixedness parameters `ε_x` and maximal-eigenvalue deficits `ε̃_x`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EpsilonPoint {
    pub eps: [f64; 2],
    pub eps_tilde: [f64; 2],
}

impl EpsilonPoint {
    pub fn symmetric(eps: f64, eps_tilde: f64) -> Self {
        Self {
            eps: [eps; 2],
            eps_tilde: [eps_tilde; 2],
        }
    }

    /// Checks `0 ≤ ε̃_x ≤ ε_x` and `ε̃_x < 1/2`.
    pub fn validate(&self) -> Result<()> {
        for x in 0..2 {
            let (e, t) = (self.eps[x], self.eps_tilde[x]);
            if !(t >= 0.0 && t <= e + RADICAND_TOL && e <= 1.0) {
                return Err(Error::Infeasible("require 0 <= eps_tilde <= eps <= 1"));
            }
            if !(t < 0.5) {
                return Err(Error::Infeasible("require eps_tilde < 1/2"));
            }
        }
        Ok(())
    }
}

/// A full set of interior parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InteriorPoint {
    pub eps: [f64; 2],
    pub eps_tilde: [f64; 2],
    pub gamma: Overlap,
}

impl InteriorPoint {
    pub fn new(epsilons: EpsilonPoint, gamma: Overlap) -> Self {
        Self {
            eps: epsilons.eps,
            eps_tilde: epsilons.eps_tilde,
            gamma,
        }
    }

    pub fn epsilons(&self) -> EpsilonPoint {
        EpsilonPoint {
            eps: self.eps,
            eps_tilde: self.eps_tilde,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlapInterval {
    pub lo: Overlap,
    pub hi: Overlap,
}

impl OverlapInterval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        let (lo, hi) = (Overlap::new(lo)?, Overlap::new(hi)?);
        if lo > hi {
            return Err(Error::Infeasible("empty overlap interval"));
        }
        Ok(Self { lo, hi })
    }

    pub fn point(v: Overlap) -> Self {
        Self { lo: v, hi: v }
    }

    pub fn contains(&self, v: f64, tol: f64) -> bool {
        v >= self.lo.value() - tol && v <= self.hi.value() + tol
    }
}

fn root(radicand: f64) -> Result<f64> {
    if radicand.is_nan() || radicand < -RADICAND_TOL {
        return Err(Error::Infeasible("negative radicand"));
    }
    Ok(radicand.max(0.0).sqrt())
}

/// `U = [(var_q + 1/2)(var_p + 1/2) − 1]/2`, floored at 0.
pub fn mixedness_bound(var_q: f64, var_p: f64) -> Result<f64> {
    let product = var_q * var_p;
    if !(var_q > 0.0 && var_p > 0.0) || product < 0.25 - UNCERTAINTY_TOL {
        return Err(Error::UncertaintyViolation {
            var_q,
            var_p,
            product,
        });
    }
    Ok((0.5 * ((var_q + 0.5) * (var_p + 0.5) - 1.0)).max(0.0))
}

/// `exp(−|β̄_0 − β̄_1|²/2)` with `β̄_x = mean_q[x] + i·mean_p[x]`.
pub fn kappa_from_stats(stats: &ObservedStatistics) -> Overlap {
    let dq = stats.mean_q[1] - stats.mean_q[0];
    let dp = stats.mean_p[1] - stats.mean_p[0];
    Overlap::saturating((-(dq * dq + dp * dp) / 2.0).exp())
}

/// `|⟨−α|α⟩| = exp(−2α²)`.
pub fn input_overlap(alpha: f64) -> Result<Overlap> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::Domain {
            what: "alpha",
            value: alpha,
            domain: "[0, inf)",
        });
    }
    Ok(Overlap::saturating((-2.0 * alpha * alpha).exp()))
}

/// Interval for the overlap of Bob's maximal conditional eigenstates.
pub fn bob_overlap_interval(pt: &EpsilonPoint, kappa: Overlap) -> Result<OverlapInterval> {
    pt.validate()?;
    let k = kappa.value();
    let k_perp = root(1.0 - k * k)?;
    let mut upper_head = [0.0; 2];
    let mut lower_head = [0.0; 2];
    let mut tail = [0.0; 2];
    for x in 0..2 {
        let (e, t) = (pt.eps[x], pt.eps_tilde[x]);
        upper_head[x] = root((1.0 - e) / (1.0 - t))?;
        lower_head[x] = root((1.0 - e - t) / (1.0 - 2.0 * t))?;
        tail[x] = root((e - t) / (1.0 - 2.0 * t))?;
    }
    let cross =
        k_perp * upper_head[0] * tail[1] + k_perp * upper_head[1] * tail[0] + tail[0] * tail[1];
    let hi = k * upper_head[0] * upper_head[1] + cross;
    let lo = k * lower_head[0] * lower_head[1] - cross;
    Ok(OverlapInterval {
        lo: Overlap::saturating(lo),
        hi: Overlap::saturating(hi),
    })
}

/// Interval `[d_l, d_u]` for the overlap `γ` of Eve's maximal eigenstates.
pub fn eve_overlap_interval(
    pt: &EpsilonPoint,
    in_ov: Overlap,
    c: OverlapInterval,
) -> Result<OverlapInterval> {
    pt.validate()?;
    let [t0, t1] = pt.eps_tilde;
    let r = (((1.0 - t1) * t0).sqrt() + ((1.0 - t0) * t1).sqrt()).powi(2) + t0 * t1;
    let r = r.sqrt();
    let d = ((1.0 - t0) * (1.0 - t1)).sqrt();
    let inp = in_ov.value();

    let lo = if c.hi.value() <= DENOMINATOR_FLOOR {
        if inp - r > 0.0 {
            return Err(Error::Infeasible("input overlap unreachable with c_u = 0"));
        }
        0.0
    } else {
        let raw = (inp - r) / (d * c.hi.value());
        // Rounding at the noiseless corner can land a hair above 1.
        if raw > 1.0 + RADICAND_TOL {
            return Err(Error::Infeasible("d_l exceeds 1"));
        }
        raw.clamp(0.0, 1.0)
    };
    let hi = if c.lo.value() <= DENOMINATOR_FLOOR {
        1.0
    } else {
        ((inp + r) / (d * c.lo.value())).clamp(0.0, 1.0)
    };
    if lo > hi {
        return Err(Error::Infeasible("d_l exceeds d_u"));
    }
    Ok(OverlapInterval {
        lo: Overlap::saturating(lo),
        hi: Overlap::saturating(hi),
    })
}
