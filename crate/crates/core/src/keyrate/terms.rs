//! The individual entropy terms of the key-rate bound.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::eigen_bounds::InteriorPoint;
use crate::entropy::{g_from_spread, h2, Overlap};
use crate::observation::GaussianConditional;
use crate::quadrature::{integrate_vec, QuadratureConfig};
use crate::{Error, Result};

/// Overlaps at or above `1 − GAMMA_GUARD` are treated as 1 by the terms
/// carrying a `1/(1 − γ)` prefactor.
pub const GAMMA_GUARD: f64 = 1e-9;

/// Excess-noise parameter `V_x = sqrt(var_q·var_p) − 1/2`, floored at 0.
pub fn v_x(var_q: f64, var_p: f64) -> f64 {
    ((var_q * var_p).sqrt() - 0.5).max(0.0)
}

fn thermal_like_entropy(v: f64) -> f64 {
    if v < 1e-15 {
        return 0.0;
    }
    ((1.0 + v) * v.ln_1p() - v * v.ln()) / LN_2
}

/// Upper bound on `S(E|X)`: `½ Σ_x [(1+V_x) log2(1+V_x) − V_x log2 V_x]`.
pub fn entropy_e_given_x_bound(vx: [f64; 2]) -> f64 {
    0.5 * (thermal_like_entropy(vx[0]) + thermal_like_entropy(vx[1]))
}

/// `sqrt((1 − ε̃_0)(1 − ε̃_1))`.
pub(crate) fn head_weight(eps_tilde: [f64; 2]) -> f64 {
    ((1.0 - eps_tilde[0]) * (1.0 - eps_tilde[1])).sqrt()
}

pub(crate) fn holevo_term(eps_tilde: [f64; 2], gamma: f64) -> f64 {
    h2(0.5 * (1.0 - head_weight(eps_tilde) * gamma))
}

/// Upper bound on `S(X:E)`: `h[½(1 − sqrt((1−ε̃_0)(1−ε̃_1))·γ)]`.
pub fn mutual_info_ae_bound(pt: &InteriorPoint) -> f64 {
    holevo_term(pt.eps_tilde, pt.gamma.value())
}

/// The three `γ`-dependent integrals over Bob's outcome.
///
/// `v[x] = ∫ P(y) [g(P(0|y), γ)/(1 − γ)]² / P(x|y) dy` is kept in this
/// normalised form because `g/(1 − γ)` is nondecreasing in `γ`, which the
/// search exploits, and because it stays well scaled as `γ → 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaIntegrals {
    pub i_g: f64,
    pub v: [f64; 2],
}

/// Computes [`GammaIntegrals`] in one pass. Requires `γ < 1 − GAMMA_GUARD`.
pub fn gamma_integrals(
    dist: &GaussianConditional,
    gamma: Overlap,
    quad: &QuadratureConfig,
) -> Result<GammaIntegrals> {
    let gamma = gamma.value();
    if gamma >= 1.0 - GAMMA_GUARD {
        return Err(Error::Divergent { gamma });
    }
    let inv = 1.0 / (1.0 - gamma);
    if dist.is_symmetric() {
        // P(y) and P(0|y)P(1|y) are even in y; P(0|y) and P(1|y) swap.
        let upper = dist.integration_range(quad).1;
        let est = integrate_vec(
            |y| {
                let post = dist.posterior(y);
                let spread = 4.0 * post.p0 * post.p1;
                if spread <= 0.0 {
                    return [0.0; 2];
                }
                let py = dist.marginal(y);
                let g = g_from_spread(spread, gamma);
                let gs = g * inv;
                [2.0 * py * g, 4.0 * py * gs * gs / spread]
            },
            0.0,
            upper,
            quad,
        )?;
        return Ok(GammaIntegrals {
            i_g: est.value[0],
            v: [est.value[1]; 2],
        });
    }
    let (a, b) = dist.integration_range(quad);
    let est = integrate_vec(
        |y| {
            let post = dist.posterior(y);
            let spread = 4.0 * post.p0 * post.p1;
            if spread <= 0.0 {
                return [0.0; 3];
            }
            let py = dist.marginal(y);
            let g = g_from_spread(spread, gamma);
            let gs2 = (g * inv) * (g * inv);
            [py * g, py * gs2 / post.p0, py * gs2 / post.p1]
        },
        a,
        b,
        quad,
    )?;
    Ok(GammaIntegrals {
        i_g: est.value[0],
        v: [est.value[1], est.value[2]],
    })
}

/// `∫ P(y) g(P(0|y), γ) dy`.
pub fn integral_g(
    dist: &GaussianConditional,
    gamma: Overlap,
    quad: &QuadratureConfig,
) -> Result<f64> {
    let gamma = gamma.value();
    let (a, b) = dist.integration_range(quad);
    let est = integrate_vec(
        |y| {
            let post = dist.posterior(y);
            [dist.marginal(y) * g_from_spread(4.0 * post.p0 * post.p1, gamma)]
        },
        a,
        b,
        quad,
    )?;
    Ok(est.value[0])
}

fn k_from_v(gamma: f64, v: f64) -> f64 {
    (0.5 * (1.0 - gamma) * (1.0 + gamma) * v).sqrt()
}

/// `k_x = sqrt[(1+γ)/(2(1−γ)) ∫ P(y) g²(P(0|y), γ)/P(x|y) dy]`.
pub fn k_x(
    dist: &GaussianConditional,
    gamma: Overlap,
    x: usize,
    quad: &QuadratureConfig,
) -> Result<f64> {
    let gi = gamma_integrals(dist, gamma, quad)?;
    Ok(k_from_v(gamma.value(), gi.v[x]))
}

/// `k̃ = g(1/2, γ)/(1 − γ) = h[(1 − γ)/2]/(1 − γ)`.
pub fn k_tilde(gamma: Overlap) -> Result<f64> {
    let gamma = gamma.value();
    if gamma >= 1.0 - GAMMA_GUARD {
        return Err(Error::Divergent { gamma });
    }
    Ok(k_tilde_unchecked(gamma))
}

pub(crate) fn k_tilde_unchecked(gamma: f64) -> f64 {
    h2(0.5 * (1.0 - gamma)) / (1.0 - gamma)
}

/// `s` from precomputed integrals; `γ` must be below the guard.
pub(crate) fn s_from_integrals(eps_tilde: [f64; 2], gamma: f64, gi: &GammaIntegrals) -> f64 {
    let mut s = holevo_term(eps_tilde, gamma) - gi.i_g;
    for x in 0..2 {
        if eps_tilde[x] > 0.0 {
            s += eps_tilde[x].sqrt() * k_from_v(gamma, gi.v[x]);
        }
    }
    if eps_tilde[0] > 0.0 && eps_tilde[1] > 0.0 {
        s += (eps_tilde[0] * eps_tilde[1]).sqrt() * k_tilde_unchecked(gamma);
    }
    s
}

/// Upper bound on `S(X:E) − S(E|Y)` at one interior point.
///
/// At `γ ≥ 1 − GAMMA_GUARD` the correction terms vanish when `ε̃ = 0`;
/// otherwise the bound diverges and `f64::INFINITY` is returned.
pub fn s_function(
    dist: &GaussianConditional,
    pt: &InteriorPoint,
    quad: &QuadratureConfig,
) -> Result<f64> {
    let gamma = pt.gamma.value();
    if gamma >= 1.0 - GAMMA_GUARD {
        if pt.eps_tilde.iter().any(|&t| t > 0.0) {
            return Ok(f64::INFINITY);
        }
        return Ok(holevo_term(pt.eps_tilde, gamma) - integral_g(dist, pt.gamma, quad)?);
    }
    let gi = gamma_integrals(dist, pt.gamma, quad)?;
    Ok(s_from_integrals(pt.eps_tilde, gamma, &gi))
}
