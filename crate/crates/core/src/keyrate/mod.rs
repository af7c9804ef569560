//! Assembly of the key-rate lower bound.
//!
//! `G = I(X:Ỹ|U) − [S(E|X) + s_max] − (f_ec − 1)(1 − I(X:Ỹ|U))`, where
//! `s_max` is the worst case of `S(X:E) − S(E|Y)` over the interior
//! parameters left open by the observed moments.

mod search;
mod terms;

use serde::{Deserialize, Serialize};

pub use search::SearchOutcome;
pub use terms::{
    entropy_e_given_x_bound, gamma_integrals, integral_g, k_tilde, k_x, mutual_info_ae_bound,
    s_function, v_x, GammaIntegrals, GAMMA_GUARD,
};

use crate::eigen_bounds::{InteriorPoint, MomentBounds};
use crate::observation::{
    conditional_from_params, mutual_info_announced, mutual_info_xy, stats_from_params,
    ChannelParams, GaussianConditional, ObservedStatistics,
};
use crate::quadrature::QuadratureConfig;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchStrategy {
    /// Branch-and-bound over the grid; same maximiser as `Exhaustive`.
    #[default]
    Pruned,
    /// Evaluates `s` at every grid point.
    Exhaustive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Grid points per `ε` axis (and per `ε̃` axis).
    pub n_eps: usize,
    /// Grid points on each `[d_l, d_u]`.
    pub n_gamma: usize,
    pub alpha_grid: Vec<f64>,
    /// Ties `ε_0 = ε_1` and `ε̃_0 = ε̃_1`, scanning up to `max(U_0, U_1)`.
    pub symmetric: bool,
    /// Error-correction efficiency.
    pub f_ec: f64,
    pub strategy: SearchStrategy,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            n_eps: 40,
            n_gamma: 20,
            alpha_grid: default_alpha_grid(),
            symmetric: true,
            f_ec: 1.0,
            strategy: SearchStrategy::Pruned,
        }
    }
}

/// `0, 0.05, …, 1.0`.
pub fn default_alpha_grid() -> Vec<f64> {
    (0..=20).map(|i| i as f64 / 20.0).collect()
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_eps < 2 || self.n_gamma < 2 {
            return Err(Error::InvalidConfig("grid sizes must be at least 2".into()));
        }
        if !(self.f_ec >= 1.0 && self.f_ec.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "f_ec = {} must be >= 1",
                self.f_ec
            )));
        }
        if self.alpha_grid.is_empty() {
            return Err(Error::InvalidConfig("alpha grid is empty".into()));
        }
        if let Some(a) = self
            .alpha_grid
            .iter()
            .find(|a| !(**a >= 0.0 && a.is_finite()))
        {
            return Err(Error::InvalidConfig(format!(
                "alpha grid value {a} is not >= 0"
            )));
        }
        Ok(())
    }
}

/// Every term of one key-rate evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct BoundBreakdown {
    /// `I(X:Y)` from the conditional model.
    pub I_xy: f64,
    /// `I(X:Ỹ|U)`, the information surviving discretisation and the
    /// announcement of `|y|`. Equal to `I_xy` for symmetric models.
    pub I_announced: f64,
    pub V_x: [f64; 2],
    pub S_E_given_X: f64,
    pub s_max: f64,
    pub S_YE_bound: f64,
    /// Key bits per sifted symbol; `−∞` when `s_max` diverges.
    pub G: f64,
    pub argmax: InteriorPoint,
    pub alpha_used: f64,
    pub f_ec: f64,
    pub moments: MomentBounds,
    pub search: SearchOutcome,
}

impl BoundBreakdown {
    /// Whether every grid point diverged, so no key can be certified.
    pub fn diverged(&self) -> bool {
        self.s_max == f64::INFINITY
    }

    pub fn g_floored(&self) -> f64 {
        self.G.max(0.0)
    }
}

/// Worst case of `s` over the interior-parameter grid.
pub fn maximize_s(
    dist: &GaussianConditional,
    mb: &MomentBounds,
    cfg: &SearchConfig,
    quad: &QuadratureConfig,
) -> Result<SearchOutcome> {
    cfg.validate()?;
    quad.validate()?;
    search::search(dist, mb, cfg, quad)
}

/// Key-rate lower bound for one set of observations.
pub fn key_rate(
    stats: &ObservedStatistics,
    dist: &GaussianConditional,
    alpha: f64,
    cfg: &SearchConfig,
    quad: &QuadratureConfig,
) -> Result<BoundBreakdown> {
    cfg.validate()?;
    quad.validate()?;
    let moments = MomentBounds::from_stats(stats, alpha)?;
    let i_xy = mutual_info_xy(dist, quad)?;
    let i_announced = if dist.is_symmetric() {
        i_xy
    } else {
        mutual_info_announced(dist, quad)?
    };
    let vx = [
        v_x(stats.var_q[0], stats.var_p[0]),
        v_x(stats.var_q[1], stats.var_p[1]),
    ];
    let s_e_given_x = entropy_e_given_x_bound(vx);
    let search = search::search(dist, &moments, cfg, quad)?;
    let s_ye = s_e_given_x + search.s_max;
    let g = i_announced - s_ye - (cfg.f_ec - 1.0) * (1.0 - i_announced);
    Ok(BoundBreakdown {
        I_xy: i_xy,
        I_announced: i_announced,
        V_x: vx,
        S_E_given_X: s_e_given_x,
        s_max: search.s_max,
        S_YE_bound: s_ye,
        G: g,
        argmax: search.argmax,
        alpha_used: alpha,
        f_ec: cfg.f_ec,
        moments,
        search,
    })
}

/// Key rate for simulated observations at one signal amplitude.
pub fn key_rate_for_params(
    params: &ChannelParams,
    cfg: &SearchConfig,
    quad: &QuadratureConfig,
) -> Result<BoundBreakdown> {
    params.validate()?;
    key_rate(
        &stats_from_params(params),
        &conditional_from_params(params),
        params.alpha,
        cfg,
        quad,
    )
}

/// Maximises `G` over `cfg.alpha_grid`; ties go to the smaller amplitude.
pub fn optimize_alpha(
    template: &ChannelParams,
    cfg: &SearchConfig,
    quad: &QuadratureConfig,
) -> Result<BoundBreakdown> {
    cfg.validate()?;
    let mut best: Option<BoundBreakdown> = None;
    for &alpha in &cfg.alpha_grid {
        let b = key_rate_for_params(&template.with_alpha(alpha)?, cfg, quad)?;
        let replace = match &best {
            None => true,
            Some(cur) => b.G > cur.G || (b.G == cur.G && alpha < cur.alpha_used),
        };
        if replace {
            best = Some(b);
        }
    }
    Ok(best.expect("alpha grid is nonempty"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen_bounds::input_overlap;

    fn quad() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    fn small() -> SearchConfig {
        SearchConfig {
            n_eps: 10,
            n_gamma: 8,
            ..SearchConfig::default()
        }
    }

    fn params(alpha: f64, loss_db: f64, delta: f64) -> ChannelParams {
        ChannelParams::from_loss_db(alpha, loss_db, delta).unwrap()
    }

    #[test]
    fn breakdown_terms_add_up() {
        let b = key_rate_for_params(&params(0.6, 3.0, 0.0008), &small(), &quad()).unwrap();
        assert_eq!(b.S_YE_bound, b.S_E_given_X + b.s_max);
        assert_eq!(b.G, b.I_announced - b.S_YE_bound);
        assert_eq!(b.I_announced, b.I_xy);
        assert_eq!(b.s_max, b.search.s_max);
        assert_eq!(b.argmax, b.search.argmax);
        assert_eq!(b.g_floored(), b.G.max(0.0));
        assert!(!b.diverged());
    }

    #[test]
    fn error_correction_inefficiency_costs_its_share() {
        let p = params(0.5, 2.0, 0.0004);
        let ideal = key_rate_for_params(&p, &small(), &quad()).unwrap();
        let cfg = SearchConfig {
            f_ec: 1.2,
            ..small()
        };
        let real = key_rate_for_params(&p, &cfg, &quad()).unwrap();
        let cost = 0.2 * (1.0 - ideal.I_announced);
        assert!((ideal.G - real.G - cost).abs() < 1e-14);
    }

    #[test]
    fn zero_amplitude_gives_no_key() {
        let b = key_rate_for_params(&params(0.0, 1.0, 0.0), &small(), &quad()).unwrap();
        assert!(b.I_xy.abs() < 1e-15);
        assert!(b.G <= 1e-12);
    }

    #[test]
    fn noiseless_search_collapses_to_one_point() {
        let (alpha, eta) = (0.7, 0.6);
        let b = key_rate_for_params(
            &ChannelParams::new(alpha, eta, 0.0).unwrap(),
            &small(),
            &quad(),
        )
        .unwrap();
        assert_eq!(b.moments.u, [0.0, 0.0]);
        assert_eq!(b.search.eps_points, 1);
        assert_eq!(b.search.grid_points, 1);
        assert_eq!(b.S_E_given_X, 0.0);
        let expected = (-2.0 * (1.0 - eta) * alpha * alpha).exp();
        assert!((b.argmax.gamma.value() - expected).abs() < 1e-12);
    }

    #[test]
    fn pruned_search_matches_exhaustive() {
        let exhaustive = SearchConfig {
            strategy: SearchStrategy::Exhaustive,
            ..small()
        };
        for (alpha, loss, delta) in [(0.45, 0.0, 0.002), (0.8, 6.0, 0.0012), (1.0, 15.0, 0.0024)] {
            let p = params(alpha, loss, delta);
            let a = key_rate_for_params(&p, &small(), &quad()).unwrap();
            let b = key_rate_for_params(&p, &exhaustive, &quad()).unwrap();
            assert_eq!(a.s_max, b.s_max, "alpha={alpha} loss={loss} delta={delta}");
            assert_eq!(a.argmax, b.argmax);
            assert!(a.search.exact_evaluations <= b.search.exact_evaluations);
        }
    }

    #[test]
    fn asymmetric_search_is_no_weaker_on_symmetric_data() {
        let p = params(0.6, 4.0, 0.001);
        let cfg = SearchConfig {
            n_eps: 4,
            n_gamma: 4,
            ..SearchConfig::default()
        };
        let sym = key_rate_for_params(&p, &cfg, &quad()).unwrap();
        let asym = key_rate_for_params(
            &p,
            &SearchConfig {
                symmetric: false,
                ..cfg
            },
            &quad(),
        )
        .unwrap();
        // The asymmetric grid contains the symmetric one.
        assert!(asym.s_max >= sym.s_max);
        // ε = 0 carries only ε̃ = 0: 1 + 3·4 points per bit value.
        assert_eq!(asym.search.eps_points, 13 * 13);
    }

    #[test]
    fn refinement_never_lowers_the_worst_case() {
        let p = params(0.55, 5.0, 0.0016);
        let mut previous = f64::NEG_INFINITY;
        for n in [3, 5, 9, 17] {
            let cfg = SearchConfig {
                n_eps: n,
                n_gamma: n,
                ..SearchConfig::default()
            };
            let s = key_rate_for_params(&p, &cfg, &quad()).unwrap().s_max;
            assert!(s >= previous, "n={n}: {s} < {previous}");
            previous = s;
        }
    }

    #[test]
    fn amplitude_optimisation_is_order_independent() {
        let template = params(0.0, 3.0, 0.0008);
        let grid = vec![0.3, 0.5, 0.7, 0.9];
        let cfg = SearchConfig {
            alpha_grid: grid.clone(),
            ..small()
        };
        let best = optimize_alpha(&template, &cfg, &quad()).unwrap();
        let reversed = SearchConfig {
            alpha_grid: grid.iter().rev().cloned().collect(),
            ..small()
        };
        assert_eq!(best, optimize_alpha(&template, &reversed, &quad()).unwrap());
        for &a in &grid {
            let g = key_rate_for_params(&template.with_alpha(a).unwrap(), &cfg, &quad())
                .unwrap()
                .G;
            assert!(best.G >= g);
        }
        assert_eq!(
            best.moments.input_overlap,
            input_overlap(best.alpha_used).unwrap()
        );
    }

    #[test]
    fn shifted_means_lower_the_announced_information() {
        let mut stats = stats_from_params(&params(0.6, 1.0, 0.0));
        stats.mean_q = [stats.mean_q[0] + 0.2, stats.mean_q[1] + 0.2];
        let dist = GaussianConditional::from_statistics(&stats).unwrap();
        let b = key_rate(&stats, &dist, 0.6, &small(), &quad()).unwrap();
        assert!(b.I_announced < b.I_xy);
        assert_eq!(b.G, b.I_announced - b.S_YE_bound);
    }

    #[test]
    fn invalid_configurations_are_rejected() {
        let bad = [
            SearchConfig {
                n_eps: 1,
                ..SearchConfig::default()
            },
            SearchConfig {
                f_ec: 0.9,
                ..SearchConfig::default()
            },
            SearchConfig {
                alpha_grid: vec![],
                ..SearchConfig::default()
            },
            SearchConfig {
                alpha_grid: vec![-0.1],
                ..SearchConfig::default()
            },
        ];
        for cfg in bad {
            assert!(matches!(cfg.validate(), Err(Error::InvalidConfig(_))));
        }
    }
}
