//! Worst-case search of `s` over the interior parameters.
//!
//! Grid values are computed as `upper · (i/(n − 1))` so that refining
//! `n → 2n − 1` reproduces every coarse point bit for bit.
//!
//! The pruned strategy brackets each grid `γ` between two knots of a
//! precomputed table and bounds `s` from above using two monotonicities:
//! `∫P g` is nonincreasing in `γ`, and `g/(1 − γ)` is nondecreasing in `γ`
//! (concavity of `g` with `g(·, 1) = 0`). Only points whose bound reaches
//! the incumbent are evaluated exactly, which gives the same maximiser as
//! the exhaustive scan at a small fraction of the quadrature cost.

use serde::{Deserialize, Serialize};

use super::terms::{
    gamma_integrals, holevo_term, integral_g, k_tilde_unchecked, s_from_integrals, GammaIntegrals,
    GAMMA_GUARD,
};
use super::{SearchConfig, SearchStrategy};
use crate::eigen_bounds::{
    bob_overlap_interval, eve_overlap_interval, EpsilonPoint, InteriorPoint, MomentBounds,
};
use crate::entropy::Overlap;
use crate::observation::GaussianConditional;
use crate::quadrature::QuadratureConfig;
use crate::{Error, Result};

/// Bound slack covering quadrature error in knot values.
const PRUNE_MARGIN: f64 = 1e-7;
/// Below this many grid points the exhaustive scan is cheaper.
const PRUNE_THRESHOLD: u64 = 64;
const UNIFORM_KNOTS: usize = 64;
const GEOMETRIC_KNOTS: i32 = 30;
const SEED_CANDIDATES: usize = 8;

/// Result of [`maximize_s`](super::maximize_s).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    /// Largest `s` over the grid; `+∞` only if every grid point diverges.
    pub s_max: f64,
    pub argmax: InteriorPoint,
    /// Whether the maximiser sits at the lower end `d_l` of its `γ` range.
    pub argmax_at_lower_end: bool,
    /// Feasible `(ε, ε̃)` points.
    pub eps_points: u64,
    /// `(ε, ε̃)` points skipped as infeasible.
    pub infeasible_points: u64,
    /// Total `(ε, ε̃, γ)` grid points.
    pub grid_points: u64,
    /// Grid points at `γ ≥ 1 − GAMMA_GUARD` with `ε̃ > 0`. These enter the
    /// maximum through `S(X:E)` alone, since `S(E|Y) ≥ 0`.
    pub diverged_points: u64,
    /// Grid points whose `s` needed quadrature.
    pub exact_evaluations: u64,
}

#[derive(Clone, Copy)]
struct GridPoint {
    rank: u64,
    eps: EpsilonPoint,
    gamma: f64,
    lower_end: bool,
}

impl GridPoint {
    fn diverges(&self) -> bool {
        self.gamma >= 1.0 - GAMMA_GUARD && self.eps.eps_tilde.iter().any(|&t| t > 0.0)
    }
}

fn axis(upper: f64, n: usize) -> impl Iterator<Item = (usize, f64)> {
    let count = if upper > 0.0 { n } else { 1 };
    (0..count).map(move |i| {
        if i == 0 {
            (0, 0.0)
        } else if i + 1 == n {
            (i, upper)
        } else {
            (i, upper * (i as f64 / (n - 1) as f64))
        }
    })
}

fn eps_points(mb: &MomentBounds, cfg: &SearchConfig) -> Vec<EpsilonPoint> {
    let n = cfg.n_eps;
    let mut out = Vec::new();
    if cfg.symmetric {
        let u = mb.u[0].max(mb.u[1]);
        for (_, e) in axis(u, n) {
            for (_, t) in axis(e, n) {
                out.push(EpsilonPoint::symmetric(e, t));
            }
        }
    } else {
        for (_, e0) in axis(mb.u[0], n) {
            for (_, t0) in axis(e0, n) {
                for (_, e1) in axis(mb.u[1], n) {
                    for (_, t1) in axis(e1, n) {
                        out.push(EpsilonPoint {
                            eps: [e0, e1],
                            eps_tilde: [t0, t1],
                        });
                    }
                }
            }
        }
    }
    out
}

/// Enumerates grid points in lexicographic index order.
struct Grid {
    points: Vec<(EpsilonPoint, f64, f64)>,
    infeasible: u64,
    n_gamma: usize,
}

impl Grid {
    fn build(mb: &MomentBounds, cfg: &SearchConfig) -> Self {
        let mut points = Vec::new();
        let mut infeasible = 0;
        for eps in eps_points(mb, cfg) {
            let d = bob_overlap_interval(&eps, mb.kappa)
                .and_then(|c| eve_overlap_interval(&eps, mb.input_overlap, c));
            match d {
                Ok(d) => points.push((eps, d.lo.value(), d.hi.value())),
                Err(Error::Infeasible(_)) => infeasible += 1,
                Err(e) => unreachable!("interval construction only fails as infeasible: {e}"),
            }
        }
        Self {
            points,
            infeasible,
            n_gamma: cfg.n_gamma,
        }
    }

    fn for_each<F: FnMut(GridPoint) -> Result<()>>(&self, mut f: F) -> Result<()> {
        let mut rank = 0;
        for &(eps, lo, hi) in &self.points {
            let count = if hi > lo { self.n_gamma } else { 1 };
            for k in 0..count {
                let gamma = if k == 0 {
                    lo
                } else if k + 1 == count {
                    hi
                } else {
                    lo + (hi - lo) * (k as f64 / (count - 1) as f64)
                };
                f(GridPoint {
                    rank,
                    eps,
                    gamma,
                    lower_end: k == 0,
                })?;
                rank += 1;
            }
        }
        Ok(())
    }
}

/// Incumbent maximiser; ties go to the smallest grid rank.
struct Best {
    value: f64,
    point: Option<GridPoint>,
}

impl Best {
    fn offer(&mut self, value: f64, point: GridPoint) {
        let better = match self.point {
            None => true,
            Some(p) => value > self.value || (value == self.value && point.rank < p.rank),
        };
        if better {
            self.value = value;
            self.point = Some(point);
        }
    }
}

struct Evaluator<'a> {
    dist: &'a GaussianConditional,
    quad: &'a QuadratureConfig,
    exact: u64,
}

impl Evaluator<'_> {
    fn value(&mut self, p: &GridPoint) -> Result<f64> {
        let t = p.eps.eps_tilde;
        if p.diverges() {
            // S(E|Y) ≥ 0 leaves S(X:E) as a finite bound.
            return Ok(holevo_term(t, p.gamma));
        }
        self.exact += 1;
        if p.gamma >= 1.0 - GAMMA_GUARD {
            return Ok(holevo_term(t, p.gamma)
                - integral_g(self.dist, Overlap::saturating(p.gamma), self.quad)?);
        }
        let gi = gamma_integrals(self.dist, Overlap::saturating(p.gamma), self.quad)?;
        Ok(s_from_integrals(t, p.gamma, &gi))
    }
}

struct KnotTable {
    knots: Vec<f64>,
    values: Vec<GammaIntegrals>,
}

impl KnotTable {
    fn build(
        dist: &GaussianConditional,
        quad: &QuadratureConfig,
        lo: f64,
        top: f64,
        hi: f64,
    ) -> Result<Self> {
        let mut knots: Vec<f64> = (0..UNIFORM_KNOTS)
            .map(|i| lo + (top - lo) * (i as f64 / (UNIFORM_KNOTS - 1) as f64))
            .collect();
        knots.extend((1..=GEOMETRIC_KNOTS).map(|m| top - (top - lo) * 2f64.powi(-m)));
        knots.push(lo);
        knots.push(top);
        knots.push(hi);
        knots.sort_by(f64::total_cmp);
        knots.dedup();
        let values = knots
            .iter()
            .map(|&k| {
                if k >= 1.0 - GAMMA_GUARD {
                    let i_g = integral_g(dist, Overlap::saturating(k), quad)?;
                    Ok(GammaIntegrals {
                        i_g,
                        v: [f64::INFINITY; 2],
                    })
                } else {
                    gamma_integrals(dist, Overlap::saturating(k), quad)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { knots, values })
    }

    /// Upper bound on `s` at a non-divergent grid point.
    fn upper_bound(&self, p: &GridPoint) -> f64 {
        let idx = self
            .knots
            .partition_point(|&k| k < p.gamma)
            .min(self.knots.len() - 1);
        let above = &self.values[idx];
        let t = p.eps.eps_tilde;
        let g = p.gamma;
        let mut ub = holevo_term(t, g) - above.i_g;
        for x in 0..2 {
            if t[x] > 0.0 {
                ub += t[x].sqrt() * (0.5 * (1.0 - g) * (1.0 + g) * above.v[x]).sqrt();
            }
        }
        if t[0] > 0.0 && t[1] > 0.0 {
            ub += (t[0] * t[1]).sqrt() * k_tilde_unchecked(g);
        }
        ub
    }
}

pub(super) fn search(
    dist: &GaussianConditional,
    mb: &MomentBounds,
    cfg: &SearchConfig,
    quad: &QuadratureConfig,
) -> Result<SearchOutcome> {
    let grid = Grid::build(mb, cfg);
    if grid.points.is_empty() {
        return Err(Error::Infeasible(
            "no interior point is compatible with the observations",
        ));
    }
    search_grid(&grid, dist, cfg.strategy, quad)
}

fn search_grid(
    grid: &Grid,
    dist: &GaussianConditional,
    strategy: SearchStrategy,
    quad: &QuadratureConfig,
) -> Result<SearchOutcome> {
    let mut grid_points = 0;
    let mut diverged = 0;
    let mut first = None;
    // Range of γ over points needing quadrature.
    let (mut lo, mut top, mut hi) = (f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    grid.for_each(|p| {
        grid_points += 1;
        first.get_or_insert(p);
        if p.diverges() {
            diverged += 1;
        } else {
            lo = lo.min(p.gamma);
            hi = hi.max(p.gamma);
            if p.gamma < 1.0 - GAMMA_GUARD {
                top = top.max(p.gamma);
            }
        }
        Ok(())
    })?;
    let first = first.expect("nonempty grid");

    let mut eval = Evaluator {
        dist,
        quad,
        exact: 0,
    };
    let mut best = Best {
        value: f64::NEG_INFINITY,
        point: None,
    };

    if diverged == grid_points {
        best.offer(f64::INFINITY, first);
    } else {
        let pruned = strategy == SearchStrategy::Pruned && grid_points > PRUNE_THRESHOLD;
        if pruned {
            if top < lo {
                top = lo;
            }
            let table = KnotTable::build(dist, quad, lo, top, hi)?;
            // Seed the incumbent with the most promising points.
            let mut seeds: Vec<(f64, GridPoint)> = Vec::with_capacity(SEED_CANDIDATES + 1);
            grid.for_each(|p| {
                let ub = if p.diverges() {
                    holevo_term(p.eps.eps_tilde, p.gamma)
                } else {
                    table.upper_bound(&p)
                };
                if seeds.len() < SEED_CANDIDATES || ub > seeds[seeds.len() - 1].0 {
                    let pos = seeds.partition_point(|s| s.0 >= ub);
                    seeds.insert(pos, (ub, p));
                    seeds.truncate(SEED_CANDIDATES);
                }
                Ok(())
            })?;
            for (_, p) in &seeds {
                best.offer(eval.value(p)?, *p);
            }
            grid.for_each(|p| {
                if seeds.iter().any(|s| s.1.rank == p.rank) {
                    // Already offered.
                } else if p.diverges() {
                    best.offer(holevo_term(p.eps.eps_tilde, p.gamma), p);
                } else if table.upper_bound(&p) + PRUNE_MARGIN >= best.value {
                    best.offer(eval.value(&p)?, p);
                }
                Ok(())
            })?;
        } else {
            grid.for_each(|p| {
                best.offer(eval.value(&p)?, p);
                Ok(())
            })?;
        }
    }

    let p = best.point.expect("at least one grid point offered");
    Ok(SearchOutcome {
        s_max: best.value,
        argmax: InteriorPoint::new(p.eps, Overlap::saturating(p.gamma)),
        argmax_at_lower_end: p.lower_end,
        eps_points: grid.points.len() as u64,
        infeasible_points: grid.infeasible,
        grid_points,
        diverged_points: diverged,
        exact_evaluations: eval.exact,
    })
}
