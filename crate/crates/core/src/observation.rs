//! The quantum phase of the protocol as seen through Bob's homodyne data.
//!
//! Alice sends `|−α⟩` for `x = 0` and `|+α⟩` for `x = 1`; Bob measures a
//! uniformly chosen quadrature. Key data come from the `q` quadrature; the
//! `p` quadrature is published for channel testing. Outcomes are modelled
//! by a Gaussian conditional `P(y|x)` with mean `±mean_scale·sqrt(η)·α`
//! and variance `(1 + δ)/2` (vacuum variance is 1/2).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::entropy::{h2, Probability};
use crate::quadrature::{integrate, integrate_vec, QuadratureConfig};
use crate::{Error, Result};

/// Quadrature variance of the vacuum.
pub const VACUUM_VARIANCE: f64 = 0.5;

/// Physical scenario used for simulation and sweeps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Coherent amplitude of Alice's signals.
    pub alpha: f64,
    /// Channel transmission.
    pub eta: f64,
    /// Excess noise relative to the vacuum variance.
    pub delta: f64,
    /// Factor multiplying the conditional mean `sqrt(η)·α`.
    pub mean_scale: f64,
}

impl ChannelParams {
    pub fn new(alpha: f64, eta: f64, delta: f64) -> Result<Self> {
        let params = Self {
            alpha,
            eta,
            delta,
            mean_scale: 1.0,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn from_loss_db(alpha: f64, loss_db: f64, delta: f64) -> Result<Self> {
        if !(loss_db >= 0.0) || !loss_db.is_finite() {
            return Err(Error::Domain {
                what: "loss_db",
                value: loss_db,
                domain: "[0, inf)",
            });
        }
        Self::new(alpha, eta_from_loss_db(loss_db), delta)
    }

    pub fn with_mean_scale(mut self, mean_scale: f64) -> Result<Self> {
        self.mean_scale = mean_scale;
        self.validate()?;
        Ok(self)
    }

    pub fn with_alpha(mut self, alpha: f64) -> Result<Self> {
        self.alpha = alpha;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::Domain {
                what: "alpha",
                value: self.alpha,
                domain: "[0, inf)",
            });
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::Domain {
                what: "eta",
                value: self.eta,
                domain: "(0, 1]",
            });
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(Error::Domain {
                what: "delta",
                value: self.delta,
                domain: "[0, inf)",
            });
        }
        if !(self.mean_scale > 0.0 && self.mean_scale.is_finite()) {
            return Err(Error::Domain {
                what: "mean_scale",
                value: self.mean_scale,
                domain: "(0, inf)",
            });
        }
        Ok(())
    }

    /// Conditional quadrature variance `(1 + δ)/2`.
    pub fn variance(&self) -> f64 {
        VACUUM_VARIANCE * (1.0 + self.delta)
    }
}

/// `η = 10^(−loss/10)`.
pub fn eta_from_loss_db(loss_db: f64) -> f64 {
    10f64.powf(-loss_db / 10.0)
}

/// Gaussian model of Bob's `q` outcome conditioned on Alice's bit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianConditional {
    pub mu: [f64; 2],
    pub var: f64,
}

/// Both conditional posteriors at one outcome, computed without overflow.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Posterior {
    pub p0: f64,
    pub p1: f64,
}

impl GaussianConditional {
    pub fn new(mu: [f64; 2], var: f64) -> Result<Self> {
        if !(var > 0.0 && var.is_finite()) {
            return Err(Error::Domain {
                what: "conditional variance",
                value: var,
                domain: "(0, inf)",
            });
        }
        if !(mu[0].is_finite() && mu[1].is_finite()) {
            return Err(Error::InvalidConfig(
                "conditional means must be finite".into(),
            ));
        }
        Ok(Self { mu, var })
    }

    /// Builds the model from estimated moments, pooling the two `q`
    /// variances.
    pub fn from_statistics(stats: &ObservedStatistics) -> Result<Self> {
        Self::new(stats.mean_q, 0.5 * (stats.var_q[0] + stats.var_q[1]))
    }

    pub fn sigma(&self) -> f64 {
        self.var.sqrt()
    }

    /// `mu[0] = -mu[1]` exactly.
    pub fn is_symmetric(&self) -> bool {
        self.mu[0] == -self.mu[1]
    }

    /// `P(y|x)`.
    pub fn density(&self, y: f64, x: usize) -> f64 {
        let d = y - self.mu[x];
        (-d * d / (2.0 * self.var)).exp() / (2.0 * std::f64::consts::PI * self.var).sqrt()
    }

    /// `P(y) = (P(y|0) + P(y|1))/2`.
    pub fn marginal(&self, y: f64) -> f64 {
        0.5 * (self.density(y, 0) + self.density(y, 1))
    }

    pub(crate) fn posterior(&self, y: f64) -> Posterior {
        let d0 = y - self.mu[0];
        let d1 = y - self.mu[1];
        // ln P(y|1) - ln P(y|0)
        let llr = (d0 * d0 - d1 * d1) / (2.0 * self.var);
        if llr > 0.0 {
            let e = (-llr).exp();
            Posterior {
                p0: e / (1.0 + e),
                p1: 1.0 / (1.0 + e),
            }
        } else {
            let e = llr.exp();
            Posterior {
                p0: 1.0 / (1.0 + e),
                p1: e / (1.0 + e),
            }
        }
    }

    /// Integration window `[min(mu) − kσ, max(mu) + kσ]`.
    pub fn integration_range(&self, quad: &QuadratureConfig) -> (f64, f64) {
        let w = quad.range_sigmas * self.sigma();
        (
            self.mu[0].min(self.mu[1]) - w,
            self.mu[0].max(self.mu[1]) + w,
        )
    }
}

pub fn conditional_from_params(params: &ChannelParams) -> GaussianConditional {
    let m = params.mean_scale * params.eta.sqrt() * params.alpha;
    GaussianConditional {
        mu: [-m, m],
        var: params.variance(),
    }
}

/// Per-bit conditional first and second moments of both quadratures.
///
/// `n` holds sample counts indexed `[x][basis]` (basis 0 = q, 1 = p);
/// `None` marks statistics derived analytically rather than from data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservedStatistics {
    pub mean_q: [f64; 2],
    pub mean_p: [f64; 2],
    pub var_q: [f64; 2],
    pub var_p: [f64; 2],
    pub n: Option<[[u64; 2]; 2]>,
}

impl ObservedStatistics {
    /// Alice's prior on each bit value.
    pub const PRIOR: f64 = 0.5;

    pub fn validate(&self) -> Result<()> {
        for x in 0..2 {
            for (what, v) in [("var_q", self.var_q[x]), ("var_p", self.var_p[x])] {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::Domain {
                        what,
                        value: v,
                        domain: "(0, inf)",
                    });
                }
            }
            if !(self.mean_q[x].is_finite() && self.mean_p[x].is_finite()) {
                return Err(Error::InvalidConfig("means must be finite".into()));
            }
        }
        Ok(())
    }

    pub fn is_analytic(&self) -> bool {
        self.n.is_none()
    }
}

pub fn stats_from_params(params: &ChannelParams) -> ObservedStatistics {
    let dist = conditional_from_params(params);
    let v = params.variance();
    ObservedStatistics {
        mean_q: dist.mu,
        mean_p: [0.0, 0.0],
        var_q: [v, v],
        var_p: [v, v],
        n: None,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    Q,
    P,
}

impl Basis {
    pub fn index(self) -> usize {
        match self {
            Basis::Q => 0,
            Basis::P => 1,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Basis::Q => 'q',
            Basis::P => 'p',
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordEntry {
    pub x: u8,
    pub basis: Basis,
    pub y: f64,
}

/// A sequence of `(x, basis, y)` homodyne events.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct HomodyneRecord {
    pub entries: Vec<RecordEntry>,
}

impl HomodyneRecord {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl FromIterator<RecordEntry> for HomodyneRecord {
    fn from_iter<I: IntoIterator<Item = RecordEntry>>(iter: I) -> Self {
        Self {
            entries: iter.into_iter().collect(),
        }
    }
}

/// Simulates `n` protocol rounds. Deterministic per `(seed, n)`.
pub fn sample_record(dist: &GaussianConditional, n: usize, seed: u64) -> HomodyneRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sigma = dist.sigma();
    (0..n)
        .map(|_| {
            let x = u8::from(rng.random::<bool>());
            let basis = if rng.random::<bool>() {
                Basis::P
            } else {
                Basis::Q
            };
            let z: f64 = rng.sample(StandardNormal);
            let mean = match basis {
                Basis::Q => dist.mu[x as usize],
                Basis::P => 0.0,
            };
            RecordEntry {
                x,
                basis,
                y: mean + sigma * z,
            }
        })
        .collect()
}

/// Splits a record into key data (`q` basis) and test data (`p` basis).
pub fn sift(record: &HomodyneRecord) -> (HomodyneRecord, HomodyneRecord) {
    let (key, test): (Vec<_>, Vec<_>) = record.entries.iter().partition(|e| e.basis == Basis::Q);
    (
        HomodyneRecord { entries: key },
        HomodyneRecord { entries: test },
    )
}

#[derive(Default, Clone, Copy)]
struct Moments {
    count: usize,
    mean: f64,
    m2: f64,
}

impl Moments {
    // Welford update.
    fn push(&mut self, y: f64) {
        self.count += 1;
        let d = y - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (y - self.mean);
    }

    fn variance(&self) -> f64 {
        self.m2 / (self.count as f64 - 1.0)
    }
}

/// Conditional sample means and unbiased variances per bit value.
///
/// `q` moments come from `key_part` and `p` moments from `test_part`;
/// entries of the other basis in either record are ignored.
pub fn estimate_statistics(
    key_part: &HomodyneRecord,
    test_part: &HomodyneRecord,
) -> Result<ObservedStatistics> {
    let mut cells = [[Moments::default(); 2]; 2];
    for (record, basis) in [(key_part, Basis::Q), (test_part, Basis::P)] {
        for e in record.entries.iter().filter(|e| e.basis == basis) {
            cells[e.x as usize][basis.index()].push(e.y);
        }
    }
    for x in 0..2 {
        for basis in [Basis::Q, Basis::P] {
            let count = cells[x][basis.index()].count;
            if count < 2 {
                return Err(Error::InsufficientData {
                    x: x as u8,
                    basis: basis.symbol(),
                    count,
                });
            }
        }
    }
    let stats = ObservedStatistics {
        mean_q: [cells[0][0].mean, cells[1][0].mean],
        mean_p: [cells[0][1].mean, cells[1][1].mean],
        var_q: [cells[0][0].variance(), cells[1][0].variance()],
        var_p: [cells[0][1].variance(), cells[1][1].variance()],
        n: Some([
            [cells[0][0].count as u64, cells[0][1].count as u64],
            [cells[1][0].count as u64, cells[1][1].count as u64],
        ]),
    };
    stats.validate()?;
    Ok(stats)
}

/// `P(0|y)` under a uniform prior on Alice's bit.
pub fn posterior_p0(dist: &GaussianConditional, y: f64) -> Probability {
    Probability::new(dist.posterior(y).p0).expect("posterior lies in [0, 1]")
}

/// `I(X:Y) = 1 − ∫ P(y) h(P(0|y)) dy`.
pub fn mutual_info_xy(dist: &GaussianConditional, quad: &QuadratureConfig) -> Result<f64> {
    let (a, b) = dist.integration_range(quad);
    let (equivocation, _) = integrate(
        |y| {
            let post = dist.posterior(y);
            dist.marginal(y) * h2(post.p0.min(post.p1))
        },
        a,
        b,
        quad,
    )?;
    Ok((1.0 - equivocation).clamp(0.0, 1.0))
}

/// `I(X:U)` for the announcement `u = |y|`.
pub fn mutual_info_xu(dist: &GaussianConditional, quad: &QuadratureConfig) -> Result<f64> {
    let (a, b) = dist.integration_range(quad);
    let upper = a.abs().max(b.abs());
    let est = integrate_vec(
        |u| {
            let f0 = dist.density(u, 0) + dist.density(-u, 0);
            let f1 = dist.density(u, 1) + dist.density(-u, 1);
            let pu = 0.5 * (f0 + f1);
            if pu <= 0.0 {
                return [0.0];
            }
            [pu * h2(0.5 * f0 / pu)]
        },
        0.0,
        upper,
        quad,
    )?;
    Ok((1.0 - est.value[0]).clamp(0.0, 1.0))
}

/// `I(X:Ỹ|U)` for sign discretisation and modulus announcement.
///
/// Since `(ỹ, u)` determines `y` almost surely, `H(X|ỸU) = H(X|Y)` and the
/// quantity equals `I(X:Y) − I(X:U)`; the second term vanishes for a
/// symmetric model.
pub fn mutual_info_announced(dist: &GaussianConditional, quad: &QuadratureConfig) -> Result<f64> {
    let i_xy = mutual_info_xy(dist, quad)?;
    if dist.is_symmetric() {
        return Ok(i_xy);
    }
    Ok((i_xy - mutual_info_xu(dist, quad)?).max(0.0))
}

/// Bob's key bit and public announcement for one outcome.
pub fn discretize_announce(y: f64) -> (u8, f64) {
    (if y < 0.0 { 0 } else { 1 }, y.abs())
}

/// A Monte Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleEstimate {
    pub value: f64,
    pub std_error: f64,
}

/// Plug-in estimate of `I(X:Ỹ|U)` from key data, binning `u = |y|` into
/// `n_bins` equal-occupancy bins. The standard error is that of the mean
/// per-sample information density.
pub fn announced_information_from_samples(
    key_part: &HomodyneRecord,
    n_bins: usize,
) -> Result<SampleEstimate> {
    let mut samples: Vec<(f64, u8, usize)> = key_part
        .entries
        .iter()
        .filter(|e| e.basis == Basis::Q)
        .map(|e| {
            let (bit, u) = discretize_announce(e.y);
            (u, bit, e.x as usize)
        })
        .collect();
    let n = samples.len();
    if n_bins == 0 || n < 2 * n_bins {
        return Err(Error::InvalidConfig(format!(
            "need at least {} key samples for {} bins, have {}",
            2 * n_bins,
            n_bins,
            n
        )));
    }
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));

    // counts[bin][ỹ][x]
    let mut counts = vec![[[0usize; 2]; 2]; n_bins];
    let bin_of = |rank: usize| rank * n_bins / n;
    for (rank, &(_, bit, x)) in samples.iter().enumerate() {
        counts[bin_of(rank)][bit as usize][x] += 1;
    }

    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for (rank, &(_, bit, x)) in samples.iter().enumerate() {
        let c = &counts[bin_of(rank)];
        let p_given_both =
            c[bit as usize][x] as f64 / (c[bit as usize][0] + c[bit as usize][1]) as f64;
        let in_bin = (c[0][0] + c[0][1] + c[1][0] + c[1][1]) as f64;
        let p_given_u = (c[0][x] + c[1][x]) as f64 / in_bin;
        let density = (p_given_both / p_given_u).log2();
        sum += density;
        sum_sq += density * density;
    }
    let mean = sum / n as f64;
    let var = (sum_sq / n as f64 - mean * mean).max(0.0) * n as f64 / (n as f64 - 1.0);
    Ok(SampleEstimate {
        value: mean,
        std_error: (var / n as f64).sqrt(),
    })
}
