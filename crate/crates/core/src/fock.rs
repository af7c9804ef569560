//! Truncated Fock-space states for brute-force checks of the moment bounds.
//!
//! A state on the first `dim` number states is treated as a state of the
//! full mode that happens to live in that subspace. Quadrature moments and
//! coherent-state fidelities are then computed exactly: the operators
//! `a`, `a²` and `a†a` and the coherent amplitudes `⟨k|β⟩` restricted to
//! the subspace carry no truncation error.

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::{Error, Result};

pub type C64 = Complex<f64>;

pub const DEFAULT_DIM: usize = 12;
/// Largest tolerated population of the top level for moment checks.
pub const TAIL_LIMIT: f64 = 1e-6;
/// Largest tolerated coherent-state mass beyond the truncation.
pub const COHERENT_TAIL_LIMIT: f64 = 1e-8;
pub const DEGENERACY_TOL: f64 = 1e-10;

/// A density matrix on the first `dim` Fock states.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedState {
    matrix: DMatrix<C64>,
}

impl TruncatedState {
    /// Validates Hermiticity (1e-12), unit trace (1e-12) and positivity
    /// (eigenvalues ≥ −1e-10).
    pub fn new(matrix: DMatrix<C64>) -> Result<Self> {
        let n = matrix.nrows();
        if n < 2 || matrix.ncols() != n {
            return Err(Error::InvalidState(format!(
                "need a square matrix of size >= 2, got {}x{}",
                n,
                matrix.ncols()
            )));
        }
        let asym = (&matrix - matrix.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if asym > 1e-12 {
            return Err(Error::InvalidState(format!(
                "not Hermitian: deviation {asym:e}"
            )));
        }
        let trace = matrix.trace();
        if (trace.re - 1.0).abs() > 1e-12 || trace.im.abs() > 1e-12 {
            return Err(Error::InvalidState(format!("trace {trace} is not 1")));
        }
        let min_eig = SymmetricEigen::new(matrix.clone()).eigenvalues.min();
        if min_eig < -1e-10 {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {min_eig:e}"
            )));
        }
        Ok(Self { matrix })
    }

    /// `|ψ⟩⟨ψ|` for a normalised copy of `psi`.
    pub fn pure(psi: &DVector<C64>) -> Result<Self> {
        let norm = psi.norm();
        if !(norm > 0.0) {
            return Err(Error::InvalidState("zero vector".into()));
        }
        let v = psi / C64::from(norm);
        Self::new(&v * v.adjoint())
    }

    /// Scales a positive semidefinite Hermitian matrix to unit trace.
    fn normalised(matrix: DMatrix<C64>) -> Result<Self> {
        let trace = matrix.trace().re;
        let mut m = matrix / C64::from(trace);
        // Symmetrise away rounding so validation sees an exact adjoint.
        m = (&m + m.adjoint()) * C64::from(0.5);
        Self::new(m)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    /// Population of the highest retained number state.
    pub fn tail_mass(&self) -> f64 {
        let n = self.dim();
        self.matrix[(n - 1, n - 1)].re
    }

    pub fn check_tail(&self, limit: f64) -> Result<()> {
        let tail = self.tail_mass();
        if tail >= limit {
            return Err(Error::Truncation { tail, limit });
        }
        Ok(())
    }

    /// `tr(ρ a)`.
    pub fn mean_a(&self) -> C64 {
        (1..self.dim())
            .map(|n| self.matrix[(n, n - 1)] * (n as f64).sqrt())
            .sum()
    }

    fn mean_a_squared(&self) -> C64 {
        (2..self.dim())
            .map(|n| self.matrix[(n, n - 2)] * ((n * (n - 1)) as f64).sqrt())
            .sum()
    }

    fn mean_number(&self) -> f64 {
        (0..self.dim())
            .map(|n| n as f64 * self.matrix[(n, n)].re)
            .sum()
    }
}

/// Quadrature moments with `q = (a + a†)/√2` and `p = (a − a†)/(i√2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Moments {
    pub mean_q: f64,
    pub mean_p: f64,
    pub var_q: f64,
    pub var_p: f64,
}

pub fn moments(state: &TruncatedState) -> Moments {
    let a = state.mean_a();
    let a2 = state.mean_a_squared();
    let n = state.mean_number();
    let mean_q = std::f64::consts::SQRT_2 * a.re;
    let mean_p = std::f64::consts::SQRT_2 * a.im;
    // q² = (2n + 1 + a² + a†²)/2, p² = (2n + 1 − a² − a†²)/2.
    let q2 = 0.5 * (2.0 * n + 1.0 + 2.0 * a2.re);
    let p2 = 0.5 * (2.0 * n + 1.0 - 2.0 * a2.re);
    Moments {
        mean_q,
        mean_p,
        var_q: q2 - mean_q * mean_q,
        var_p: p2 - mean_p * mean_p,
    }
}

/// `⟨k|β⟩ = exp(−|β|²/2) βᵏ/sqrt(k!)` for `k < dim`, not renormalised.
pub fn coherent_components(beta: C64, dim: usize) -> DVector<C64> {
    let mut v = DVector::zeros(dim);
    let mut c = C64::from((-beta.norm_sqr() / 2.0).exp());
    for k in 0..dim {
        v[k] = c;
        c = c * beta / ((k + 1) as f64).sqrt();
    }
    v
}

/// The coherent state `|β⟩` truncated to `dim` levels and renormalised.
pub fn coherent_vector(beta: C64, dim: usize) -> Result<DVector<C64>> {
    let v = coherent_components(beta, dim);
    let kept = v.norm_squared();
    let tail = 1.0 - kept;
    if tail >= COHERENT_TAIL_LIMIT {
        return Err(Error::Truncation {
            tail,
            limit: COHERENT_TAIL_LIMIT,
        });
    }
    Ok(v / C64::from(kept.sqrt()))
}

/// How first moments map to the amplitude of the reference coherent state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AmplitudeConvention {
    /// `β̄ = mean_q + i·mean_p`.
    Literal,
    /// `β̄ = ⟨a⟩ = (mean_q + i·mean_p)/√2`, the coherent state sharing the
    /// state's first moments.
    Displacement,
}

impl AmplitudeConvention {
    pub fn amplitude(self, m: &Moments) -> C64 {
        let raw = C64::new(m.mean_q, m.mean_p);
        match self {
            Self::Literal => raw,
            Self::Displacement => raw / std::f64::consts::SQRT_2,
        }
    }
}

/// `(ε, β̄)` with `1 − ε = ⟨β̄|ρ|β̄⟩`, using exact coherent amplitudes.
pub fn fidelity_with_coherent(
    state: &TruncatedState,
    convention: AmplitudeConvention,
) -> (f64, C64) {
    let beta = convention.amplitude(&moments(state));
    let c = coherent_components(beta, state.dim());
    let f = (c.adjoint() * state.matrix() * &c)[(0, 0)].re;
    (1.0 - f, beta)
}

/// `|⟨β_0|β_1⟩| = exp(−|β_0 − β_1|²/2)`.
pub fn coherent_overlap(b0: C64, b1: C64) -> f64 {
    (-(b0 - b1).norm_sqr() / 2.0).exp()
}

/// Largest eigenvalue and a unit eigenvector.
pub fn max_eigenpair(state: &TruncatedState) -> Result<(f64, DVector<C64>)> {
    let eig = SymmetricEigen::new(state.matrix().clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let (top, second) = (eig.eigenvalues[order[0]], eig.eigenvalues[order[1]]);
    if top - second <= DEGENERACY_TOL {
        return Err(Error::DegenerateSpectrum {
            top,
            second,
            tol: DEGENERACY_TOL,
        });
    }
    Ok((top, eig.eigenvectors.column(order[0]).into_owned()))
}

fn laguerre(n: usize, a: f64, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, 1.0 + a - x);
    if n == 0 {
        return prev;
    }
    for k in 1..n {
        let next = ((2 * k + 1) as f64 + a - x) * cur - (k as f64 + a) * prev;
        prev = cur;
        cur = next / (k + 1) as f64;
    }
    cur
}

fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

/// `⟨m|D(β)|n⟩` for `m < rows`, `n < cols`.
pub fn displacement_matrix(beta: C64, rows: usize, cols: usize) -> DMatrix<C64> {
    let x = beta.norm_sqr();
    let damp = (-x / 2.0).exp();
    DMatrix::from_fn(rows, cols, |m, n| {
        if m >= n {
            let k = m - n;
            let scale = (0.5 * (ln_factorial(n) - ln_factorial(m))).exp();
            beta.powu(k as u32) * (scale * damp * laguerre(n, k as f64, x))
        } else {
            let k = n - m;
            let scale = (0.5 * (ln_factorial(m) - ln_factorial(n))).exp();
            (-beta.conj()).powu(k as u32) * (scale * damp * laguerre(m, k as f64, x))
        }
    })
}

/// `D(β) ρ D(β)†` on `out_dim` levels. Errors if more than `1e-10` of the
/// displaced population falls beyond `out_dim`.
pub fn displace(state: &TruncatedState, beta: C64, out_dim: usize) -> Result<TruncatedState> {
    let d = displacement_matrix(beta, out_dim, state.dim());
    let m = &d * state.matrix() * d.adjoint();
    let lost = 1.0 - m.trace().re;
    if lost > 1e-10 {
        return Err(Error::Truncation {
            tail: lost,
            limit: 1e-10,
        });
    }
    TruncatedState::normalised(m)
}

fn complex_normal<R: Rng>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// `b|ψ⟩⟨ψ| + (1 − b) I/dim` for a random low-energy `ψ`.
///
/// `purity_bias = 1` gives a pure state and `0` the maximally mixed one.
pub fn random_state(dim: usize, purity_bias: f64, seed: u64) -> Result<TruncatedState> {
    if dim < 2 {
        return Err(Error::InvalidState("dim must be at least 2".into()));
    }
    if !(0.0..=1.0).contains(&purity_bias) {
        return Err(Error::Domain {
            what: "purity_bias",
            value: purity_bias,
            domain: "[0, 1]",
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let psi = DVector::from_fn(dim, |k, _| complex_normal(&mut rng) * (-(k as f64)).exp());
    let psi = &psi / C64::from(psi.norm());
    let mixed = DMatrix::<C64>::identity(dim, dim) * C64::from((1.0 - purity_bias) / dim as f64);
    TruncatedState::normalised(&psi * psi.adjoint() * C64::from(purity_bias) + mixed)
}

/// Shape of the near-coherent states drawn by [`random_physical_state`].
#[derive(Clone, Debug, PartialEq)]
pub struct OracleStateConfig {
    pub dim: usize,
    /// Levels carrying the undisplaced core state.
    pub core_dim: usize,
    /// Radius of the random displacement around the requested centre.
    pub jitter: f64,
    pub tail_limit: f64,
}

impl Default for OracleStateConfig {
    fn default() -> Self {
        Self {
            dim: DEFAULT_DIM,
            core_dim: 4,
            jitter: 0.7,
            tail_limit: TAIL_LIMIT,
        }
    }
}

/// A displaced, slightly mixed, slightly non-Gaussian state: the regime in
/// which the moment bounds are used. Every fourth draw is a displaced
/// `|0⟩ + c|2⟩` superposition, which nearly saturates the mixedness bound.
/// The displacement is drawn uniformly from the disc of radius
/// `cfg.jitter` around `centre`.
pub fn random_physical_state<R: Rng>(
    rng: &mut R,
    cfg: &OracleStateConfig,
    centre: C64,
) -> Result<TruncatedState> {
    for _ in 0..100 {
        let core = random_core(rng, cfg.core_dim)?;
        let radius = cfg.jitter * rng.random::<f64>().sqrt();
        let phase = std::f64::consts::TAU * rng.random::<f64>();
        let beta = centre + C64::from_polar(radius, phase);
        let state = match displace(&core, beta, cfg.dim) {
            Ok(s) => s,
            Err(Error::Truncation { .. }) => continue,
            Err(e) => return Err(e),
        };
        if state.check_tail(cfg.tail_limit).is_ok() {
            return Ok(state);
        }
    }
    Err(Error::InvalidConfig(
        "could not draw a tail-guarded state; lower the jitter".into(),
    ))
}

fn random_core<R: Rng>(rng: &mut R, core_dim: usize) -> Result<TruncatedState> {
    let log_uniform =
        |rng: &mut R, lo: f64, hi: f64| 10f64.powf(lo + (hi - lo) * rng.random::<f64>());
    if rng.random_range(0..4) == 0 {
        let mut psi = DVector::zeros(core_dim);
        psi[0] = C64::from(1.0);
        psi[2] = complex_normal(rng) * log_uniform(rng, -3.0, -0.7);
        return TruncatedState::pure(&psi);
    }
    let rank = rng.random_range(1..=3);
    let mut m = DMatrix::<C64>::zeros(core_dim, core_dim);
    for r in 0..rank {
        let spread = log_uniform(rng, -3.0, -0.5);
        let mut psi = DVector::from_fn(core_dim, |k, _| {
            if k == 0 && r == 0 {
                C64::from(1.0)
            } else {
                complex_normal(rng) * spread.powi(k as i32 + i32::from(r > 0))
            }
        });
        if r > 0 {
            psi[0] = complex_normal(rng) * 0.3;
        }
        let weight = if r == 0 {
            1.0
        } else {
            log_uniform(rng, -4.0, -1.0)
        };
        let norm = psi.norm();
        psi /= C64::from(norm);
        m += &psi * psi.adjoint() * C64::from(weight);
    }
    TruncatedState::normalised(m)
}

/// Draws a seeded state with [`random_physical_state`].
pub fn seeded_physical_state(
    seed: u64,
    cfg: &OracleStateConfig,
    centre: C64,
) -> Result<TruncatedState> {
    random_physical_state(&mut ChaCha8Rng::seed_from_u64(seed), cfg, centre)
}
