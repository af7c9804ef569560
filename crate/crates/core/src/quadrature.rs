//! Globally adaptive 15-point Gauss–Kronrod quadrature.
//!
//! Integrands may be vector valued (`[f64; N]`) so that several integrals
//! sharing expensive per-node work (densities, posteriors, the `g`
//! function) are computed from one set of nodes. Error estimates follow the
//! QUADPACK `qk15` rescaling.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Tolerances and limits for every integral over Bob's outcome `y`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Half-width of the integration window in conditional standard
    /// deviations beyond the outermost conditional mean.
    pub range_sigmas: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            range_sigmas: 10.0,
            max_subdivisions: 1 << 16,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(Error::InvalidConfig(
                "quadrature tolerances must be positive".into(),
            ));
        }
        if !(self.range_sigmas > 0.0) {
            return Err(Error::InvalidConfig("range_sigmas must be positive".into()));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::InvalidConfig(
                "max_subdivisions must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Result of a vector-valued integration.
#[derive(Clone, Copy, Debug)]
pub struct Estimate<const N: usize> {
    pub value: [f64; N],
    pub abs_error: [f64; N],
    pub subdivisions: usize,
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for XGK[1], XGK[3], XGK[5] and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

struct Panel<const N: usize> {
    a: f64,
    b: f64,
    value: [f64; N],
    error: [f64; N],
    priority: f64,
}

impl<const N: usize> PartialEq for Panel<N> {
    fn eq(&self, other: &Self) -> bool {
        self.priority.total_cmp(&other.priority) == Ordering::Equal
    }
}

impl<const N: usize> Eq for Panel<N> {}

impl<const N: usize> PartialOrd for Panel<N> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<const N: usize> Ord for Panel<N> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.priority.total_cmp(&other.priority)
    }
}

fn kronrod15<const N: usize, F>(f: &mut F, a: f64, b: f64) -> ([f64; N], [f64; N])
where
    F: FnMut(f64) -> [f64; N],
{
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);

    let fc = f(centre);
    let mut resk = [0.0; N];
    let mut resg = [0.0; N];
    let mut resabs = [0.0; N];
    let mut fvals: [([f64; N], [f64; N]); 7] = [([0.0; N], [0.0; N]); 7];
    for i in 0..N {
        resk[i] = fc[i] * WGK[7];
        resg[i] = fc[i] * WG[3];
        resabs[i] = fc[i].abs() * WGK[7];
    }
    for (j, fv) in fvals.iter_mut().enumerate() {
        let dx = half * XGK[j];
        let f1 = f(centre - dx);
        let f2 = f(centre + dx);
        for i in 0..N {
            let s = f1[i] + f2[i];
            resk[i] += WGK[j] * s;
            resabs[i] += WGK[j] * (f1[i].abs() + f2[i].abs());
            if j % 2 == 1 {
                resg[i] += WG[j / 2] * s;
            }
        }
        *fv = (f1, f2);
    }

    let mut value = [0.0; N];
    let mut error = [0.0; N];
    for i in 0..N {
        let mean = resk[i] * 0.5;
        let mut resasc = WGK[7] * (fc[i] - mean).abs();
        for (j, (f1, f2)) in fvals.iter().enumerate() {
            resasc += WGK[j] * ((f1[i] - mean).abs() + (f2[i] - mean).abs());
        }
        let resasc = resasc * half.abs();
        let resabs = resabs[i] * half.abs();
        let mut err = ((resk[i] - resg[i]) * half).abs();
        if resasc != 0.0 && err != 0.0 {
            err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
        }
        if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
            err = err.max(50.0 * f64::EPSILON * resabs);
        }
        value[i] = resk[i] * half;
        error[i] = err;
    }
    (value, error)
}

/// Integrates a vector-valued `f` over `[a, b]` until every component
/// satisfies `err <= max(abs_tol, rel_tol * |value|)`.
pub fn integrate_vec<const N: usize, F>(
    mut f: F,
    a: f64,
    b: f64,
    cfg: &QuadratureConfig,
) -> Result<Estimate<N>>
where
    F: FnMut(f64) -> [f64; N],
{
    if a == b {
        return Ok(Estimate {
            value: [0.0; N],
            abs_error: [0.0; N],
            subdivisions: 1,
        });
    }
    let tolerance = |value: &[f64; N], i: usize| cfg.abs_tol.max(cfg.rel_tol * value[i].abs());
    let badness = |err: &[f64; N], total: &[f64; N]| {
        (0..N)
            .map(|i| err[i] / tolerance(total, i))
            .fold(0.0, f64::max)
    };

    let (value, error) = kronrod15(&mut f, a, b);
    let mut total = value;
    let mut total_err = error;
    let mut heap = BinaryHeap::new();
    heap.push(Panel {
        a,
        b,
        value,
        error,
        priority: badness(&error, &value),
    });

    loop {
        if (0..N).all(|i| total_err[i] <= tolerance(&total, i)) {
            break;
        }
        if heap.len() >= cfg.max_subdivisions {
            return Err(Error::QuadratureNonConvergence {
                abs_error: total_err.iter().cloned().fold(0.0, f64::max),
                subdivisions: heap.len(),
            });
        }
        let worst = heap.pop().expect("heap holds at least one panel");
        let mid = 0.5 * (worst.a + worst.b);
        if !(worst.a < mid && mid < worst.b) {
            return Err(Error::QuadratureNonConvergence {
                abs_error: total_err.iter().cloned().fold(0.0, f64::max),
                subdivisions: heap.len() + 1,
            });
        }
        let (v1, e1) = kronrod15(&mut f, worst.a, mid);
        let (v2, e2) = kronrod15(&mut f, mid, worst.b);
        for i in 0..N {
            total[i] += v1[i] + v2[i] - worst.value[i];
            total_err[i] += e1[i] + e2[i] - worst.error[i];
        }
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
            priority: badness(&e1, &total),
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
            priority: badness(&e2, &total),
        });
    }

    // Re-sum to shed the drift of the running updates.
    let mut value = [0.0; N];
    let mut abs_error = [0.0; N];
    let subdivisions = heap.len();
    for panel in heap {
        for i in 0..N {
            value[i] += panel.value[i];
            abs_error[i] += panel.error[i];
        }
    }
    Ok(Estimate {
        value,
        abs_error,
        subdivisions,
    })
}

/// Scalar convenience wrapper returning `(value, estimated_abs_error)`.
pub fn integrate<F>(mut f: F, a: f64, b: f64, cfg: &QuadratureConfig) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> f64,
{
    let est = integrate_vec(|y| [f(y)], a, b, cfg)?;
    Ok((est.value[0], est.abs_error[0]))
}
