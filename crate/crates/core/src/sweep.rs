//! Loss × excess-noise sweeps with per-row amplitude optimisation.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::keyrate::{optimize_alpha, BoundBreakdown, SearchConfig};
use crate::observation::{eta_from_loss_db, ChannelParams};
use crate::quadrature::QuadratureConfig;
use crate::{Error, Result};

/// Excess-noise levels of the reference noise-sensitivity study.
pub const REFERENCE_DELTAS: [f64; 7] = [0.0, 0.0004, 0.0008, 0.0012, 0.0016, 0.0020, 0.0024];

pub const CSV_COLUMNS: [&str; 13] = [
    "loss_db",
    "eta",
    "delta",
    "alpha_opt",
    "G",
    "G_floored",
    "I_xy",
    "S_E_given_X",
    "s_max",
    "gamma_star",
    "eps_star",
    "eps_tilde_star",
    "error",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub loss_db_grid: Vec<f64>,
    pub delta_list: Vec<f64>,
    pub mean_scale: f64,
    pub search: SearchConfig,
    pub quad: QuadratureConfig,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            loss_db_grid: (0..=25).map(f64::from).collect(),
            delta_list: REFERENCE_DELTAS.to_vec(),
            mean_scale: 1.0,
            search: SearchConfig::default(),
            quad: QuadratureConfig::default(),
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.loss_db_grid.is_empty() || self.delta_list.is_empty() {
            return Err(Error::InvalidConfig("sweep grids must be nonempty".into()));
        }
        if let Some(l) = self
            .loss_db_grid
            .iter()
            .find(|l| !(**l >= 0.0 && l.is_finite()))
        {
            return Err(Error::InvalidConfig(format!("loss {l} dB is not >= 0")));
        }
        if let Some(d) = self
            .delta_list
            .iter()
            .find(|d| !(**d >= 0.0 && d.is_finite()))
        {
            return Err(Error::InvalidConfig(format!("delta {d} is not >= 0")));
        }
        self.search.validate()?;
        self.quad.validate()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub loss_db: f64,
    pub eta: f64,
    pub delta: f64,
    pub outcome: std::result::Result<BoundBreakdown, String>,
}

impl SweepRow {
    pub fn g_floored(&self) -> Option<f64> {
        self.outcome.as_ref().ok().map(BoundBreakdown::g_floored)
    }
}

fn evaluate(spec: &SweepSpec, loss_db: f64, delta: f64) -> SweepRow {
    let eta = eta_from_loss_db(loss_db);
    let outcome = ChannelParams::new(0.0, eta, delta)
        .and_then(|p| p.with_mean_scale(spec.mean_scale))
        .and_then(|p| optimize_alpha(&p, &spec.search, &spec.quad))
        .map_err(|e| e.to_string());
    SweepRow {
        loss_db,
        eta,
        delta,
        outcome,
    }
}

/// Evaluates every `(loss, δ)` pair in parallel. Rows come back sorted by
/// `(loss_db, delta)`; a failing row carries its error and does not stop
/// the sweep.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let jobs: Vec<(f64, f64)> = spec
        .loss_db_grid
        .iter()
        .flat_map(|&l| spec.delta_list.iter().map(move |&d| (l, d)))
        .collect();
    let mut rows: Vec<SweepRow> = jobs
        .par_iter()
        .map(|&(l, d)| evaluate(spec, l, d))
        .collect();
    rows.sort_by(|a, b| {
        a.loss_db
            .total_cmp(&b.loss_db)
            .then(a.delta.total_cmp(&b.delta))
    });
    Ok(rows)
}

fn pair(v: [f64; 2]) -> String {
    if v[0] == v[1] {
        v[0].to_string()
    } else {
        format!("{};{}", v[0], v[1])
    }
}

pub fn write_sweep_csv<W: Write>(writer: W, rows: &[SweepRow]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(CSV_COLUMNS)?;
    for row in rows {
        let head = [
            row.loss_db.to_string(),
            row.eta.to_string(),
            row.delta.to_string(),
        ];
        let tail: Vec<String> = match &row.outcome {
            Ok(b) => vec![
                b.alpha_used.to_string(),
                b.G.to_string(),
                b.g_floored().to_string(),
                b.I_xy.to_string(),
                b.S_E_given_X.to_string(),
                b.s_max.to_string(),
                b.argmax.gamma.value().to_string(),
                pair(b.argmax.eps),
                pair(b.argmax.eps_tilde),
                String::new(),
            ],
            Err(e) => {
                let mut v = vec![String::new(); 9];
                v.push(e.clone());
                v
            }
        };
        csv.write_record(head.iter().chain(tail.iter()))?;
    }
    csv.flush().map_err(csv::Error::from)?;
    Ok(())
}
