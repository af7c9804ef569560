//! `cvqkd`: simulate homodyne records, estimate their statistics, and
//! compute key-rate lower bounds for binary-modulated CV-QKD.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use cvqkd_core::keyrate::{default_alpha_grid, key_rate, optimize_alpha, BoundBreakdown};
use cvqkd_core::observation::eta_from_loss_db;
use cvqkd_core::records::{read_record_file, write_record_file};
use cvqkd_core::sweep::{run_sweep, write_sweep_csv, SweepSpec, REFERENCE_DELTAS};
use cvqkd_core::{
    conditional_from_params, estimate_statistics, sample_record, sift, ChannelParams,
    GaussianConditional, ObservedStatistics, QuadratureConfig, SearchConfig,
};

#[derive(Parser)]
#[command(
    name = "cvqkd",
    version,
    about = "Key-rate lower bounds for binary-modulated CV-QKD"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a homodyne record and write it as CSV (`x,basis,y`).
    Simulate(SimulateArgs),
    /// Estimate conditional moments from a record file and print JSON.
    Estimate(EstimateArgs),
    /// Compute one key-rate breakdown as JSON.
    Keyrate(KeyrateArgs),
    /// Sweep loss × excess noise and write CSV.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct ChannelArgs {
    /// Channel transmission in (0, 1].
    #[arg(long, conflicts_with = "loss_db")]
    eta: Option<f64>,
    /// Channel loss in dB; eta = 10^(-loss/10).
    #[arg(long)]
    loss_db: Option<f64>,
    /// Excess noise relative to the vacuum variance.
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
    /// Factor on the conditional mean sqrt(eta)·alpha.
    #[arg(long, default_value_t = 1.0)]
    mean_scale: f64,
}

impl ChannelArgs {
    fn eta(&self) -> Result<Option<f64>> {
        match (self.eta, self.loss_db) {
            (Some(eta), None) => Ok(Some(eta)),
            (None, Some(loss)) => {
                if !(loss >= 0.0) {
                    bail!("--loss-db must be >= 0");
                }
                Ok(Some(eta_from_loss_db(loss)))
            }
            (None, None) => Ok(None),
            (Some(_), Some(_)) => unreachable!("clap enforces exclusivity"),
        }
    }

    fn params(&self, alpha: f64) -> Result<ChannelParams> {
        let eta = self
            .eta()?
            .context("one of --eta or --loss-db is required")?;
        Ok(ChannelParams::new(alpha, eta, self.delta)?.with_mean_scale(self.mean_scale)?)
    }
}

#[derive(Args)]
struct SearchArgs {
    /// Error-correction efficiency (>= 1).
    #[arg(long, default_value_t = 1.0)]
    f_ec: f64,
    /// Grid points per epsilon axis.
    #[arg(long, default_value_t = 40)]
    n_eps: usize,
    /// Grid points per gamma interval.
    #[arg(long, default_value_t = 20)]
    n_gamma: usize,
    /// Signal amplitudes to optimise over: `start:stop:step` or a comma list.
    #[arg(long, value_parser = parse_grid)]
    alpha_grid: Option<Grid>,
    /// Tie the interior parameters of both bit values (default).
    #[arg(long, overrides_with = "asymmetric")]
    symmetric: bool,
    /// Search both bit values' interior parameters independently.
    #[arg(long, overrides_with = "symmetric")]
    asymmetric: bool,
}

impl SearchArgs {
    fn config(&self) -> SearchConfig {
        SearchConfig {
            n_eps: self.n_eps,
            n_gamma: self.n_gamma,
            alpha_grid: self
                .alpha_grid
                .clone()
                .map_or_else(default_alpha_grid, |g| g.0),
            symmetric: !self.asymmetric,
            f_ec: self.f_ec,
            ..SearchConfig::default()
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    alpha: f64,
    #[command(flatten)]
    channel: ChannelArgs,
    /// Number of protocol rounds.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EstimateArgs {
    /// Record CSV with header `x,basis,y`.
    record: PathBuf,
    /// Write JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct KeyrateArgs {
    /// Signal amplitude. Required with --stats; optimised over the grid
    /// when omitted with channel parameters.
    #[arg(long)]
    alpha: Option<f64>,
    #[command(flatten)]
    channel: ChannelArgs,
    /// Statistics JSON as printed by `estimate`.
    #[arg(long, conflicts_with_all = ["eta", "loss_db"])]
    stats: Option<PathBuf>,
    #[command(flatten)]
    search: SearchArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Loss values in dB: `start:stop:step` or a comma list.
    #[arg(long, value_parser = parse_grid, default_value = "0:25:1")]
    loss_db_grid: Grid,
    /// Excess-noise values (comma list); defaults to the reference set.
    #[arg(long, value_parser = parse_grid)]
    deltas: Option<Grid>,
    #[arg(long, default_value_t = 1.0)]
    mean_scale: f64,
    #[command(flatten)]
    search: SearchArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// A list of values given as one argument.
#[derive(Clone, Debug, PartialEq)]
struct Grid(Vec<f64>);

/// Parses `start:stop:step` (inclusive) or `a,b,c`.
fn parse_grid(s: &str) -> std::result::Result<Grid, String> {
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| format!("`{t}` is not a number"))
    };
    if let Some((start, rest)) = s.split_once(':') {
        let (stop, step) = rest
            .split_once(':')
            .ok_or("range must be start:stop:step")?;
        let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
        if !(step > 0.0) || stop < start {
            return Err("range needs step > 0 and stop >= start".into());
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        return Ok(Grid((0..count).map(|i| start + step * i as f64).collect()));
    }
    let values = s
        .split(',')
        .map(num)
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if values.is_empty() {
        return Err("empty list".into());
    }
    Ok(Grid(values))
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit_json(value: &Value, out: Option<&Path>) -> Result<()> {
    let mut w = open_output(out)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn simulate(args: &SimulateArgs) -> Result<()> {
    let params = args.channel.params(args.alpha)?;
    let record = sample_record(
        &conditional_from_params(&params),
        args.n as usize,
        args.seed,
    );
    write_record_file(&args.out, &record)?;
    Ok(())
}

fn estimate(args: &EstimateArgs) -> Result<()> {
    let record = read_record_file(&args.record)?;
    let (key, test) = sift(&record);
    let stats = estimate_statistics(&key, &test)
        .with_context(|| format!("estimating statistics from {}", args.record.display()))?;
    emit_json(&serde_json::to_value(&stats)?, args.out.as_deref())
}

fn breakdown_json(b: &BoundBreakdown, eta: Option<f64>) -> Result<Value> {
    let mut v = serde_json::to_value(b)?;
    let obj = v
        .as_object_mut()
        .expect("breakdown serialises to an object");
    obj.insert("G_floored".into(), json!(b.g_floored()));
    let status = if b.diverged() {
        "no certifiable key"
    } else if b.G > 0.0 {
        "key certified"
    } else {
        "no positive key"
    };
    obj.insert("status".into(), json!(status));
    if let Some(eta) = eta {
        obj.insert("eta".into(), json!(eta));
        obj.insert("loss_db".into(), json!(-10.0 * eta.log10()));
    }
    Ok(v)
}

fn keyrate(args: &KeyrateArgs) -> Result<()> {
    let cfg = args.search.config();
    let quad = QuadratureConfig::default();
    let (breakdown, eta) = if let Some(path) = &args.stats {
        let alpha = args.alpha.context("--alpha is required with --stats")?;
        let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
        let stats: ObservedStatistics = serde_json::from_reader(io::BufReader::new(file))
            .with_context(|| format!("cannot parse statistics in {}", path.display()))?;
        stats.validate()?;
        let dist = GaussianConditional::from_statistics(&stats)?;
        (key_rate(&stats, &dist, alpha, &cfg, &quad)?, None)
    } else {
        let eta = args
            .channel
            .eta()?
            .context("give --stats or one of --eta / --loss-db")?;
        let b = match args.alpha {
            Some(alpha) => {
                let params = args.channel.params(alpha)?;
                cvqkd_core::keyrate::key_rate_for_params(&params, &cfg, &quad)?
            }
            None => optimize_alpha(&args.channel.params(0.0)?, &cfg, &quad)?,
        };
        (b, Some(eta))
    };
    emit_json(&breakdown_json(&breakdown, eta)?, args.out.as_deref())
}

fn sweep(args: &SweepArgs) -> Result<()> {
    let spec = SweepSpec {
        loss_db_grid: args.loss_db_grid.0.clone(),
        delta_list: args
            .deltas
            .clone()
            .map_or_else(|| REFERENCE_DELTAS.to_vec(), |g| g.0),
        mean_scale: args.mean_scale,
        search: args.search.config(),
        quad: QuadratureConfig::default(),
    };
    let rows = run_sweep(&spec)?;
    let mut w = open_output(args.out.as_deref())?;
    write_sweep_csv(&mut w, &rows)?;
    w.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Estimate(a) => estimate(a),
        Command::Keyrate(a) => keyrate(a),
        Command::Sweep(a) => sweep(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        assert_eq!(
            parse_grid("0:1:0.25").unwrap().0,
            vec![0.0, 0.25, 0.5, 0.75, 1.0]
        );
        assert_eq!(parse_grid("0:25:1").unwrap().0.len(), 26);
        assert_eq!(parse_grid("0.1, 0.3").unwrap().0, vec![0.1, 0.3]);
        assert!(parse_grid("1:0:1").is_err());
        assert!(parse_grid("a,b").is_err());
        assert!(parse_grid("0:1").is_err());
    }

    fn breakdown(s_max: f64, g: f64) -> BoundBreakdown {
        use cvqkd_core::{EpsilonPoint, InteriorPoint, MomentBounds, Overlap, SearchOutcome};
        let argmax = InteriorPoint::new(EpsilonPoint::symmetric(0.01, 0.005), Overlap::ONE);
        BoundBreakdown {
            I_xy: 0.5,
            I_announced: 0.5,
            V_x: [0.0; 2],
            S_E_given_X: 0.0,
            s_max,
            S_YE_bound: s_max,
            G: g,
            argmax,
            alpha_used: 0.5,
            f_ec: 1.0,
            moments: MomentBounds {
                u: [0.01; 2],
                kappa: Overlap::new(0.6).unwrap(),
                input_overlap: Overlap::new(0.6).unwrap(),
            },
            search: SearchOutcome {
                s_max,
                argmax,
                argmax_at_lower_end: true,
                eps_points: 1,
                infeasible_points: 0,
                grid_points: 1,
                diverged_points: 1,
                exact_evaluations: 0,
            },
        }
    }

    #[test]
    fn report_status_and_floor() {
        let v = breakdown_json(&breakdown(f64::INFINITY, f64::NEG_INFINITY), None).unwrap();
        assert_eq!(v["status"], "no certifiable key");
        assert_eq!(v["G_floored"], 0.0);
        assert!(v["G"].is_null());

        let v = breakdown_json(&breakdown(0.3, 0.2), Some(0.5)).unwrap();
        assert_eq!(v["status"], "key certified");
        assert_eq!(v["G_floored"], 0.2);
        assert!((v["loss_db"].as_f64().unwrap() - 3.0103).abs() < 1e-4);

        let v = breakdown_json(&breakdown(0.6, -0.1), None).unwrap();
        assert_eq!(v["status"], "no positive key");
        assert_eq!(v["G_floored"], 0.0);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
