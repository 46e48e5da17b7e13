//! `cvsense`: curves, Monte Carlo campaigns, optimizer runs and
//! Fisher-information reports for distributed displacement sensing.
//!
//! Every run writes a CSV to `--out` and a JSON manifest to
//! `<out>.manifest.json`; `cvsense replay <manifest>` regenerates the CSV and
//! checks its digest.

mod commands;
mod config;
mod error;
mod grid;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use commands::curves::{loss_grid, NodeSweep, PhotonBudget, RatioCurveParams, RatioSweep, RmsCurveParams};
use commands::fisher::{default_steps, random_points, FisherParams, FisherPoint, FisherTable};
use commands::phase::PhaseParams;
use commands::weighted::{WeightedCase, WeightedParams};
use commands::Job;
use cvsense::protocols::Scheme;
use error::{CliError, Result};
use output::RunManifest;

#[derive(Parser)]
#[command(name = "cvsense", version, about = "Distributed squeezed-light sensing: curves, campaigns and reports")]
struct Cli {
    /// Worker threads for Monte Carlo and grid searches.
    #[arg(long, global = true, env = "CVSENSE_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// rms error vs number of nodes (CSV: M,delta_alpha,scheme,eta,n_S).
    RmsCurve(RmsCurveArgs),
    /// Product/entangled sensitivity ratio in dB vs nodes or vs loss.
    RatioCurve(RatioCurveArgs),
    /// Monte Carlo campaigns checked against the closed forms.
    MonteCarlo(MonteCarloArgs),
    /// Weighted-sum estimation: allocation and weight optimization.
    Weighted(WeightedArgs),
    /// Fisher information or Cramér-Rao bound tables.
    Fisher(FisherArgs),
    /// Mach-Zehnder phase-sensing campaigns over a phase sweep.
    Phase(PhaseArgs),
    /// Re-run a manifest and compare the output digest.
    Replay(ReplayArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeChoice {
    Entangled,
    Product,
    Both,
}

impl SchemeChoice {
    fn schemes(self) -> Vec<Scheme> {
        match self {
            SchemeChoice::Entangled => vec![Scheme::Entangled],
            SchemeChoice::Product => vec![Scheme::Product],
            SchemeChoice::Both => vec![Scheme::Entangled, Scheme::Product],
        }
    }
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    m_min: Option<usize>,
    #[arg(long)]
    m_max: Option<usize>,
    #[arg(long, default_value_t = 20)]
    points_per_decade: usize,
}

impl SweepArgs {
    fn resolve(&self, m_min: usize, m_max: usize) -> NodeSweep {
        NodeSweep {
            m_min: self.m_min.unwrap_or(m_min),
            m_max: self.m_max.unwrap_or(m_max),
            points_per_decade: self.points_per_decade,
        }
    }
}

#[derive(Args)]
struct RmsCurveArgs {
    #[arg(long, value_enum, default_value = "both")]
    scheme: SchemeChoice,
    /// Transmissivities, comma-separated.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    eta: Vec<f64>,
    /// Photons per node n_S (N_S = n_S M); the default mode.
    #[arg(long, conflicts_with = "total_photons")]
    n_per_node: Option<f64>,
    /// Fixed total photon number N_S at every M.
    #[arg(long)]
    total_photons: Option<f64>,
    #[command(flatten)]
    sweep: SweepArgs,
    /// Allow sweeps with more than 1e4 photons.
    #[arg(long)]
    no_cap: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum RatioMode {
    VsM,
    VsLoss,
}

#[derive(Args)]
struct RatioCurveArgs {
    #[arg(long, value_enum, default_value = "vs-m")]
    mode: RatioMode,
    #[arg(long, default_value_t = 10.0)]
    total_photons: f64,
    /// vs-m: fixed transmissivities; vs-loss: explicit transmissivities
    /// replacing the loss grid.
    #[arg(long, value_delimiter = ',')]
    eta: Option<Vec<f64>>,
    /// vs-loss: fixed node counts.
    #[arg(long, value_delimiter = ',', default_value = "5,10,20,50,100,1000")]
    m: Vec<usize>,
    #[command(flatten)]
    sweep: SweepArgs,
    /// vs-loss: largest loss in dB.
    #[arg(long, default_value_t = 10.0)]
    loss_db_max: f64,
    #[arg(long, default_value_t = 101)]
    loss_points: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MonteCarloArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides every case's `trials`.
    #[arg(long)]
    trials: Option<u64>,
    /// Overrides every case's `seed`.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct WeightedArgs {
    #[arg(long, conflicts_with_all = ["eta", "total_photons", "weights"])]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    eta: Option<Vec<f64>>,
    #[arg(long)]
    total_photons: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    weights: Option<Vec<f64>>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum FisherTableChoice {
    Info,
    Cr,
}

#[derive(Args)]
struct FisherArgs {
    #[arg(long, value_enum, default_value = "info")]
    table: FisherTableChoice,
    /// info: random draws after the vacuum row.
    #[arg(long, default_value_t = 20)]
    draws: usize,
    /// info: explicit point `r_B,n,theta,eta` (repeatable) instead of draws.
    #[arg(long)]
    point: Vec<String>,
    /// info: finite-difference steps, decreasing.
    #[arg(long, value_delimiter = ',')]
    steps: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// cr: node counts.
    #[arg(long, value_delimiter = ',', default_value = "1,2,5,10,20,50,100,1000")]
    m: Vec<usize>,
    /// cr: total photon numbers.
    #[arg(long, value_delimiter = ',', default_value = "0,0.5,1,10,100")]
    total_photons: Vec<f64>,
    /// cr: transmissivities.
    #[arg(long, value_delimiter = ',', default_value = "0.5,0.9,1")]
    eta: Vec<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PhaseArgs {
    #[arg(long, conflicts_with_all = ["m", "total_photons", "probe_photons", "eta", "dphi"])]
    config: Option<PathBuf>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    total_photons: Option<f64>,
    #[arg(long)]
    probe_photons: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    dphi: Option<Vec<f64>>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReplayArgs {
    manifest: PathBuf,
    /// Where to write the regenerated CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn require<T>(value: Option<T>, flag: &str) -> Result<T> {
    value.ok_or_else(|| CliError::Usage(format!("--{flag} is required without --config")))
}

fn parse_point(text: &str) -> Result<FisherPoint> {
    let v: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("--point `{text}`: expected four numbers r_B,n,theta,eta")))?;
    match v[..] {
        [r_b, n, theta, eta] => Ok(FisherPoint { r_b, n, theta, eta }),
        _ => Err(CliError::Usage(format!("--point `{text}`: expected four numbers r_B,n,theta,eta"))),
    }
}

fn build_job(command: Command) -> Result<(Job, PathBuf)> {
    Ok(match command {
        Command::RmsCurve(a) => {
            let budget = match (a.n_per_node, a.total_photons) {
                (_, Some(n)) => PhotonBudget::Total(n),
                (n, None) => PhotonBudget::PerNode(n.unwrap_or(1.0)),
            };
            let params = RmsCurveParams {
                schemes: a.scheme.schemes(),
                etas: a.eta,
                budget,
                sweep: a.sweep.resolve(10, 10_000),
                no_cap: a.no_cap,
            };
            (Job::RmsCurve(params), a.out)
        }
        Command::RatioCurve(a) => {
            let sweep = match a.mode {
                RatioMode::VsM => RatioSweep::VsM {
                    etas: a.eta.unwrap_or_else(|| vec![0.5, 0.8, 0.9, 0.95, 0.99, 1.0]),
                    sweep: a.sweep.resolve(1, 1_000),
                },
                RatioMode::VsLoss => RatioSweep::VsLoss {
                    nodes: a.m,
                    etas: a.eta.unwrap_or_else(|| loss_grid(a.loss_db_max, a.loss_points)),
                },
            };
            let params = RatioCurveParams {
                total_photons: a.total_photons,
                sweep,
            };
            (Job::RatioCurve(params), a.out)
        }
        Command::MonteCarlo(a) => (
            Job::MonteCarlo(commands::monte_carlo::load(&a.config, a.trials, a.seed)?),
            a.out,
        ),
        Command::Weighted(a) => {
            let params = match a.config {
                Some(path) => commands::weighted::load(&path)?,
                None => WeightedParams {
                    cases: vec![WeightedCase {
                        etas: require(a.eta, "eta")?,
                        total_photons: require(a.total_photons, "total-photons")?,
                        weights: a.weights,
                    }],
                },
            };
            (Job::Weighted(params), a.out)
        }
        Command::Fisher(a) => {
            let table = match a.table {
                FisherTableChoice::Info => {
                    let points = if a.point.is_empty() {
                        random_points(a.draws, a.seed)
                    } else {
                        a.point.iter().map(|p| parse_point(p)).collect::<Result<_>>()?
                    };
                    FisherTable::Info {
                        points,
                        steps: a.steps.unwrap_or_else(default_steps),
                    }
                }
                FisherTableChoice::Cr => FisherTable::Cr {
                    nodes: a.m,
                    photons: a.total_photons,
                    etas: a.eta,
                },
            };
            let seed = matches!(a.table, FisherTableChoice::Info).then_some(a.seed);
            (Job::Fisher(FisherParams { seed, table }), a.out)
        }
        Command::Phase(a) => {
            let params = match a.config {
                Some(path) => commands::phase::load(&path, a.trials, a.seed)?,
                None => PhaseParams {
                    num_nodes: require(a.m, "m")?,
                    total_photons: require(a.total_photons, "total-photons")?,
                    probe_photons: require(a.probe_photons, "probe-photons")?,
                    eta: a.eta.unwrap_or(1.0),
                    phase_shifts: require(a.dphi, "dphi")?,
                    trials: a.trials.unwrap_or(commands::phase::DEFAULT_TRIALS) as usize,
                    seed: a.seed.unwrap_or(0),
                },
            };
            (Job::Phase(params), a.out)
        }
        Command::Replay(_) => unreachable!("replay is dispatched separately"),
    })
}

fn replay(args: ReplayArgs) -> Result<()> {
    let manifest = RunManifest::load(&args.manifest)?;
    let job = Job::from_parts(&manifest.command, manifest.params.clone())?;
    if manifest.tool_version != env!("CARGO_PKG_VERSION") {
        eprintln!(
            "warning: manifest written by version {}, replaying with {}",
            manifest.tool_version,
            env!("CARGO_PKG_VERSION")
        );
    }
    let table = job.run()?;
    let digest = match &args.out {
        Some(out) => output::write_csv_only(out, &table)?,
        None => output::sha256_hex(&output::render_csv(&table)?),
    };
    if digest != manifest.output_sha256 {
        return Err(CliError::Validation(format!(
            "replay of {} produced digest {digest}, manifest records {}",
            args.manifest.display(),
            manifest.output_sha256
        )));
    }
    println!("replay ok: {} {}", manifest.command, digest);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(CliError::Usage("thread count must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    }
    if let Command::Replay(args) = cli.command {
        return replay(args);
    }
    let (job, out) = build_job(cli.command)?;
    let table = job.run()?;
    let manifest = output::write_outputs(&out, &job, &table)?;
    for w in &table.warnings {
        eprintln!("warning: {w}");
    }
    for n in &table.notes {
        eprintln!("note: {n}");
    }
    eprintln!(
        "wrote {} rows to {} (sha256 {})",
        table.rows.len(),
        out.display(),
        manifest.output_sha256
    );
    if !table.failures.is_empty() {
        return Err(CliError::Validation(table.failures.join("; ")));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
