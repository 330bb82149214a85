//! Command-line front end for `netsync`.
//!
//! `run` parses arguments, resolves them into a [`config::RunConfig`],
//! executes it and maps failures to exit codes: 0 success, 1 usage or
//! validation error, 2 numerical failure.

pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use config::{
    parse_grid, parse_lorenz, parse_matrix_rows, parse_pair, ColormapConfig, CriticalConfig,
    GraphConfig, GraphSource, InitialConfig, PersistenceConfig, PerturbationConfig, RunConfig,
    SimulateConfig, SpectrumConfig, SweepConfig, SystemConfig,
};
use netsync_core::EtaConvention;

/// Environment variable that fixes the worker thread count.
pub const THREADS_ENV: &str = "NETSYNC_THREADS";

pub const SYNOPSIS: &str = "\
usage: netsync <command> [options]
commands:
  spectrum     Laplacian spectrum of a graph
  critical     critical coupling report (JSON)
  simulate     integrate a coupled network (trajectory CSV, final sync error)
  sweep        time-averaged sync error over an alpha grid (CSV, PGM)
  colormap     sync error over an (alpha, xi) grid (CSV, PGM)
  persistence  persistence bound for a perturbed edge (JSON)
  replay       re-run a command from its JSON config echo
run `netsync <command> --help` for options";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] netsync_core::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numerical() => 2,
            _ => 1,
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "netsync",
    version,
    about = "Synchronization analysis for networks of coupled Lorenz oscillators"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Laplacian spectrum, with the closed-form λ₂ for regular families.
    Spectrum(GraphArgs),
    /// β, λ₂, μ₁ and the critical coupling α_c as JSON.
    Critical(CriticalArgs),
    /// Integrate the network and report the final synchronization error.
    Simulate(SimulateArgs),
    /// Time-averaged synchronization error over an α grid.
    Sweep(SweepArgs),
    /// Time-averaged synchronization error over an (α, ξ) grid.
    Colormap(ColormapArgs),
    /// Persistence bound for a perturbation on one edge.
    Persistence(PersistenceArgs),
    /// Re-run a command from a JSON config echo (or a full JSON output).
    Replay { config: PathBuf },
}

#[derive(Args, Debug)]
struct GraphArgs {
    /// complete:n, star:n, path:n, ring:n, er:n:p, ws:n:k:p or ba:n:m.
    #[arg(
        long,
        required_unless_present = "graph_file",
        conflicts_with = "graph_file"
    )]
    graph: Option<String>,
    /// Edge-list file: first line n, then one `u v` pair per line.
    #[arg(long)]
    graph_file: Option<PathBuf>,
    /// Seed for the random graph families.
    #[arg(long)]
    seed: Option<u64>,
}

impl GraphArgs {
    fn resolve(&self) -> GraphConfig {
        let source = match (&self.graph, &self.graph_file) {
            (Some(spec), _) => GraphSource::Spec(spec.clone()),
            (None, Some(path)) => GraphSource::File(path.clone()),
            (None, None) => unreachable!("clap requires one graph source"),
        };
        GraphConfig {
            source,
            seed: self.seed,
        }
    }
}

#[derive(Args, Debug)]
struct SystemArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// `classic` or `sigma,r,b`.
    #[arg(long, default_value = "classic")]
    lorenz: String,
    /// Inner coupling: `identity` or rows `a,b,c;d,e,f;g,h,i`.
    #[arg(long = "H", default_value = "identity")]
    h: String,
}

impl SystemArgs {
    fn resolve(&self) -> Result<SystemConfig, CliError> {
        let h = parse_matrix_rows(&self.h, "--H")?;
        config::coupling_from_rows(&h)?;
        Ok(SystemConfig {
            graph: self.graph.resolve(),
            lorenz: parse_lorenz(&self.lorenz)?,
            h,
        })
    }
}

#[derive(Args, Debug)]
struct InitialArgs {
    /// State of vertex 0.
    #[arg(long, default_value = "-7,10,5", allow_hyphen_values = true)]
    ic_base: String,
    /// Euclidean distance between consecutive vertices' initial states.
    #[arg(long, default_value_t = 0.014)]
    ic_spread: f64,
}

impl InitialArgs {
    fn resolve(&self) -> Result<InitialConfig, CliError> {
        Ok(InitialConfig {
            base: config::parse_list(&self.ic_base, "--ic-base")?,
            spread: self.ic_spread,
        })
    }
}

#[derive(Args, Debug)]
struct PerturbationArgs {
    /// Perturbed edge `i,j`.
    #[arg(long, default_value = "0,1")]
    edge: String,
    /// Perturbation matrix rows `a,b,c;d,e,f;g,h,i`, scaled by ξ.
    #[arg(long, allow_hyphen_values = true)]
    shape: Option<String>,
    /// Modulate the perturbation by cos(ωt).
    #[arg(long)]
    omega: Option<f64>,
}

impl PerturbationArgs {
    fn resolve(&self) -> Result<Option<PerturbationConfig>, CliError> {
        let Some(shape) = &self.shape else {
            return Ok(None);
        };
        Ok(Some(PerturbationConfig {
            edge: parse_pair(&self.edge, "--edge")?,
            shape: parse_matrix_rows(shape, "--shape")?,
            omega: self.omega,
        }))
    }

    fn require(&self) -> Result<PerturbationConfig, CliError> {
        self.resolve()?
            .ok_or_else(|| CliError::Usage("--shape is required".into()))
    }
}

#[derive(Args, Debug)]
struct CriticalArgs {
    #[command(flatten)]
    system: SystemArgs,
    /// Also report η at this coupling strength.
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[arg(long, allow_hyphen_values = true)]
    alpha: f64,
    #[arg(long, default_value_t = netsync_core::netsim::DEFAULT_DT)]
    dt: f64,
    #[arg(long, default_value_t = 100.0)]
    tmax: f64,
    /// Keep every `stride`-th step in the trajectory CSV.
    #[arg(long, default_value_t = 100)]
    stride: usize,
    #[command(flatten)]
    initial: InitialArgs,
    #[command(flatten)]
    perturbation: PerturbationArgs,
    /// Perturbation amplitude ξ (with --shape).
    #[arg(long, allow_hyphen_values = true)]
    xi: Option<f64>,
    /// Trajectory CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    system: SystemArgs,
    /// `start:stop:step` or a comma list.
    #[arg(long)]
    alphas: String,
    #[arg(long, default_value_t = netsync_core::netsim::DEFAULT_DT)]
    dt: f64,
    /// Averaging window `lo,hi`.
    #[arg(long, default_value = "1000,2000")]
    window: String,
    /// Integration horizon; defaults to the end of the window.
    #[arg(long)]
    tmax: Option<f64>,
    #[command(flatten)]
    initial: InitialArgs,
    /// Grid CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Greyscale PGM path.
    #[arg(long)]
    pgm: Option<PathBuf>,
    /// JSON path for the PGM's scale and axis metadata.
    #[arg(long)]
    pgm_meta: Option<PathBuf>,
}

impl SweepArgs {
    fn resolve(&self) -> Result<SweepConfig, CliError> {
        let window: (f64, f64) = parse_pair(&self.window, "--window")?;
        Ok(SweepConfig {
            system: self.system.resolve()?,
            alphas: parse_grid(&self.alphas, "--alphas")?,
            dt: self.dt,
            window,
            tmax: self.tmax.unwrap_or(window.1),
            initial: self.initial.resolve()?,
            out: self.out.clone(),
            pgm: self.pgm.clone(),
            pgm_meta: self.pgm_meta.clone(),
        })
    }
}

#[derive(Args, Debug)]
struct ColormapArgs {
    #[command(flatten)]
    sweep: SweepArgs,
    /// ξ grid: `start:stop:step` or a comma list.
    #[arg(long, allow_hyphen_values = true)]
    xis: String,
    #[command(flatten)]
    perturbation: PerturbationArgs,
}

#[derive(Args, Debug)]
struct PersistenceArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[arg(long, allow_hyphen_values = true)]
    alpha: f64,
    /// Perturbation amplitude ξ.
    #[arg(long, allow_hyphen_values = true)]
    xi: f64,
    #[command(flatten)]
    perturbation: PerturbationArgs,
    /// `per-mode` (η = α − α_c) or `general` (η = αλ₂μ₁ − β).
    #[arg(long, default_value = "per-mode")]
    convention: String,
    #[arg(long, default_value_t = 1.0)]
    kappa: f64,
}

fn resolve(command: Command) -> Result<RunConfig, CliError> {
    Ok(match command {
        Command::Spectrum(g) => RunConfig::Spectrum(SpectrumConfig { graph: g.resolve() }),
        Command::Critical(a) => RunConfig::Critical(CriticalConfig {
            system: a.system.resolve()?,
            alpha: a.alpha,
        }),
        Command::Simulate(a) => {
            let perturbation = match (a.perturbation.resolve()?, a.xi) {
                (Some(p), Some(xi)) => Some((p, xi)),
                (None, None) => None,
                _ => return Err(CliError::Usage("--shape and --xi go together".into())),
            };
            RunConfig::Simulate(SimulateConfig {
                system: a.system.resolve()?,
                alpha: a.alpha,
                dt: a.dt,
                tmax: a.tmax,
                stride: a.stride,
                initial: a.initial.resolve()?,
                perturbation,
                out: a.out,
            })
        }
        Command::Sweep(a) => RunConfig::Sweep(a.resolve()?),
        Command::Colormap(a) => RunConfig::Colormap(ColormapConfig {
            sweep: a.sweep.resolve()?,
            xis: parse_grid(&a.xis, "--xis")?,
            perturbation: a.perturbation.require()?,
        }),
        Command::Persistence(a) => RunConfig::Persistence(PersistenceConfig {
            system: a.system.resolve()?,
            alpha: a.alpha,
            xi: a.xi,
            perturbation: a.perturbation.require()?,
            convention: a
                .convention
                .parse::<EtaConvention>()
                .map_err(|e| CliError::Usage(e.to_string()))?,
            kappa: a.kappa,
        }),
        Command::Replay { config } => {
            let text = std::fs::read_to_string(&config)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", config.display())))?;
            RunConfig::from_json(&text)?
        }
    })
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| {
            CliError::Usage(format!(
                "{THREADS_ENV} must be a positive integer, got {value:?}"
            ))
        })?;
    // a pool built earlier in this process wins; that only happens in tests
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global();
    Ok(())
}

/// Runs one command, writing results to `out` and diagnostics to `err`.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 {
                write!(out, "{rendered}")
            } else {
                write!(err, "{rendered}")
            };
            return code;
        }
    };
    let result = configure_threads()
        .and_then(|()| resolve(cli.command))
        .and_then(|cfg| commands::execute(&cfg, out));
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if matches!(e, CliError::Usage(_)) {
                let _ = writeln!(err, "{SYNOPSIS}");
            }
            e.exit_code()
        }
    }
}

/// [`run_with`] on the process's standard streams.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}
