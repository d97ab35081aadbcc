use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod run;

use anyhow::{anyhow, Context};

use run::RunConfig;

#[derive(Parser, Debug)]
#[command(name = "eigenbound", version, about = "Geometric lower bounds on lowest eigenvalues, with FD validation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate every bound for the problem at each radius.
    Bound(Args),
    /// Finite-difference smallest eigenvalue.
    Eig(Args),
    /// Bounds and eigenvalues together; exit 1 if a certified bound exceeds λ.
    Validate(Args),
    /// Best bound of each kind over the radius grid.
    Sweep(Args),
    /// Randomized checks of the one-dimensional inequalities.
    Oracle(Args),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Dirichlet,
    Robin,
    Poly,
    Heisenberg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Estimate,
    Certify,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(clap::Args, Debug, Clone)]
struct Args {
    /// Domain description (JSON).
    #[arg(long)]
    domain: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "dirichlet")]
    kind: Kind,
    /// Robin parameter.
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Polyharmonic order.
    #[arg(long, default_value_t = 2)]
    m: usize,
    /// Heisenberg dimension; defaults to the value in the domain file.
    #[arg(long = "N")]
    n: Option<usize>,
    /// Comma-separated radii.
    #[arg(long, value_delimiter = ',', default_value = "0.6,0.8,1.0,1.5")]
    r: Vec<f64>,
    /// Finite-difference spacing; defaults to 1/64 of the longest box side (1/32 above two dimensions).
    #[arg(long)]
    h: Option<f64>,
    /// Node spacing for the sup over centers; defaults to 1/20 of the longest box side.
    #[arg(long)]
    cover_h: Option<f64>,
    /// Minimum cell side of the certified covering; defaults to cover-h/8.
    #[arg(long)]
    cell: Option<f64>,
    /// Monte Carlo samples per center in estimate mode.
    #[arg(long, default_value_t = 4000)]
    samples: usize,
    #[arg(long, value_enum, default_value = "certify")]
    mode: Mode,
    /// Overrides EIGENBOUND_SEED and the built-in default.
    #[arg(long)]
    seed: Option<u64>,
    /// Step functions for `oracle` (elementary draws are ten times this).
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    /// Assert convexity (enables the bounds that need it).
    #[arg(long)]
    convex: bool,
    /// Assert nonnegative mean curvature.
    #[arg(long)]
    mean_convex: bool,
    /// Also solve at 2h and extrapolate (`eig`; `validate` always does).
    #[arg(long)]
    richardson: bool,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

fn seed(explicit: Option<u64>) -> anyhow::Result<u64> {
    if let Some(s) = explicit {
        return Ok(s);
    }
    match std::env::var("EIGENBOUND_SEED") {
        Ok(v) => v.trim().parse().map_err(|_| anyhow!("EIGENBOUND_SEED is not an integer: {v:?}")),
        Err(_) => Ok(eigenbound::geometry::DEFAULT_SEED),
    }
}

fn execute(cli: Cli) -> anyhow::Result<bool> {
    let (cmd, args) = match cli.command {
        Command::Bound(a) => (run::Cmd::Bound, a),
        Command::Eig(a) => (run::Cmd::Eig, a),
        Command::Validate(a) => (run::Cmd::Validate, a),
        Command::Sweep(a) => (run::Cmd::Sweep, a),
        Command::Oracle(a) => (run::Cmd::Oracle, a),
    };
    if args.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(args.threads)
            .build_global()?;
    }
    let cfg = RunConfig {
        command: cmd,
        domain: args.domain,
        kind: args.kind,
        sigma: args.sigma,
        m: args.m,
        n: args.n,
        radii: args.r,
        h: args.h,
        cover_h: args.cover_h,
        samples: args.samples,
        mode: args.mode,
        seed: seed(args.seed)?,
        trials: args.trials,
        richardson: args.richardson,
        cell: args.cell,
        convex: args.convex,
        mean_convex: args.mean_convex,
    };
    let report = run::run(&cfg)?;
    let text = match args.format {
        Format::Csv => report.to_csv(),
        Format::Json => report.to_json(),
    }
?;
    match args.out {
        Some(path) => fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    if !report.all_pass() {
        for c in report.checks.iter().filter(|c| !c.pass) {
            eprintln!("FAIL {}: {} > {} * (1 + {})", c.name, c.bound, c.reference, c.margin);
        }
        for o in report.oracles.iter().filter(|o| !o.passed()) {
            eprintln!("FAIL {}: {} of {} trials", o.name, o.failures, o.trials);
        }
    }
    Ok(report.all_pass())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: at least one check failed; see the report");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
