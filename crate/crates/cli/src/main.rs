use std::path::PathBuf;
use std::process::ExitCode;

use adhesion_cli::{execute, CliError, ExperimentConfig, ExperimentKind};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "adhesion",
    version,
    about = "Run cell-adhesion model experiments from JSON configs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Master seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output path prefix; overrides the config.
    #[arg(long)]
    out: Option<String>,
    /// Worker threads (results do not depend on this).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run whatever experiment the config names.
    Run(Common),
    /// Exact jump-process paths or ensemble moments.
    Ssa(Common),
    /// Renormalized jump process in a scaling regime.
    Renorm(Common),
    /// Deterministic limit ODE.
    Ode(Common),
    /// Equilibria of the limit ODE.
    Equilibria(Common),
    /// Symmetrized Euler scheme for the diffusion limit.
    Sde(Common),
    /// Constant-rate transition density.
    CirDensity(Common),
    /// Constant-rate stationary law.
    CirStationary(Common),
    /// Spectral passage-time density.
    FptSpectral(Common),
    /// Spectral vs Kummer-ratio Laplace transform.
    LaplaceCheck(Common),
    /// Mean first-passage time to n* by quadrature.
    Mfpt(Common),
    /// Mean first-passage time across flow velocities.
    SweepU(Common),
    /// Sup-error of renormalized paths against the limit ODE.
    Convergence(Common),
    /// Constant-rate marginal vs squared OU norm.
    OuRepr(Common),
}

impl Command {
    fn split(self) -> (Option<ExperimentKind>, Common) {
        use ExperimentKind as K;
        match self {
            Command::Run(c) => (None, c),
            Command::Ssa(c) => (Some(K::Ssa), c),
            Command::Renorm(c) => (Some(K::Renorm), c),
            Command::Ode(c) => (Some(K::Ode), c),
            Command::Equilibria(c) => (Some(K::Equilibria), c),
            Command::Sde(c) => (Some(K::Sde), c),
            Command::CirDensity(c) => (Some(K::CirDensity), c),
            Command::CirStationary(c) => (Some(K::CirStationary), c),
            Command::FptSpectral(c) => (Some(K::FptSpectral), c),
            Command::LaplaceCheck(c) => (Some(K::LaplaceCheck), c),
            Command::Mfpt(c) => (Some(K::Mfpt), c),
            Command::SweepU(c) => (Some(K::SweepU), c),
            Command::Convergence(c) => (Some(K::Convergence), c),
            Command::OuRepr(c) => (Some(K::OuRepr), c),
        }
    }
}

fn main_inner(cli: Cli) -> Result<(), CliError> {
    let (kind, common) = cli.command.split();
    let mut cfg = ExperimentConfig::load(&common.config)?;
    if let Some(kind) = kind {
        if kind != cfg.experiment {
            return Err(CliError::Validation(format!(
                "subcommand {kind} does not match config experiment {}",
                cfg.experiment
            )));
        }
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = common.out {
        cfg.output = Some(out);
    }
    let written = match common.threads {
        Some(0) => return Err(CliError::Validation("--threads must be >= 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Io(e.to_string()))?
            .install(|| execute(&cfg))?,
        None => execute(&cfg)?,
    };
    println!("{}", written.csv_path.display());
    println!("{}", written.json_path.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("adhesion: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
