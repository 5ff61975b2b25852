#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "qpol2", version, about = "Two-photon quantum polarimetry toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Metric sweep of |Ψ+⟩ through diag(1, m, m, m), one and both photons.
    Sweep {
        m_min: f64,
        m_max: f64,
        steps: usize,
        /// Output CSV (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Scattering Monte Carlo from a JSON medium config.
    Mc {
        config: PathBuf,
        #[arg(long)]
        seed: u64,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Reservoir-sample the written ensemble to at most this many paths (0 keeps all).
        #[arg(long, default_value_t = 10_000)]
        max_paths: usize,
    },
    /// Send a state through a channel (Kraus JSON or diagonal Mueller CSV).
    Propagate {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        channel: PathBuf,
        #[arg(long, value_enum, default_value_t = PropagateMode::TppIndependent)]
        mode: PropagateMode,
        /// Photon sent through the channel in opp mode.
        #[arg(long, value_enum, default_value_t = ArmArg::First)]
        arm: ArmArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulate tomography counts and reconstruct the state.
    Tomo {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        pairs: u64,
        #[arg(long)]
        seed: u64,
        /// Poisson shot noise instead of rounded expectations.
        #[arg(long)]
        noisy: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a Mueller matrix to input/output tensors (density JSON or tensor CSV).
    Fit {
        /// Input state or tensor; repeat for several pairs.
        #[arg(long = "kin", required = true)]
        kin: Vec<PathBuf>,
        /// Output state or tensor, one per --kin.
        #[arg(long = "kout", required = true)]
        kout: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = ModelArg::Diagonal)]
        model: ModelArg,
        /// Multi-start seed for the general model.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output JSON (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-pixel diagonal fits over a binary tensor grid.
    Image {
        #[arg(long)]
        kin: PathBuf,
        #[arg(long)]
        grid: PathBuf,
        #[arg(long, value_enum, default_value_t = ModelArg::Diagonal)]
        model: ModelArg,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum PropagateMode {
    Opp,
    TppIndependent,
    TppCorrelated,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArmArg {
    First,
    Second,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelArg {
    Isotropic,
    Diagonal,
    General,
}

fn configure_threads() {
    let Ok(v) = std::env::var("QPOL2_THREADS") else { return };
    match v.trim().parse::<usize>() {
        Ok(n) if n > 0 => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                log::warn!("could not size thread pool: {e}");
            }
        }
        _ => log::warn!("ignoring QPOL2_THREADS={v:?}"),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    configure_threads();
    let result = match cli.command {
        Command::Sweep { m_min, m_max, steps, out } => commands::sweep(m_min, m_max, steps, out.as_deref()),
        Command::Mc { config, seed, out, max_paths } => commands::mc(&config, seed, &out, max_paths),
        Command::Propagate { state, channel, mode, arm, out } => commands::propagate(&state, &channel, mode, arm, &out),
        Command::Tomo { state, pairs, seed, noisy, out } => commands::tomo(&state, pairs, seed, noisy, &out),
        Command::Fit { kin, kout, model, seed, out } => commands::fit(&kin, &kout, model, seed, out.as_deref()),
        Command::Image { kin, grid, model, out } => commands::image(&kin, &grid, model, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            ExitCode::from(f.code())
        }
    }
}
