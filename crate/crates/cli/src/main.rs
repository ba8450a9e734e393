use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use scatterlab::Error;

mod commands;

#[derive(Parser)]
#[command(name = "scatterlab", version, about = "Inverse acoustic scattering numerics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Near,
    Far,
}

#[derive(Subcommand)]
enum Command {
    /// Build a refractive-index phantom from a config and write it as a container.
    Phantom {
        config: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// Write the perturbed phantom (base plus alpha times the perturbation).
        #[arg(long)]
        alpha: Option<f64>,
        /// Print the effective configuration.
        #[arg(long)]
        manifest: bool,
    },
    /// Simulate near-field or far-field data for a phantom container.
    Forward {
        phantom: PathBuf,
        #[arg(long, value_enum, default_value = "near")]
        kind: Kind,
        /// Measurement sphere radius (near field).
        #[arg(long, default_value_t = 1.5)]
        r: f64,
        /// Quadrature size as `n_theta x n_phi`, e.g. `16x32`.
        #[arg(long, default_value = "16x32")]
        quad: String,
        #[arg(long, default_value_t = 2.0)]
        omega: f64,
        #[arg(short, long)]
        out: PathBuf,
        /// Data table; defaults to the output path with a `.csv` extension.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Reference data container; writes `phantom_id,kind,delta` to `<out>.delta.csv`.
        #[arg(long)]
        against: Option<PathBuf>,
        /// Compare a vacuum near field with the analytic kernel.
        #[arg(long)]
        selftest: bool,
    },
    /// Tabulate the generalized amplitude h against the Fourier transform of v.
    Faddeev {
        config: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// Frequency `px,py,pz`; repeatable.
        #[arg(long = "p", allow_hyphen_values = true)]
        ps: Vec<String>,
        /// Comma-separated `ρ` ladder; defaults to `rhos` from the config.
        #[arg(long)]
        rho: Option<String>,
        #[arg(long)]
        manifest: bool,
    },
    /// Reconstruct v2 - v1 from simulated near-field data.
    Reconstruct {
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long)]
        kappa: Option<f64>,
        #[arg(long)]
        manifest: bool,
    },
    /// Run a stability sweep over the alpha ladder.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long)]
        manifest: bool,
    },
    /// Run the identity and inequality checks on a phantom pair.
    Verify {
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long)]
        manifest: bool,
    },
}

/// Process exit status of a failed command.
#[derive(Debug)]
pub enum Failure {
    Core(Error),
    Solver(String),
    Verification(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Core(Error::Io(e))
    }
}

fn exit_code(f: &Failure) -> u8 {
    match f {
        Failure::Verification(_) => 3,
        Failure::Solver(_) => 2,
        Failure::Core(Error::Precondition(_)) => 3,
        Failure::Core(e) if e.is_solver_failure() => 2,
        Failure::Core(_) => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Phantom {
            config,
            out,
            alpha,
            manifest,
        } => commands::phantom(&config, &out, alpha, manifest),
        Command::Forward {
            phantom,
            kind,
            r,
            quad,
            omega,
            out,
            csv,
            against,
            selftest,
        } => commands::forward(commands::ForwardArgs {
            phantom,
            kind,
            r,
            quad,
            omega,
            out,
            csv,
            against,
            selftest,
        }),
        Command::Faddeev {
            config,
            out,
            ps,
            rho,
            manifest,
        } => commands::faddeev(&config, &out, &ps, rho.as_deref(), manifest),
        Command::Reconstruct {
            config,
            out_dir,
            rho,
            kappa,
            manifest,
        } => commands::reconstruct(&config, &out_dir, rho, kappa, manifest),
        Command::Sweep {
            config,
            out_dir,
            manifest,
        } => commands::sweep(&config, &out_dir, manifest),
        Command::Verify {
            config,
            out_dir,
            manifest,
        } => commands::verify(&config, &out_dir, manifest),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Core(e) => eprintln!("error: {e}"),
                Failure::Solver(msg) => eprintln!("solver failure: {msg}"),
                Failure::Verification(msg) => eprintln!("verification failed: {msg}"),
            }
            ExitCode::from(exit_code(&f))
        }
    }
}
