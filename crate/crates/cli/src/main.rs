mod commands;
mod error;
mod instance;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(
    name = "kfusion",
    version,
    about = "K-fusion frames: bounds, duals, resolutions and perturbations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Instance file, or `@example_r3` / `@example_r4` for a bundled one
    #[arg(long = "in", value_name = "FILE")]
    pub input: Option<String>,
    /// Also write the report as JSON to this file
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Seed for every sampled quantity
    #[arg(long)]
    pub seed: Option<u64>,
    /// Residual tolerance, absolute and relative
    #[arg(long)]
    pub tol: Option<f64>,
    /// Singular values at or below this fraction of the largest count as zero
    #[arg(long)]
    pub rank_tol: Option<f64>,
    /// System of the instance playing the role of W
    #[arg(long, default_value = "W")]
    pub system: String,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check the K-fusion frame inequality, minimality and exactness
    Verify(Common),
    /// Optimal frame bounds
    Bounds(Common),
    /// Solve T_W X = K by the Douglas factorization
    Douglas(Common),
    /// The QK-dual built from the reduced Douglas solution
    QkDual(Common),
    /// Test whether a second system is a K-dual of W
    KDual {
        #[command(flatten)]
        common: Common,
        /// Candidate dual system
        #[arg(long, default_value = "V")]
        dual: String,
    },
    /// Canonical K-dual and its Bessel bound
    CanonicalDual(Common),
    /// Enlarge one member of a K-dual by an orthogonal subspace
    EnlargeDual {
        #[command(flatten)]
        common: Common,
        /// Dual to enlarge; the canonical K-dual when omitted
        #[arg(long)]
        dual: Option<String>,
        /// Member to enlarge, counting from 1
        #[arg(long)]
        member: usize,
        /// Spanning vector of the added subspace, e.g. `0,0,1` or `1/2,1/2,0` (repeatable)
        #[arg(long = "with", value_name = "VECTOR", required = true)]
        with: Vec<String>,
    },
    /// Resolutions of K built from W and the frames they generate
    Resolution(Common),
    /// Compare the reduced solution against another solution of T_W θ = K
    MinimalNorm {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100)]
        samples: usize,
    },
    /// Perturbation bounds for a second system Z
    Perturb {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "Z")]
        perturbed: String,
        /// With --lambda2 and --epsilon, certify the (λ1, λ2, ε) condition
        #[arg(long, requires_all = ["lambda2", "epsilon"])]
        lambda1: Option<f64>,
        #[arg(long, requires_all = ["lambda1", "epsilon"])]
        lambda2: Option<f64>,
        #[arg(long, requires_all = ["lambda1", "lambda2"])]
        epsilon: Option<f64>,
    },
    /// Distance of a K-dual of W from being a K-dual of Z
    ApproxDual {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "Z")]
        perturbed: String,
        /// Dual of W to test; the canonical K-dual when omitted
        #[arg(long)]
        dual: Option<String>,
    },
    /// Recompute every bundled worked example
    Examples(Common),
    /// Generate a seeded random instance
    Random {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 4)]
        dim: usize,
        #[arg(long, default_value_t = 3)]
        members: usize,
        #[arg(long, default_value_t = 2)]
        rank: usize,
        /// Write the generated instance to this file
        #[arg(long, value_name = "FILE")]
        save: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match commands::run(&cli.command) {
        Ok(report) => {
            print!("{}", report.human());
            ExitCode::from(if report.pass { 0 } else { 1 })
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
