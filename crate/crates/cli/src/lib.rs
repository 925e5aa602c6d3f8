//! Command-line front end: configuration, dispatch and report files.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod verify;

use clap::{Args, Parser, Subcommand};
use config::{parse_walk_flag, ExperimentConfig};
pub use error::CliError;
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "hypbrw", version, about = "Branching random walks on free groups and free products of Z/2")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed of every random stream.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, env = "HYPBRW_OUT")]
    pub out: Option<PathBuf>,
    /// Worker threads; all available cores by default.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Smaller kernels and fewer replicas.
    #[arg(long, global = true)]
    pub quick: bool,
    /// Group, `free:q` or `z2:d`.
    #[arg(long, global = true)]
    pub group: Option<String>,
    /// Step law, `srw` or `lazy:p0`.
    #[arg(long, global = true)]
    pub walk: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Spectral radius and sphere sums of Green functions.
    Green {
        /// Weights, comma separated.
        #[arg(long, value_delimiter = ',')]
        r: Option<Vec<f64>>,
    },
    /// Branching random walk traces, growth and visit moments.
    Brw {
        /// Mean offspring number.
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        replicas: Option<u64>,
    },
    /// Dimension of the limit set against log H.
    Dimension {
        /// Mean offspring numbers, comma separated.
        #[arg(long, value_delimiter = ',')]
        lambda: Option<Vec<f64>>,
    },
    /// Transfer-operator pressure against the sphere sums.
    Pressure {
        #[arg(long, value_delimiter = ',')]
        r: Option<Vec<f64>>,
    },
    /// Square-root exponents at the critical weight.
    Exponent,
    /// The check suite.
    Verify,
}

/// Merged configuration and invocation options.
#[derive(Clone, Debug)]
pub struct Context {
    pub config: ExperimentConfig,
    pub out: PathBuf,
    pub quick: bool,
}

impl Context {
    pub fn new(common: &CommonArgs) -> Result<Self, CliError> {
        let mut config = match &common.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = common.seed {
            config.seed = s;
        }
        if let Some(g) = &common.group {
            config.group = g.clone();
        }
        if let Some(w) = &common.walk {
            config.walk = parse_walk_flag(w)?;
        }
        let out = common
            .out
            .clone()
            .or_else(|| config.out.clone())
            .unwrap_or_else(|| PathBuf::from("hypbrw-out"));
        config.group_model()?;
        config.step_distribution()?;
        Ok(Context {
            config,
            out,
            quick: common.quick,
        })
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let mut ctx = Context::new(&cli.common)?;
    match cli.command {
        Command::Green { r } => {
            if let Some(r) = r {
                ctx.config.green.r = r;
            }
            commands::green(&ctx)
        }
        Command::Brw { lambda, replicas } => {
            if let Some(l) = lambda {
                ctx.config.brw.lambda = l;
            }
            if let Some(n) = replicas {
                ctx.config.brw.replicas = n;
            }
            commands::brw(&ctx)
        }
        Command::Dimension { lambda } => {
            if let Some(l) = lambda {
                ctx.config.dimension.lambdas = l;
            }
            commands::dimension(&ctx)
        }
        Command::Pressure { r } => {
            if let Some(r) = r {
                ctx.config.pressure.r = r;
            }
            commands::pressure(&ctx)
        }
        Command::Exponent => commands::exponent(&ctx),
        Command::Verify => verify::run(&ctx),
    }
}
