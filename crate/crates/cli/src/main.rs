mod commands;
mod input;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::output::{Output, SCHEMA_VERSION};

/// Irregular points, horseshoes, entropy and dimension tools.
#[derive(Debug, Parser)]
#[command(name = "irrlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Group,
    #[command(flatten)]
    run: RunOptions,
}

#[derive(Debug, Clone, Args)]
pub struct RunOptions {
    /// JSON configuration: a file path, or an inline object starting with `{`.
    #[arg(long, global = true)]
    input: Option<String>,
    /// Directory for artifacts; `IRRLAB_OUTPUT_DIR` is used when absent.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Worker threads; 0 lets the pool decide.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Subcommand)]
enum Group {
    /// Irregular points over subshifts of finite type.
    Irregular {
        #[command(subcommand)]
        cmd: IrregularCmd,
    },
    /// Entropy of subshifts, interval maps and suspensions.
    Entropy {
        #[command(subcommand)]
        cmd: EntropyCmd,
    },
    /// Similarity, box and metric dimensions.
    Dim {
        #[command(subcommand)]
        cmd: DimCmd,
    },
    /// Geometric Lorenz model.
    Lorenz {
        #[command(subcommand)]
        cmd: LorenzCmd,
    },
    /// Porcupine skew product and its spines.
    Porcupine {
        #[command(subcommand)]
        cmd: PorcupineCmd,
    },
    /// Fiber-contracting skew products over the shift.
    Skew {
        #[command(subcommand)]
        cmd: SkewCmd,
    },
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum IrregularCmd {
    Construct,
    Trace,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum EntropyCmd {
    Sft,
    Interval,
    Suspension,
    Scaling,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum DimCmd {
    Moran,
    Box,
    ShiftMetric,
    Horseshoe,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum LorenzCmd {
    Map,
    Demo,
    Validate,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum PorcupineCmd {
    Spines,
    Fraction,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum SkewCmd {
    Graph,
    LiftCheck,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] irrlab::Error),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_budget() => 2,
            _ => 1,
        }
    }
}

fn dispatch(group: &Group, opts: &RunOptions) -> Result<serde_json::Value, CliError> {
    let out = Output::new(opts)?;
    let raw = input::load(opts.input.as_deref())?;
    match group {
        Group::Irregular { cmd } => match cmd {
            IrregularCmd::Construct => commands::irregular_construct(&raw, &out),
            IrregularCmd::Trace => commands::irregular_trace(&raw, &out),
        },
        Group::Entropy { cmd } => match cmd {
            EntropyCmd::Sft => commands::entropy_sft(&raw, &out),
            EntropyCmd::Interval => commands::entropy_interval(&raw, &out, opts.seed),
            EntropyCmd::Suspension => commands::entropy_suspension(&raw, &out),
            EntropyCmd::Scaling => commands::entropy_scaling(&raw, &out),
        },
        Group::Dim { cmd } => match cmd {
            DimCmd::Moran => commands::dim_moran(&raw, &out),
            DimCmd::Box => commands::dim_box(&raw, &out),
            DimCmd::ShiftMetric => commands::dim_shift_metric(&raw, &out),
            DimCmd::Horseshoe => commands::dim_horseshoe(&raw, &out),
        },
        Group::Lorenz { cmd } => match cmd {
            LorenzCmd::Map => commands::lorenz_map(&raw, &out),
            LorenzCmd::Demo => commands::lorenz_demo(&raw, &out),
            LorenzCmd::Validate => commands::lorenz_validate(&raw, &out),
        },
        Group::Porcupine { cmd } => match cmd {
            PorcupineCmd::Spines => commands::porcupine_spines(&raw, &out, opts.seed),
            PorcupineCmd::Fraction => commands::porcupine_fraction(&raw, &out, opts.seed),
        },
        Group::Skew { cmd } => match cmd {
            SkewCmd::Graph => commands::skew_graph(&raw, &out, opts.seed),
            SkewCmd::LiftCheck => commands::skew_lift_check(&raw, &out),
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.run.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.run.threads)
            .build_global()
        {
            println!(
                "{}",
                json!({ "error": e.to_string(), "schema_version": SCHEMA_VERSION })
            );
            return ExitCode::from(1);
        }
    }
    match dispatch(&cli.command, &cli.run) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            println!(
                "{}",
                json!({ "error": e.to_string(), "schema_version": SCHEMA_VERSION })
            );
            ExitCode::from(e.exit_code())
        }
    }
}
