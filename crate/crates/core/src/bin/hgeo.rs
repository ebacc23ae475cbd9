use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use hidden_geometry::commands::{
    self, ExportOptions, GraphSource, InferOptions, ObservationSource, TimeUnit,
};
use hidden_geometry::{EdgeMode, Weighting};

#[derive(Parser)]
#[command(name = "hgeo", version, about = "Effective-distance analysis of spreading on region graphs")]
struct Cli {
    #[arg(long, global = true, default_value = ".")]
    output_dir: PathBuf,
    /// Seed for the synthetic graph generator.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Smoothing window in arrival-time units (default 14 days).
    #[arg(long, global = true)]
    window_duration: Option<f64>,
    /// Infected fraction that marks a simulated arrival.
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    /// Cumulative count that marks a coarse-series arrival.
    #[arg(long, global = true, default_value_t = 1.0)]
    threshold: f64,
    /// Read edge lists as undirected.
    #[arg(long, global = true)]
    undirected: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Unit {
    Days,
    Seconds,
}

#[derive(Subcommand)]
enum Command {
    /// Build a graph bundle from a region table and an edge list.
    Build {
        #[arg(long, required_unless_present = "synthetic")]
        regions: Option<PathBuf>,
        #[arg(long, required_unless_present = "synthetic")]
        edges: Option<PathBuf>,
        /// Generate a random graph with this many regions instead.
        #[arg(long, conflicts_with_all = ["regions", "edges"])]
        synthetic: Option<usize>,
    },
    /// Integrate an SI scenario and extract arrival times.
    Simulate {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Extract arrival times from an event log or coarse cumulative series.
    Arrivals {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, conflicts_with = "coarse")]
        events: Option<PathBuf>,
        #[arg(long, requires = "bin_width")]
        coarse: Option<PathBuf>,
        #[arg(long)]
        bin_width: Option<f64>,
    },
    /// Rank candidate sources by linear-fit goodness.
    Infer {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        arrivals: PathBuf,
        /// Fit raw arrival times without window smoothing.
        #[arg(long)]
        raw: bool,
        #[arg(long, value_enum, default_value = "days")]
        time_unit: Unit,
        /// Weight regions by log(population).
        #[arg(long)]
        weight_log_population: bool,
    },
    /// Radial layout, stage histogram and distances from one source.
    Export {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        source: String,
        #[arg(long)]
        arrivals: PathBuf,
        #[arg(long, default_value_t = 4)]
        stages: usize,
        /// Histogram bin width in effective-distance units.
        #[arg(long, default_value_t = 1.0)]
        bin_width: f64,
    },
    /// Rank-correlate two arrival tables.
    Compare { a: PathBuf, b: PathBuf },
}

fn run(cli: Cli) -> hidden_geometry::Result<()> {
    let outputs = match cli.command {
        Command::Build { regions, edges, synthetic } => {
            let source = match (synthetic, regions, edges) {
                (Some(n), _, _) => GraphSource::Synthetic { regions: n, seed: cli.seed },
                (None, Some(regions), Some(edges)) => GraphSource::Files {
                    regions,
                    edges,
                    mode: if cli.undirected { EdgeMode::Undirected } else { EdgeMode::Directed },
                },
                _ => unreachable!("clap enforces inputs"),
            };
            commands::build(&source)?
        }
        Command::Simulate { graph, scenario } => commands::simulate(&graph, &scenario, cli.epsilon)?,
        Command::Arrivals { graph, events, coarse, bin_width } => {
            let source = match (events, coarse) {
                (Some(path), _) => ObservationSource::Events(path),
                (None, Some(path)) => ObservationSource::Coarse {
                    path,
                    bin_width: bin_width.expect("clap requires bin width"),
                    threshold: cli.threshold,
                },
                (None, None) => {
                    return Err(hidden_geometry::Error::InvalidParameter(
                        "one of --events or --coarse is required".into(),
                    ))
                }
            };
            commands::arrivals(&graph, &source)?
        }
        Command::Infer { graph, arrivals, raw, time_unit, weight_log_population } => {
            let opts = InferOptions {
                window: cli.window_duration,
                raw,
                time_unit: match time_unit {
                    Unit::Days => TimeUnit::Days,
                    Unit::Seconds => TimeUnit::Seconds,
                },
                weighting: if weight_log_population { Weighting::LogPopulation } else { Weighting::Uniform },
            };
            commands::infer(&graph, &arrivals, &opts)?
        }
        Command::Export { graph, source, arrivals, stages, bin_width } => {
            commands::export(&graph, &source, &arrivals, &ExportOptions { stages, bin_width })?
        }
        Command::Compare { a, b } => commands::compare(&a, &b)?,
    };
    for path in commands::write_outputs(&cli.output_dir, &outputs)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
