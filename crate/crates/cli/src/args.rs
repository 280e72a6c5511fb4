use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "diagslice",
    version,
    about = "Partitions of the unit cube by hyperplanes orthogonal to the main diagonal",
    args_override_self = true,
    propagate_version = true
)]
pub struct Cli {
    /// key=value file supplying defaults for any long flag; flags given on
    /// the command line take precedence
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cut positions and stratum volumes of a partition
    Partition(PartitionArgs),
    /// One uniform point per stratum (or i.i.d. points)
    Sample(SampleArgs),
    /// Monte-Carlo estimate of the expected squared L2 star discrepancy
    Discrepancy(DiscrepancyArgs),
    /// Search for cut positions with low expected discrepancy
    Optimize(OptimizeArgs),
    /// Scripted numerical studies
    #[command(subcommand)]
    Experiment(ExperimentCommand),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    /// Exact equivolume cuts
    Exact,
    /// Normal approximation of the equivolume cuts
    Normal,
    /// Exact cuts near the corners, normal approximation elsewhere
    Hybrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algo {
    /// (1+1)-ES with the 1/5-th success rule
    Es,
    /// Diagonal CMA-ES
    Cma,
}

/// Comma-separated list of non-negative integers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UsizeList(pub Vec<usize>);

pub fn parse_usize_list(s: &str) -> Result<UsizeList, String> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|e| format!("'{t}' is not a non-negative integer: {e}"))
        })
        .collect::<Result<Vec<_>, _>>()
        .map(UsizeList)
}

/// Comma-separated list of reals.
#[derive(Debug, Clone, PartialEq)]
pub struct F64List(pub Vec<f64>);

pub fn parse_f64_list(s: &str) -> Result<F64List, String> {
    if s.trim().is_empty() {
        return Ok(F64List(Vec::new()));
    }
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| format!("'{t}' is not a number: {e}"))
        })
        .collect::<Result<Vec<_>, _>>()
        .map(F64List)
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Output file, or an existing directory to write a default-named file
    /// into; stdout when omitted
    #[arg(short = 'o', long = "out", value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct PartitionArgs {
    #[arg(short = 'd', long = "dim")]
    pub dim: usize,
    #[arg(short = 'N', long = "strata")]
    pub strata: usize,
    #[arg(long, value_enum, default_value = "exact")]
    pub method: Method,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SourceArgs {
    #[arg(short = 'd', long = "dim")]
    pub dim: usize,
    /// Number of strata (or of i.i.d. points with --iid)
    #[arg(short = 'N', long = "strata")]
    pub strata: Option<usize>,
    #[arg(long, value_enum, default_value = "exact")]
    pub method: Method,
    /// Explicit cut positions in sum coordinates, comma-separated
    #[arg(long, value_parser = parse_f64_list, conflicts_with = "iid")]
    pub cuts: Option<F64List>,
    /// Use i.i.d. uniform points instead of a stratified sample
    #[arg(long)]
    pub iid: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub stream: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct DiscrepancyArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long, default_value_t = 10_000)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SearchArgs {
    #[arg(long, value_enum, default_value = "cma")]
    pub algo: Algo,
    #[arg(long, default_value_t = 1000)]
    pub budget: usize,
    #[arg(long, default_value_t = 1500)]
    pub lowfi_reps: usize,
    /// Independent runs; the best by final estimate is marked
    #[arg(long, default_value_t = 10)]
    pub runs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OptimizeTable {
    /// One row per run
    Runs,
    /// Best-so-far values of the best run
    Trajectory,
}

#[derive(Debug, Clone, Args)]
pub struct OptimizeArgs {
    #[arg(short = 'd', long = "dim")]
    pub dim: usize,
    #[arg(short = 'N', long = "strata")]
    pub strata: usize,
    #[command(flatten)]
    pub search: SearchArgs,
    /// Repetitions for re-scoring each run's best candidate
    #[arg(long, default_value_t = 10_000)]
    pub hifi_reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "runs")]
    pub table: OptimizeTable,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportTable {
    /// Summary table when the experiment has one, records otherwise
    Auto,
    Records,
    Summary,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// Which table to write in CSV mode (JSON always carries both)
    #[arg(long, value_enum, default_value = "auto")]
    pub table: ReportTable,
    /// Record the wall-clock time in the report (makes output run-dependent)
    #[arg(long)]
    pub timing: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Subcommand)]
pub enum ExperimentCommand {
    /// Normal-approximation error at the exact equivolume cuts
    Convergence {
        #[arg(long, value_parser = parse_usize_list, default_value = "3,5,10")]
        dims: UsizeList,
        #[arg(short = 'N', long = "strata", default_value_t = 10_000)]
        strata: usize,
        #[command(flatten)]
        report: ReportArgs,
    },
    /// Slice volumes of the normal-approximation partition
    VolumeDeviation {
        #[arg(short = 'd', long = "dim", default_value_t = 5)]
        dim: usize,
        #[arg(long, value_parser = parse_usize_list, default_value = "100,1000,10000")]
        ns: UsizeList,
        #[command(flatten)]
        report: ReportArgs,
    },
    /// i.i.d. vs equivolume vs optimised stratifications
    Comparison {
        #[arg(short = 'd', long = "dim", default_value_t = 2)]
        dim: usize,
        #[arg(long, value_parser = parse_usize_list, default_value = "3,4,5,6,7,8,9,10,15,20")]
        ns: UsizeList,
        #[arg(long, default_value_t = 10_000)]
        reps: usize,
        /// Optimizers to run, comma-separated (es, cma); empty for baselines only
        #[arg(long, default_value = "")]
        algos: String,
        #[arg(long, default_value_t = 1000)]
        budget: usize,
        #[arg(long, default_value_t = 1500)]
        lowfi_reps: usize,
        #[arg(long, default_value_t = 10)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        report: ReportArgs,
    },
    /// Rescore the shipped optimised point sets
    ReferencePointsets {
        #[arg(long, value_parser = parse_usize_list)]
        dims: Option<UsizeList>,
        #[arg(long)]
        max_n: Option<usize>,
        #[arg(long, default_value_t = 10_000)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        report: ReportArgs,
    },
    /// Gaussian kernel density of cut positions along the diagonal
    Kde {
        #[arg(short = 'd', long = "dim", default_value_t = 2)]
        dim: usize,
        #[arg(long, value_parser = parse_usize_list, default_value = "10,15,20")]
        ns: UsizeList,
        /// Include the shipped optimised sets for the same (d, N)
        #[arg(long)]
        with_reference: bool,
        #[arg(long, default_value_t = 200)]
        grid: usize,
        #[command(flatten)]
        report: ReportArgs,
    },
}
