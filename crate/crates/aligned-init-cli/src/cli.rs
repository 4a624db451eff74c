//! Command-line surface: one binary, four command families.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(
    name = "aligned-init",
    version,
    about = "Ones-aligned semi-orthogonal initialization: generators, verifiers, and training benchmarks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Base RNG seed for everything downstream.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Override the command's repetition knob (bench trials, transport
    /// samples, clt samples).
    #[arg(long, global = true)]
    pub trials: Option<usize>,

    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Published full-scale protocol: full datasets, 100 epochs, batch 256.
    #[arg(long, global = true)]
    pub paper_mode: bool,

    /// Dataset directory.
    #[arg(long, global = true, env = "ALIGNED_INIT_DATA", default_value = "data")]
    pub data_dir: PathBuf,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Draw one weight matrix, write it out, and report its residuals.
    Gen(GenArgs),
    /// Validate a stored matrix against the membership conditions.
    Check(CheckArgs),
    /// Statistical verification reports.
    #[command(subcommand)]
    Stats(StatsCmd),
    /// Training benchmarks over initializer grids.
    #[command(subcommand)]
    Bench(BenchCmd),
}

#[derive(Args, Debug)]
pub struct GenArgs {
    /// Output rows.
    pub m: usize,
    /// Input columns.
    pub n: usize,
    /// alg1 | alg2 | he | xavier | random | orthogonal | lee[:eps]
    #[arg(default_value = "alg2")]
    pub method: String,
    /// csv | bin; defaults to the --out extension (csv without --out).
    #[arg(long)]
    pub format: Option<String>,
    /// Residual tolerance used in the printed report.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    /// Matrix file, CSV or binary.
    pub path: PathBuf,
    /// Residual tolerance; exit code 1 when any residual exceeds it.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
}

#[derive(Subcommand, Debug)]
pub enum StatsCmd {
    /// KS distance of standardized projections against the normal limit.
    Clt(CltArgs),
    /// Empirical moment transport through one fixed aligned matrix.
    Transport(TransportArgs),
    /// Closed-form depth recursion of the rectification statistics.
    Propagate(PropagateArgs),
    /// Closed-form Cholesky factor against a numerical factorization.
    Choleskycheck(CholeskyArgs),
}

#[derive(Args, Debug)]
pub struct CltArgs {
    /// Input dimensions to sweep, comma separated.
    #[arg(long, default_value = "5,10,100", allow_hyphen_values = false)]
    pub dims: String,
    /// Input distribution: normal[:mean,std] | chisq<k> | uniform[:lo,hi]
    #[arg(long, default_value = "chisq3")]
    pub dist: String,
    /// Output rows of each drawn matrix.
    #[arg(long, default_value_t = 2)]
    pub m: usize,
    /// Independent matrix draws averaged per dimension.
    #[arg(long, default_value_t = 20)]
    pub draws: usize,
    /// Monte-Carlo samples per draw (--trials overrides).
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
}

#[derive(Args, Debug)]
pub struct TransportArgs {
    #[arg(long, default_value_t = 64)]
    pub m: usize,
    #[arg(long, default_value_t = 64)]
    pub n: usize,
    /// Input distribution applied coordinate-wise.
    #[arg(long, default_value = "chisq3")]
    pub dist: String,
    /// Monte-Carlo samples (--trials overrides).
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    /// Allowed deviation in standard errors.
    #[arg(long, default_value_t = 5.0)]
    pub band: f64,
}

#[derive(Args, Debug)]
pub struct PropagateArgs {
    /// Either `<width>x<layers>` or an explicit comma list of widths.
    #[arg(long, default_value = "64x50")]
    pub widths: String,
    /// Input mean.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub mu: f64,
    /// Input standard deviation.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
}

#[derive(Args, Debug)]
pub struct CholeskyArgs {
    /// Largest dimension checked (from 2 upward).
    #[arg(long, default_value_t = 512)]
    pub max_m: usize,
}

#[derive(Subcommand, Debug)]
pub enum BenchCmd {
    /// Depth sweep on an image dataset.
    Depth(DepthArgs),
    /// Few-shot training with k samples per class.
    Fewshot(FewshotArgs),
    /// Tabular benchmarks over the input-shift grid.
    Tabular(TabularArgs),
    /// Activation-function sweep at fixed depth.
    Activation(ActivationArgs),
}

#[derive(Args, Debug)]
pub struct DepthArgs {
    /// mnist | fashion | digits (mnist/fashion fall back to digits).
    #[arg(long, default_value = "mnist")]
    pub dataset: String,
    /// Hidden depths, comma separated.
    #[arg(long, default_value = "10,50")]
    pub depths: String,
    /// Initializers, comma separated.
    #[arg(long, default_value = "proposed_alg2,xavier")]
    pub inits: String,
    #[arg(long, default_value = "relu")]
    pub activation: String,
    /// Hidden width.
    #[arg(long, default_value_t = 64)]
    pub width: usize,
    /// Training epochs (desk default 3; paper mode 100).
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Minibatch size (desk default 64; paper mode 256).
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Stratified training subset; 0 means the full set (desk default
    /// 10000; paper mode full).
    #[arg(long)]
    pub subset: Option<usize>,
    #[arg(long, default_value_t = 0.001)]
    pub base_lr: f64,
}

#[derive(Args, Debug)]
pub struct FewshotArgs {
    #[arg(long, default_value = "mnist")]
    pub dataset: String,
    /// Training samples per class.
    #[arg(long, default_value_t = 4)]
    pub k: usize,
    #[arg(long, default_value_t = 50)]
    pub depth: usize,
    #[arg(long, default_value = "proposed_alg2,orthogonal")]
    pub inits: String,
    #[arg(long, default_value = "relu")]
    pub activation: String,
    #[arg(long, default_value_t = 64)]
    pub width: usize,
    /// Training epochs on the sampled shots.
    #[arg(long, default_value_t = 100)]
    pub epochs: usize,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long, default_value_t = 0.001)]
    pub base_lr: f64,
}

#[derive(Args, Debug)]
pub struct TabularArgs {
    /// wine | cancer | diabetes | any <name>.csv with a schema.
    #[arg(long, default_value = "wine")]
    pub dataset: String,
    /// Standardized input shifts, comma separated.
    #[arg(long, default_value = "-2,0,2,50", allow_hyphen_values = true)]
    pub alphas: String,
    #[arg(long, default_value = "50")]
    pub depths: String,
    #[arg(long, default_value = "proposed_alg2,xavier")]
    pub inits: String,
    #[arg(long, default_value = "relu")]
    pub activation: String,
    /// Hidden width; defaults to the dataset's published architecture.
    #[arg(long)]
    pub width: Option<usize>,
    /// Training epochs (desk default 100, matching the published count).
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Held-out fraction of the rows.
    #[arg(long, default_value_t = 0.2)]
    pub test_fraction: f64,
    #[arg(long, default_value_t = 0.001)]
    pub base_lr: f64,
}

#[derive(Args, Debug)]
pub struct ActivationArgs {
    #[arg(long, default_value = "mnist")]
    pub dataset: String,
    /// Activations, comma separated.
    #[arg(long, default_value = "relu,leaky_relu,prelu,elu,selu")]
    pub activations: String,
    #[arg(long, default_value_t = 50)]
    pub depth: usize,
    #[arg(long, default_value = "proposed_alg2,he")]
    pub inits: String,
    #[arg(long, default_value_t = 64)]
    pub width: usize,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub subset: Option<usize>,
    #[arg(long, default_value_t = 0.001)]
    pub base_lr: f64,
}
