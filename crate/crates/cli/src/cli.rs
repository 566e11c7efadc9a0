use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "prism-eval",
    version,
    about = "Pose-aware evaluation of novel view synthesis"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Seed for every stochastic step; overrides a seed set in a config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Run single-threaded.
    #[arg(long, global = true)]
    pub deterministic: bool,
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, env = "PRISM_EVAL_THREADS")]
    pub threads: Option<usize>,
    /// Output file, or directory for `masks` and `corrupt` images.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    /// Rendering of tables: aligned text or comma-separated.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

impl GlobalArgs {
    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Table,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Pool activation files listed in a manifest into a raw feature file.
    Pool(PoolArgs),
    /// Train a projection head on pooled features.
    Train(TrainArgs),
    /// Project raw features through a trained head.
    Embed(EmbedArgs),
    /// Compute a metric between two embedding files or two images.
    Score(ScoreArgs),
    /// Rank models by MMD against an anchor set, lowest first.
    Rank(RankArgs),
    /// Render visibility, invisibility and epipolar masks for a mesh.
    Masks(MasksArgs),
    /// Run the corruption grid on images.
    Corrupt(CorruptArgs),
    /// Check a manifest and the files it references, or standalone data files.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct PoolArgs {
    pub manifest: PathBuf,
    /// Directory activation paths are relative to (default: the manifest's).
    #[arg(long)]
    pub root: Option<PathBuf>,
    /// Skip unreadable files with a warning instead of failing.
    #[arg(long)]
    pub keep_going: bool,
    /// Where to write the manifest of records that were pooled.
    #[arg(long)]
    pub kept_manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    pub manifest: PathBuf,
    /// Raw features aligned row-for-row with the manifest.
    pub features: PathBuf,
    /// Flat `key = value` config; flags win over it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, requires = "val_features")]
    pub val_manifest: Option<PathBuf>,
    #[arg(long, requires = "val_manifest")]
    pub val_features: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Extra config overrides, e.g. `--set hidden_dim=512`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Training log path (default: `<output>.log`).
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    pub head: PathBuf,
    pub features: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Metric {
    /// Row-wise half Euclidean distance of unit embeddings.
    Dprism,
    /// Row-wise cosine similarity.
    Cosine,
    /// Unbiased MMD with median-heuristic RBF kernel.
    Mmd,
    /// Fréchet distance of Gaussian fits.
    Fd,
    /// MMD on source/target concatenations (four inputs).
    Jmmd,
    /// Fréchet distance on source/target concatenations (four inputs).
    Jfd,
    /// PSNR of two PNG images.
    Psnr,
    /// SSIM of two PNG images.
    Ssim,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long, value_enum)]
    pub metric: Metric,
    /// Two inputs, or four (`A_src A_tgt B_src B_tgt`) for joint metrics.
    #[arg(required = true, num_args = 2..=4)]
    pub inputs: Vec<PathBuf>,
    /// Project raw features through this head first.
    #[arg(long)]
    pub head: Option<PathBuf>,
    /// Column header, e.g. FID, CMMD or FDD.
    #[arg(long)]
    pub column: Option<String>,
    /// Row name for set-level metrics (default: first input's file stem).
    #[arg(long)]
    pub name: Option<String>,
    #[command(flatten)]
    pub mmd: MmdArgs,
}

#[derive(Debug, Args, Clone, Copy)]
pub struct MmdArgs {
    /// Report max(MMD, 0) instead of the raw estimate.
    #[arg(long)]
    pub clamp: bool,
    /// Fixed kernel bandwidth instead of the median heuristic.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Pair budget for the median heuristic.
    #[arg(long, default_value_t = prism_core::metrics::DEFAULT_PAIR_CAP)]
    pub pair_cap: usize,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    /// Anchor (ground-truth) embeddings.
    #[arg(long)]
    pub anchor: PathBuf,
    /// `NAME=PATH`, repeated once per model.
    #[arg(long = "model", value_name = "NAME=PATH", required = true)]
    pub models: Vec<String>,
    #[arg(long)]
    pub head: Option<PathBuf>,
    #[command(flatten)]
    pub mmd: MmdArgs,
}

#[derive(Debug, Args)]
pub struct MasksArgs {
    /// Triangle mesh in OBJ format.
    pub mesh: PathBuf,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub src_az: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = prism_core::geometry::GRID_ELEVATION_DEG)]
    pub src_el: f64,
    #[arg(long, default_value_t = prism_core::geometry::GRID_RADIUS)]
    pub src_r: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub tgt_az: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = prism_core::geometry::GRID_ELEVATION_DEG)]
    pub tgt_el: f64,
    #[arg(long, default_value_t = prism_core::geometry::GRID_RADIUS)]
    pub tgt_r: f64,
    #[arg(long, default_value_t = prism_core::geometry::DEFAULT_IMAGE_SIZE)]
    pub size: usize,
    #[arg(long, default_value_t = prism_core::geometry::DEFAULT_FOV_DEG)]
    pub fov: f64,
    /// Minimum pixel count for a face to count as visible.
    #[arg(long, default_value_t = 1)]
    pub min_pixels: usize,
    /// Skip the closing/opening refinement.
    #[arg(long)]
    pub raw: bool,
    /// Also write positive and negative label masks with their weights.
    #[arg(long)]
    pub compose: bool,
    /// Keep epipolar samples hidden in the target view.
    #[arg(long)]
    pub keep_occluded: bool,
    /// Every ordered pair of the 16-azimuth grid, one subdirectory each.
    #[arg(long, conflicts_with_all = ["src_az", "src_el", "src_r", "tgt_az", "tgt_el", "tgt_r"])]
    pub grid: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NoiseArg {
    Uniform,
    Gaussian,
}

#[derive(Debug, Args)]
pub struct CorruptArgs {
    /// PNG images; alpha is composited over white.
    #[arg(required = true)]
    pub images: Vec<PathBuf>,
    /// Resize to a square of this side first.
    #[arg(long)]
    pub size: Option<usize>,
    #[arg(long, value_enum, default_value_t = NoiseArg::Uniform)]
    pub noise: NoiseArg,
    /// Embeddings with 13 rows per image: clean, then the grid in table order.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Project `--embeddings` through this head first.
    #[arg(long, requires = "embeddings")]
    pub head: Option<PathBuf>,
    /// Write corrupted images here.
    #[arg(long)]
    pub save_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Manifest to check against its referenced files.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long, requires = "manifest")]
    pub root: Option<PathBuf>,
    /// Standalone PRSA, PRSF or head files.
    pub files: Vec<PathBuf>,
}
