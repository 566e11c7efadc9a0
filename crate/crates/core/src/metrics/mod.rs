//! Scalar and distributional scores.

mod distance;
mod frechet;
mod joint;
mod mmd;
mod probe;
mod quality;
mod stats;
mod table;

pub use distance::{cosine_score, d_prism, d_prism_rows};
pub use frechet::{frechet_distance, gaussian_stats, sqrtm_psd, GaussianStats};
pub use joint::joint_concat;
pub use mmd::{
    median_bandwidth, mmd_median, mmd_prism, mmd_unbiased, KernelConfig, MmdOptions, MmdResult, DEFAULT_PAIR_CAP,
};
pub use probe::{linear_probe, ProbeOptions, ProbeResult};
pub use quality::{psnr, ssim, PSNR_CAP_DB};
pub use stats::{auc, pearson};
pub use table::ScoreTable;
