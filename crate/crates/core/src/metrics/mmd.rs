//! Unbiased squared MMD with a Gaussian RBF kernel.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::types::EmbeddingSet;

pub const DEFAULT_PAIR_CAP: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelConfig {
    /// RBF bandwidth σ in `exp(−‖x − y‖² / (2σ²))`.
    pub bandwidth: f64,
    pub pair_subsample_cap: usize,
}

impl KernelConfig {
    pub fn new(bandwidth: f64) -> Result<Self> {
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::Contract(format!("bandwidth must be > 0, got {bandwidth}")));
        }
        Ok(KernelConfig {
            bandwidth,
            pair_subsample_cap: DEFAULT_PAIR_CAP,
        })
    }
}

/// Options for median-heuristic MMD.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmdOptions {
    /// Skips the median heuristic when set.
    pub bandwidth: Option<f64>,
    pub pair_subsample_cap: usize,
    pub seed: u64,
    /// Report `max(value, 0)` instead of the raw estimator.
    pub clamp: bool,
}

impl Default for MmdOptions {
    fn default() -> Self {
        MmdOptions {
            bandwidth: None,
            pair_subsample_cap: DEFAULT_PAIR_CAP,
            seed: 0,
            clamp: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmdResult {
    /// Raw estimator, or clamped at zero when requested.
    pub value: f64,
    pub bandwidth: f64,
}

fn sq_dist(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = f64::from(x) - f64::from(y);
            d * d
        })
        .sum()
}

/// Median pairwise Euclidean distance over the pooled set `X ∪ Y`.
///
/// Self-pairs are excluded. Above `cap` unordered pairs, `cap` pairs are drawn
/// uniformly with a seeded generator.
pub fn median_bandwidth(x: &EmbeddingSet, y: &EmbeddingSet, cap: usize, seed: u64) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(Error::Shape(format!("dims differ: {} vs {}", x.dim(), y.dim())));
    }
    let pooled: Vec<&[f32]> = x.rows().chain(y.rows()).collect();
    let n = pooled.len();
    if n < 2 {
        return Err(Error::Contract("median heuristic needs at least two points".into()));
    }
    let total = n * (n - 1) / 2;
    let mut dists: Vec<f64> = if total <= cap.max(1) {
        let mut v = Vec::with_capacity(total);
        for i in 0..n {
            for j in i + 1..n {
                v.push(sq_dist(pooled[i], pooled[j]).sqrt());
            }
        }
        v
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..cap)
            .map(|_| {
                let i = rng.random_range(0..n);
                let mut j = rng.random_range(0..n - 1);
                if j >= i {
                    j += 1;
                }
                sq_dist(pooled[i], pooled[j]).sqrt()
            })
            .collect()
    };
    dists.sort_by(f64::total_cmp);
    let m = dists.len();
    let med = if m % 2 == 1 {
        dists[m / 2]
    } else {
        0.5 * (dists[m / 2 - 1] + dists[m / 2])
    };
    if !(med > 0.0) {
        return Err(Error::Degenerate("median pairwise distance is zero".into()));
    }
    Ok(med)
}

/// Sum of k(a_i, b_j) over all pairs, or over i < j when `same`.
fn kernel_sum(a: &EmbeddingSet, b: &EmbeddingSet, gamma: f64, same: bool) -> f64 {
    let per_row: Vec<f64> = (0..a.len())
        .into_par_iter()
        .map(|i| {
            let ai = a.row(i);
            let start = if same { i + 1 } else { 0 };
            (start..b.len())
                .map(|j| (-gamma * sq_dist(ai, b.row(j))).exp())
                .sum::<f64>()
        })
        .collect();
    // fixed-order reduction keeps results thread-count independent
    per_row.iter().sum()
}

/// Unbiased estimator of squared MMD. May be negative.
pub fn mmd_unbiased(x: &EmbeddingSet, y: &EmbeddingSet, kernel: &KernelConfig) -> Result<f64> {
    if x.len() < 2 || y.len() < 2 {
        return Err(Error::Contract(format!(
            "MMD needs at least 2 samples per set, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    if x.dim() != y.dim() {
        return Err(Error::Shape(format!("dims differ: {} vs {}", x.dim(), y.dim())));
    }
    if !(kernel.bandwidth > 0.0) {
        return Err(Error::Contract("bandwidth must be > 0".into()));
    }
    let gamma = 1.0 / (2.0 * kernel.bandwidth * kernel.bandwidth);
    let (m, n) = (x.len() as f64, y.len() as f64);
    let kxx = 2.0 * kernel_sum(x, x, gamma, true) / (m * (m - 1.0));
    let kyy = 2.0 * kernel_sum(y, y, gamma, true) / (n * (n - 1.0));
    let kxy = kernel_sum(x, y, gamma, false) / (m * n);
    Ok(kxx + kyy - 2.0 * kxy)
}

/// MMD with the median-heuristic bandwidth (or an override).
pub fn mmd_median(x: &EmbeddingSet, y: &EmbeddingSet, opts: &MmdOptions) -> Result<MmdResult> {
    if x.len() < 2 || y.len() < 2 {
        return Err(Error::Contract(format!(
            "MMD needs at least 2 samples per set, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    let bandwidth = match opts.bandwidth {
        Some(b) => b,
        None => median_bandwidth(x, y, opts.pair_subsample_cap, opts.seed)?,
    };
    let kernel = KernelConfig {
        bandwidth,
        pair_subsample_cap: opts.pair_subsample_cap,
    };
    let raw = mmd_unbiased(x, y, &kernel)?;
    Ok(MmdResult {
        value: if opts.clamp { raw.max(0.0) } else { raw },
        bandwidth,
    })
}

/// MMD between generated and anchor PRISM embeddings (unit rows required).
pub fn mmd_prism(generated: &EmbeddingSet, anchor: &EmbeddingSet, opts: &MmdOptions) -> Result<MmdResult> {
    for (name, s) in [("generated", generated), ("anchor", anchor)] {
        if !s.rows_are_unit() {
            return Err(Error::Contract(format!("{name} set has non-unit rows")));
        }
    }
    mmd_median(generated, anchor, opts)
}
