//! Per-pixel normalised spatial pooling of block activations.
//!
//! Each block map is reduced to the mean of its unit-length pixel vectors, and
//! the block means are concatenated in block order into the raw feature.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::types::{ActivationBlock, ActivationStack, FeatureVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoolingConfig {
    /// Pixels whose channel norm is below this contribute a zero vector.
    pub zero_pixel_epsilon: f64,
}

impl Default for PoolingConfig {
    fn default() -> Self {
        PoolingConfig {
            zero_pixel_epsilon: 1e-12,
        }
    }
}

impl PoolingConfig {
    fn check(&self) -> Result<()> {
        if self.zero_pixel_epsilon > 0.0 {
            Ok(())
        } else {
            Err(Error::Contract("pooling epsilon must be > 0".into()))
        }
    }
}

/// Pools one block into a vector of length C, accumulating in f64.
pub fn pool_block_f64(block: &ActivationBlock, cfg: &PoolingConfig) -> Result<Vec<f64>> {
    cfg.check()?;
    let c = block.channels();
    let mut acc = vec![0.0f64; c];
    for px in block.pixels() {
        let mut sq = 0.0f64;
        for &v in px {
            if !v.is_finite() {
                return Err(Error::Data("non-finite activation".into()));
            }
            sq += f64::from(v) * f64::from(v);
        }
        let n = sq.sqrt();
        // zero pixels still count in the 1/(H*W) denominator
        if n < cfg.zero_pixel_epsilon {
            continue;
        }
        let inv = 1.0 / n;
        for (a, &v) in acc.iter_mut().zip(px) {
            *a += f64::from(v) * inv;
        }
    }
    let area = (block.height() * block.width()) as f64;
    acc.iter_mut().for_each(|a| *a /= area);
    Ok(acc)
}

pub fn pool_block(block: &ActivationBlock, cfg: &PoolingConfig) -> Result<FeatureVector> {
    let v = pool_block_f64(block, cfg)?;
    FeatureVector::new(v.into_iter().map(|x| x as f32).collect())
}

/// Concatenates the pooled blocks in order; dim = sum of channel counts.
pub fn build_raw_feature(stack: &ActivationStack, cfg: &PoolingConfig) -> Result<FeatureVector> {
    let pooled: Vec<Vec<f64>> = stack
        .blocks()
        .par_iter()
        .map(|b| pool_block_f64(b, cfg))
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(stack.total_channels());
    for p in pooled {
        out.extend(p.into_iter().map(|x| x as f32));
    }
    FeatureVector::new(out)
}
