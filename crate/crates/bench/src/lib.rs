//! Fixture generators shared by the benchmarks.

use prism_core::{ActivationBlock, ActivationStack, BinaryMask, EmbeddingSet, ImageRGB, Role};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `n` unit rows of dimension `d`; `shift` is added to the first coordinate before normalising.
pub fn unit_set(n: usize, d: usize, shift: f32, seed: u64) -> EmbeddingSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f32>> = (0..n)
        .map(|_| {
            let mut v: Vec<f32> = (0..d).map(|_| rng.random_range(-1.0f32..1.0)).collect();
            v[0] += shift;
            let norm = v.iter().map(|x| x * x).sum::<f32>().sqrt();
            v.iter().map(|x| x / norm).collect()
        })
        .collect();
    EmbeddingSet::from_rows(&rows, Role::Generated).expect("rows share a dimension")
}

/// A stack with the given `(H, W, C)` block shapes and uniform values.
pub fn activation_stack(shapes: &[(usize, usize, usize)], seed: u64) -> ActivationStack {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let blocks = shapes
        .iter()
        .map(|&(h, w, c)| {
            let data = (0..h * w * c).map(|_| rng.random_range(-1.0f32..1.0)).collect();
            ActivationBlock::new(h, w, c, data).expect("valid block")
        })
        .collect();
    ActivationStack::new(blocks).expect("nonempty stack")
}

/// Blobby mask: a union of random discs.
pub fn blob_mask(size: usize, discs: usize, seed: u64) -> BinaryMask {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centres: Vec<(f64, f64, f64)> = (0..discs)
        .map(|_| {
            let s = size as f64;
            (
                rng.random_range(0.0..s),
                rng.random_range(0.0..s),
                rng.random_range(0.03..0.15) * s,
            )
        })
        .collect();
    BinaryMask::from_fn(size, size, |x, y| {
        centres
            .iter()
            .any(|&(cx, cy, r)| (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2) <= r * r)
    })
}

/// Smooth colour image with some high-frequency texture.
pub fn test_image(size: usize) -> ImageRGB {
    ImageRGB::from_fn(size, size, |x, y| {
        let (u, v) = (x as f32 / size as f32, y as f32 / size as f32);
        let t = ((x / 4 + y / 4) % 2) as f32 * 0.2;
        [u * 0.8 + t, v * 0.8, (u + v) * 0.4 + t]
    })
    .expect("valid image")
}
