mod common;

use nalgebra::{DMatrix, DVector};
use prism_core::corruptions::composite_and_resize;
use prism_core::metrics::{
    auc, frechet_distance, gaussian_stats, joint_concat, mmd_unbiased, pearson, psnr, ssim, GaussianStats, KernelConfig,
};
use prism_core::{EmbeddingSet, ImageRGB, ImageRGBA, Role};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn psnr_matches_loop_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..5 {
        let a = ImageRGB::new(23, 17, (0..23 * 17 * 3).map(|_| rng.random()).collect()).unwrap();
        let b = ImageRGB::new(23, 17, (0..23 * 17 * 3).map(|_| rng.random()).collect()).unwrap();
        assert!((psnr(&a, &b).unwrap() - common::psnr_loop(&a, &b)).abs() < 1e-6);
    }
}

#[test]
fn ssim_negative_matches_direct_window() {
    let img = common::natural_image(4, 48);
    let neg = ImageRGB::new(48, 48, img.data().iter().map(|v| 1.0 - v).collect()).unwrap();
    let got = ssim(&img, &neg).unwrap();
    let want = common::ssim_direct(&img, &neg);
    assert!(got < 1.0);
    assert!((got - want).abs() < 1e-4, "{got} vs {want}");
}

#[test]
fn ssim_noise_matches_direct_window() {
    let a = common::natural_image(5, 32);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let b = ImageRGB::new(
        32,
        32,
        a.data().iter().map(|v| v + rng.random_range(-0.1..0.1)).collect(),
    )
    .unwrap();
    assert!((ssim(&a, &b).unwrap() - common::ssim_direct(&a, &b)).abs() < 1e-9);
}

#[test]
fn checkerboard_downsample_matches_bilinear_oracle() {
    let src = ImageRGBA::new(
        512,
        512,
        (0..512 * 512)
            .flat_map(|i| {
                let (x, y) = (i % 512, i / 512);
                let v = if (x / 3 + y / 5) % 2 == 0 { 0.9 } else { 0.1 };
                [v, 1.0 - v, v * 0.5, 1.0]
            })
            .collect(),
    )
    .unwrap();
    let out = composite_and_resize(&src, 256).unwrap();
    for y in 0..256 {
        for x in 0..256 {
            // sampling at 2x+0.5 averages the 2x2 source block
            let mut want = [0.0f64; 3];
            for (sx, sy) in [
                (2 * x, 2 * y),
                (2 * x + 1, 2 * y),
                (2 * x, 2 * y + 1),
                (2 * x + 1, 2 * y + 1),
            ] {
                let p = src.pixel(sx, sy);
                for c in 0..3 {
                    want[c] += f64::from(p[c]) / 4.0;
                }
            }
            let got = out.pixel(x, y);
            for c in 0..3 {
                assert!((f64::from(got[c]) - want[c]).abs() < 1e-6);
            }
        }
    }
}

#[test]
fn half_transparent_composites_towards_white() {
    let src = ImageRGBA::new(2, 2, [0.0, 0.0, 0.0, 0.5].repeat(4)).unwrap();
    let out = composite_and_resize(&src, 2).unwrap();
    assert!(out.data().iter().all(|&v| (v - 0.5).abs() < 1e-7));
}

fn oracle_stats(x: &EmbeddingSet) -> GaussianStats {
    let (n, d) = (x.len(), x.dim());
    let mut mean = vec![0.0; d];
    for r in x.rows() {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += f64::from(*v) / n as f64;
        }
    }
    let mut cov = DMatrix::zeros(d, d);
    for r in x.rows() {
        for i in 0..d {
            for j in 0..d {
                cov[(i, j)] += (f64::from(r[i]) - mean[i]) * (f64::from(r[j]) - mean[j]) / (n - 1) as f64;
            }
        }
    }
    GaussianStats::new(DVector::from_vec(mean), cov, n).unwrap()
}

#[test]
fn joint_pipeline_equals_oracle_stats() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (s1, t1) = (
        common::gaussian_rows(&mut rng, 300, 3, 0.0, 1.0),
        common::gaussian_rows(&mut rng, 300, 2, 0.5, 1.0),
    );
    let (s2, t2) = (
        common::gaussian_rows(&mut rng, 300, 3, 0.2, 1.5),
        common::gaussian_rows(&mut rng, 300, 2, 0.0, 0.7),
    );
    let angles: Vec<f64> = (0..300).map(|i| 22.5 * (i % 16) as f64).collect();
    let j1 = joint_concat(&s1, &t1, Some(&angles)).unwrap();
    let j2 = joint_concat(&s2, &t2, Some(&angles)).unwrap();
    let got = frechet_distance(&gaussian_stats(&j1).unwrap(), &gaussian_stats(&j2).unwrap()).unwrap();
    let want = frechet_distance(&oracle_stats(&j1), &oracle_stats(&j2)).unwrap();
    assert!((got - want).abs() < 1e-6 * want.max(1.0), "{got} vs {want}");
}

#[test]
fn fd_of_shifted_unit_gaussians() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let a = common::gaussian_rows(&mut rng, 5000, 4, 0.0, 1.0);
    let b = common::gaussian_rows(&mut rng, 5000, 4, 1.0, 1.0);
    let fd = frechet_distance(&gaussian_stats(&a).unwrap(), &gaussian_stats(&b).unwrap()).unwrap();
    assert!((fd - 4.0).abs() <= 0.2, "{fd}");
}

fn set_strategy() -> impl Strategy<Value = (Vec<Vec<f32>>, Vec<Vec<f32>>)> {
    (2usize..5).prop_flat_map(|d| {
        let row = prop::collection::vec(-2.0f32..2.0, d);
        (
            prop::collection::vec(row.clone(), 2..12),
            prop::collection::vec(row, 2..12),
        )
    })
}

proptest! {
    #[test]
    fn mmd_symmetric_and_order_invariant((x, y) in set_strategy(), rot in 0usize..12) {
        let k = KernelConfig::new(1.3).unwrap();
        let xs = EmbeddingSet::from_rows(&x, Role::Generated).unwrap();
        let ys = EmbeddingSet::from_rows(&y, Role::Anchor).unwrap();
        let a = mmd_unbiased(&xs, &ys, &k).unwrap();
        prop_assert!((a - mmd_unbiased(&ys, &xs, &k).unwrap()).abs() < 1e-12);
        let mut xr = x.clone();
        let n = xr.len();
        xr.rotate_left(rot % n);
        let xs2 = EmbeddingSet::from_rows(&xr, Role::Generated).unwrap();
        prop_assert!((a - mmd_unbiased(&xs2, &ys, &k).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn auc_invariant_under_monotone_maps(scores in prop::collection::vec(-5.0f64..5.0, 2..40), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut labels: Vec<bool> = scores.iter().map(|_| rng.random()).collect();
        labels[0] = true;
        labels[1] = false;
        let base = auc(&scores, &labels).unwrap();
        let mapped: Vec<f64> = scores.iter().map(|s| s.exp() * 3.0 + 1.0).collect();
        prop_assert!((base - auc(&mapped, &labels).unwrap()).abs() < 1e-12);
        prop_assert!((base - common::brute_auc(&scores, &labels)).abs() < 1e-12);
    }

    #[test]
    fn pearson_affine_invariant(
        pairs in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 3..30),
        a in 0.1f64..10.0,
        b in -5.0f64..5.0,
    ) {
        let (x, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        if let Ok(r) = pearson(&x, &y) {
            let xs: Vec<f64> = x.iter().map(|v| a * v + b).collect();
            prop_assert!((r - pearson(&xs, &y).unwrap()).abs() < 1e-9);
            prop_assert!(r.abs() <= 1.0 + 1e-12);
        }
    }
}
