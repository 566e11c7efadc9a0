//! Full-reference image quality: PSNR and Gaussian-window SSIM.

use crate::error::{Error, Result};
use crate::imaging::ImageRGB;

/// Reported for identical images instead of +inf.
pub const PSNR_CAP_DB: f64 = 99.0;

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const C1: f64 = 0.01 * 0.01;
const C2: f64 = 0.03 * 0.03;

/// PSNR in dB for data range 1.0, capped at [`PSNR_CAP_DB`].
pub fn psnr(a: &ImageRGB, b: &ImageRGB) -> Result<f64> {
    a.same_shape(b)?;
    let sse: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| (f64::from(x) - f64::from(y)).powi(2))
        .sum();
    let mse = sse / a.data().len() as f64;
    if mse == 0.0 {
        return Ok(PSNR_CAP_DB);
    }
    Ok((10.0 * (1.0 / mse).log10()).min(PSNR_CAP_DB))
}

fn gaussian_window() -> [f64; SSIM_WINDOW] {
    let mut w = [0.0; SSIM_WINDOW];
    let half = (SSIM_WINDOW / 2) as f64;
    for (i, v) in w.iter_mut().enumerate() {
        let d = i as f64 - half;
        *v = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
    w
}

/// Separable "valid" filtering of a w×h plane; output is (w-10)×(h-10).
fn filter_valid(plane: &[f64], w: usize, h: usize, k: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let ow = w - SSIM_WINDOW + 1;
    let oh = h - SSIM_WINDOW + 1;
    let mut rows = vec![0.0; ow * h];
    for y in 0..h {
        let src = &plane[y * w..(y + 1) * w];
        for x in 0..ow {
            rows[y * ow + x] = k.iter().zip(&src[x..x + SSIM_WINDOW]).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = k.iter().enumerate().map(|(i, kv)| kv * rows[(y + i) * ow + x]).sum();
        }
    }
    out
}

fn ssim_plane(x: &[f64], y: &[f64], w: usize, h: usize, k: &[f64; SSIM_WINDOW]) -> f64 {
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(y).map(|(a, b)| a * b).collect();
    let mx = filter_valid(x, w, h, k);
    let my = filter_valid(y, w, h, k);
    let sxx = filter_valid(&xx, w, h, k);
    let syy = filter_valid(&yy, w, h, k);
    let sxy = filter_valid(&xy, w, h, k);
    let n = mx.len() as f64;
    let mut total = 0.0;
    for i in 0..mx.len() {
        let (ux, uy) = (mx[i], my[i]);
        let vx = sxx[i] - ux * ux;
        let vy = syy[i] - uy * uy;
        let cxy = sxy[i] - ux * uy;
        total += ((2.0 * ux * uy + C1) * (2.0 * cxy + C2)) / ((ux * ux + uy * uy + C1) * (vx + vy + C2));
    }
    total / n
}

/// Mean SSIM over valid 11×11 Gaussian windows (σ 1.5), averaged over channels.
pub fn ssim(a: &ImageRGB, b: &ImageRGB) -> Result<f64> {
    a.same_shape(b)?;
    let (w, h) = (a.width(), a.height());
    if w.min(h) < SSIM_WINDOW {
        return Err(Error::Shape(format!(
            "ssim needs both sides >= {SSIM_WINDOW}, got {w}x{h}"
        )));
    }
    let k = gaussian_window();
    let mut sum = 0.0;
    for c in 0..3 {
        let x: Vec<f64> = a.channel(c).into_iter().map(f64::from).collect();
        let y: Vec<f64> = b.channel(c).into_iter().map(f64::from).collect();
        sum += ssim_plane(&x, &y, w, h, &k);
    }
    Ok(sum / 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psnr_cases() {
        let z = ImageRGB::filled(4, 4, [0.0; 3]).unwrap();
        let o = ImageRGB::filled(4, 4, [1.0; 3]).unwrap();
        assert_eq!(psnr(&z, &z).unwrap(), PSNR_CAP_DB);
        assert!(psnr(&z, &o).unwrap().abs() < 1e-12);
        let half = ImageRGB::filled(4, 4, [0.1; 3]).unwrap();
        // mse = 0.01 -> 20 dB
        assert!((psnr(&z, &half).unwrap() - 20.0).abs() < 1e-5);
    }

    #[test]
    fn psnr_shape_mismatch() {
        let a = ImageRGB::filled(4, 4, [0.0; 3]).unwrap();
        let b = ImageRGB::filled(4, 5, [0.0; 3]).unwrap();
        assert!(matches!(psnr(&a, &b), Err(Error::Shape(_))));
    }

    #[test]
    fn ssim_identical_is_one() {
        let a = ImageRGB::from_fn(16, 13, |x, y| [x as f32 / 16.0, y as f32 / 13.0, 0.3]).unwrap();
        assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ssim_constant_closed_form() {
        let (c1, c2) = (0.25f64, 0.75f64);
        let a = ImageRGB::filled(12, 12, [c1 as f32; 3]).unwrap();
        let b = ImageRGB::filled(12, 12, [c2 as f32; 3]).unwrap();
        let want = (2.0 * c1 * c2 + C1) / (c1 * c1 + c2 * c2 + C1);
        assert!((ssim(&a, &b).unwrap() - want).abs() < 1e-9);
    }

    #[test]
    fn ssim_too_small() {
        let a = ImageRGB::filled(10, 20, [0.5; 3]).unwrap();
        assert!(ssim(&a, &a).is_err());
    }

    #[test]
    fn window_sums_to_one() {
        let k = gaussian_window();
        assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(k[0], k[10]);
    }
}
