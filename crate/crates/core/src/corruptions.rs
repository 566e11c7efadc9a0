//! Seeded image degradations at three fixed severities per kind.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::imaging::{ImageRGB, ImageRGBA};

pub const BLUR_SIGMAS: [f64; 3] = [1.0, 1.5, 5.0];
pub const HUE_SHIFTS: [f64; 3] = [-0.1, -0.3, -0.5];
pub const NOISE_WEIGHTS: [f64; 3] = [0.8, 0.6, 0.4];
pub const FLIP_RATES: [f64; 3] = [0.005, 0.02, 0.05];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CorruptionKind {
    Blur,
    Hue,
    GaussianNoise,
    SaltPepper,
}

impl CorruptionKind {
    pub const ALL: [CorruptionKind; 4] = [
        CorruptionKind::Blur,
        CorruptionKind::Hue,
        CorruptionKind::GaussianNoise,
        CorruptionKind::SaltPepper,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CorruptionKind::Blur => "blur",
            CorruptionKind::Hue => "hue",
            CorruptionKind::GaussianNoise => "gaussian_noise",
            CorruptionKind::SaltPepper => "salt_pepper",
        }
    }

    /// Ladder parameter at `severity` (σ, hue shift, blend weight or flip rate).
    pub fn parameter(self, severity: usize) -> Option<f64> {
        let ladder = match self {
            CorruptionKind::Blur => &BLUR_SIGMAS,
            CorruptionKind::Hue => &HUE_SHIFTS,
            CorruptionKind::GaussianNoise => &NOISE_WEIGHTS,
            CorruptionKind::SaltPepper => &FLIP_RATES,
        };
        ladder.get(severity).copied()
    }
}

impl fmt::Display for CorruptionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CorruptionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CorruptionKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Contract(format!("unknown corruption kind {s:?}")))
    }
}

/// Distribution of the image blended in by `gaussian_noise`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseSource {
    #[default]
    Uniform,
    /// N(0.5, 0.25) clipped to [0,1].
    ClippedGaussian,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorruptionSpec {
    kind: CorruptionKind,
    severity: usize,
    pub seed: u64,
    pub noise_source: NoiseSource,
}

impl CorruptionSpec {
    pub fn new(kind: CorruptionKind, severity: usize, seed: u64) -> Result<Self> {
        if kind.parameter(severity).is_none() {
            return Err(Error::Contract(format!("severity must be 0, 1 or 2, got {severity}")));
        }
        Ok(CorruptionSpec {
            kind,
            severity,
            seed,
            noise_source: NoiseSource::Uniform,
        })
    }

    pub fn with_noise_source(mut self, src: NoiseSource) -> Self {
        self.noise_source = src;
        self
    }

    pub fn kind(&self) -> CorruptionKind {
        self.kind
    }

    pub fn severity(&self) -> usize {
        self.severity
    }

    pub fn parameter(&self) -> f64 {
        self.kind.parameter(self.severity).expect("validated in new")
    }

    /// All twelve specs, kind-major then severity.
    pub fn grid(seed: u64) -> Vec<CorruptionSpec> {
        CorruptionKind::ALL
            .into_iter()
            .flat_map(|k| (0..3).map(move |s| CorruptionSpec::new(k, s, seed).expect("ladder index")))
            .collect()
    }
}

pub fn corrupt(img: &ImageRGB, spec: &CorruptionSpec) -> Result<ImageRGB> {
    let p = spec.parameter();
    match spec.kind {
        CorruptionKind::Blur => gaussian_blur(img, p),
        CorruptionKind::Hue => hue_shift(img, p),
        CorruptionKind::GaussianNoise => blend_noise(img, p, spec.seed, spec.noise_source),
        CorruptionKind::SaltPepper => salt_pepper(img, p, spec.seed),
    }
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let r = (3.0 * sigma).ceil() as isize;
    let mut k: Vec<f64> = (-r..=r)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= s);
    k
}

/// Separable Gaussian blur with clamp-to-edge borders, truncated at 3σ.
pub fn gaussian_blur(img: &ImageRGB, sigma: f64) -> Result<ImageRGB> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Contract(format!("blur sigma must be > 0, got {sigma}")));
    }
    let k = gaussian_kernel(sigma);
    let r = (k.len() / 2) as isize;
    let (w, h) = (img.width() as isize, img.height() as isize);
    let src = img.data();
    let at = |x: isize, y: isize, c: usize| (y * w + x) as usize * 3 + c;

    let mut tmp = vec![0.0f64; src.len()];
    for y in 0..h {
        for x in 0..w {
            for c in 0..3 {
                tmp[at(x, y, c)] = k
                    .iter()
                    .enumerate()
                    .map(|(i, kv)| kv * f64::from(src[at((x + i as isize - r).clamp(0, w - 1), y, c)]))
                    .sum();
            }
        }
    }
    let mut out = vec![0.0f32; src.len()];
    for y in 0..h {
        for x in 0..w {
            for c in 0..3 {
                let v: f64 = k
                    .iter()
                    .enumerate()
                    .map(|(i, kv)| kv * tmp[at(x, (y + i as isize - r).clamp(0, h - 1), c)])
                    .sum();
                out[at(x, y, c)] = v as f32;
            }
        }
    }
    ImageRGB::new(img.width(), img.height(), out)
}

pub fn rgb_to_hsv([r, g, b]: [f64; 3]) -> [f64; 3] {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let d = max - min;
    let s = if max > 0.0 { d / max } else { 0.0 };
    let h = if d == 0.0 {
        0.0
    } else if max == r {
        ((g - b) / d).rem_euclid(6.0) / 6.0
    } else if max == g {
        ((b - r) / d + 2.0) / 6.0
    } else {
        ((r - g) / d + 4.0) / 6.0
    };
    [h, s, max]
}

pub fn hsv_to_rgb([h, s, v]: [f64; 3]) -> [f64; 3] {
    if s == 0.0 {
        return [v, v, v];
    }
    let h6 = h.rem_euclid(1.0) * 6.0;
    let i = (h6.floor() as usize) % 6;
    let f = h6 - h6.floor();
    let p = v * (1.0 - s);
    let q = v * (1.0 - s * f);
    let t = v * (1.0 - s * (1.0 - f));
    match i {
        0 => [v, t, p],
        1 => [q, v, p],
        2 => [p, v, t],
        3 => [p, q, v],
        4 => [t, p, v],
        _ => [v, p, q],
    }
}

/// Rotates hue by `shift` turns (wrapping mod 1).
pub fn hue_shift(img: &ImageRGB, shift: f64) -> Result<ImageRGB> {
    let out = img
        .data()
        .chunks(3)
        .flat_map(|p| {
            let [h, s, v] = rgb_to_hsv([p[0].into(), p[1].into(), p[2].into()]);
            hsv_to_rgb([(h + shift).rem_euclid(1.0), s, v]).map(|x| x as f32)
        })
        .collect();
    ImageRGB::new(img.width(), img.height(), out)
}

/// `t·img + (1−t)·u` with a fresh noise value per pixel-channel.
pub fn blend_noise(img: &ImageRGB, t: f64, seed: u64, source: NoiseSource) -> Result<ImageRGB> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Contract(format!("blend weight must be in [0,1], got {t}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.5f64, 0.25).expect("constant parameters");
    let out = img
        .data()
        .iter()
        .map(|&x| {
            let u = match source {
                NoiseSource::Uniform => rng.random::<f64>(),
                NoiseSource::ClippedGaussian => normal.sample(&mut rng).clamp(0.0, 1.0),
            };
            (t * f64::from(x) + (1.0 - t) * u) as f32
        })
        .collect();
    ImageRGB::new(img.width(), img.height(), out)
}

/// Flips each pixel to black or white (all channels) with probability `rate`.
///
/// Two uniforms are drawn per pixel whatever the rate, so for a fixed seed
/// the flipped set at a lower rate is a subset of the set at a higher rate.
pub fn salt_pepper(img: &ImageRGB, rate: f64, seed: u64) -> Result<ImageRGB> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::Contract(format!("flip rate must be in [0,1], got {rate}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = img.data().to_vec();
    for px in out.chunks_mut(3) {
        let flip: f64 = rng.random();
        let salt: bool = rng.random::<f64>() < 0.5;
        if flip < rate {
            px.fill(if salt { 1.0 } else { 0.0 });
        }
    }
    ImageRGB::new(img.width(), img.height(), out)
}

/// Composites over white, then bilinearly resizes to `size`×`size` using
/// half-pixel-centre sampling with clamped borders.
pub fn composite_and_resize(img: &ImageRGBA, size: usize) -> Result<ImageRGB> {
    if size == 0 {
        return Err(Error::Contract("target size must be nonzero".into()));
    }
    let (w, h) = (img.width(), img.height());
    let flat: Vec<f64> = img
        .data()
        .chunks(4)
        .flat_map(|p| {
            let a = f64::from(p[3]);
            [0, 1, 2].map(|c| f64::from(p[c]) * a + (1.0 - a))
        })
        .collect();
    let sx = w as f64 / size as f64;
    let sy = h as f64 / size as f64;
    let sample = |dst: usize, scale: f64, n: usize| -> (usize, usize, f64) {
        let s = ((dst as f64 + 0.5) * scale - 0.5).clamp(0.0, (n - 1) as f64);
        let i0 = s.floor() as usize;
        let i1 = (i0 + 1).min(n - 1);
        (i0, i1, s - i0 as f64)
    };
    let mut out = Vec::with_capacity(size * size * 3);
    for y in 0..size {
        let (y0, y1, fy) = sample(y, sy, h);
        for x in 0..size {
            let (x0, x1, fx) = sample(x, sx, w);
            for c in 0..3 {
                let p = |xx: usize, yy: usize| flat[(yy * w + xx) * 3 + c];
                let top = p(x0, y0) * (1.0 - fx) + p(x1, y0) * fx;
                let bot = p(x0, y1) * (1.0 - fx) + p(x1, y1) * fx;
                out.push((top * (1.0 - fy) + bot * fy) as f32);
            }
        }
    }
    ImageRGB::new(size, size, out)
}
