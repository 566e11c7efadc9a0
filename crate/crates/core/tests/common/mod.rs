//! Independent reference implementations and fixture generators shared by
//! the integration tests and the acceptance runner.
#![allow(dead_code)]

use prism_core::geometry::{BinaryMask, Camera, TriMesh, Vec3};
use prism_core::head::{MlpHead, Param};
use prism_core::manifest::{Label, Manifest, Split, TripletRecord};
use prism_core::train::{batch_loss, TripletInput};
use prism_core::{ActivationBlock, ActivationStack, EmbeddingSet, ImageRGB, RelativePose, Role};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn random_stack(rng: &mut ChaCha8Rng, max_blocks: usize, max_hw: usize, max_c: usize) -> ActivationStack {
    let b = rng.random_range(1..=max_blocks);
    let blocks = (0..b)
        .map(|_| {
            let (h, w, c) = (
                rng.random_range(1..=max_hw),
                rng.random_range(1..=max_hw),
                rng.random_range(1..=max_c),
            );
            let data = (0..h * w * c)
                .map(|_| {
                    // sprinkle exact zeros so zero-norm pixels get exercised
                    if rng.random::<f64>() < 0.02 {
                        0.0
                    } else {
                        rng.random_range(-3.0f32..3.0)
                    }
                })
                .collect();
            ActivationBlock::new(h, w, c, data).unwrap()
        })
        .collect();
    ActivationStack::new(blocks).unwrap()
}

/// Per-pixel normalised mean pooling written as plain index loops.
pub fn scalar_pool(stack: &ActivationStack) -> Vec<f64> {
    let mut out = Vec::new();
    for b in stack.blocks() {
        let (h, w, c) = b.shape();
        let d = b.data();
        let mut acc = vec![0.0f64; c];
        for i in 0..h {
            for j in 0..w {
                let base = (i * w + j) * c;
                let mut n2 = 0.0;
                for k in 0..c {
                    n2 += (d[base + k] as f64) * (d[base + k] as f64);
                }
                let n = n2.sqrt();
                if n < 1e-12 {
                    continue;
                }
                for k in 0..c {
                    acc[k] += d[base + k] as f64 / n;
                }
            }
        }
        for a in acc {
            out.push(a / (h * w) as f64);
        }
    }
    out
}

pub fn random_unit_rows(rng: &mut ChaCha8Rng, n: usize, d: usize) -> EmbeddingSet {
    let normal = Normal::new(0.0, 1.0).unwrap();
    let rows: Vec<Vec<f32>> = (0..n)
        .map(|_| {
            let v: Vec<f64> = (0..d).map(|_| normal.sample(rng)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter().map(|x| (x / norm) as f32).collect()
        })
        .collect();
    EmbeddingSet::from_rows(&rows, Role::Generated).unwrap()
}

pub fn gaussian_rows(rng: &mut ChaCha8Rng, n: usize, d: usize, mean: f64, std: f64) -> EmbeddingSet {
    let normal = Normal::new(mean, std).unwrap();
    let rows: Vec<Vec<f32>> = (0..n)
        .map(|_| (0..d).map(|_| normal.sample(rng) as f32).collect())
        .collect();
    EmbeddingSet::from_rows(&rows, Role::Generated).unwrap()
}

/// Mean off-diagonal RBF kernel value of a set with itself.
pub fn mean_offdiag_kernel(x: &EmbeddingSet, sigma: f64) -> f64 {
    let m = x.len();
    let mut s = 0.0;
    for i in 0..m {
        for j in 0..m {
            if i != j {
                let d2: f64 = x
                    .row(i)
                    .iter()
                    .zip(x.row(j))
                    .map(|(a, b)| (*a as f64 - *b as f64).powi(2))
                    .sum();
                s += (-d2 / (2.0 * sigma * sigma)).exp();
            }
        }
    }
    s / (m * (m - 1)) as f64
}

/// Fraction of positive/negative pairs ranked correctly, ties counted half.
pub fn brute_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, &si) in scores.iter().enumerate() {
        for (j, &sj) in scores.iter().enumerate() {
            if labels[i] && !labels[j] {
                den += 1.0;
                if si > sj {
                    num += 1.0;
                } else if si == sj {
                    num += 0.5;
                }
            }
        }
    }
    num / den
}

/// Möller–Trumbore written out independently of the crate.
fn mt(o: [f64; 3], d: [f64; 3], v0: [f64; 3], v1: [f64; 3], v2: [f64; 3]) -> Option<f64> {
    let sub = |a: [f64; 3], b: [f64; 3]| [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    let cross = |a: [f64; 3], b: [f64; 3]| {
        [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ]
    };
    let dot = |a: [f64; 3], b: [f64; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    let (e1, e2) = (sub(v1, v0), sub(v2, v0));
    let p = cross(d, e2);
    let det = dot(e1, p);
    if det.abs() < 1e-14 {
        return None;
    }
    let s = sub(o, v0);
    let u = dot(s, p) / det;
    let q = cross(s, e1);
    let v = dot(d, q) / det;
    if u < 0.0 || v < 0.0 || u + v > 1.0 {
        return None;
    }
    let t = dot(e2, q) / det;
    (t > 0.0).then_some(t)
}

/// Face id per pixel by casting a ray through each pixel centre.
pub fn raycast_face_ids(mesh: &TriMesh, cam: &Camera) -> Vec<i32> {
    let eye = cam.position();
    let arr = |v: Vec3| [v.x, v.y, v.z];
    let front: Vec<bool> = (0..mesh.face_count())
        .map(|f| mesh.face_normal(f).dot(&(eye - mesh.face_vertices(f)[0])) > 0.0)
        .collect();
    let mut out = vec![-1; cam.width() * cam.height()];
    for y in 0..cam.height() {
        for x in 0..cam.width() {
            let d = arr(cam.pixel_ray(x, y));
            let mut best = f64::INFINITY;
            for f in 0..mesh.face_count() {
                if !front[f] {
                    continue;
                }
                let [a, b, c] = mesh.face_vertices(f);
                if let Some(t) = mt(arr(eye), d, arr(a), arr(b), arr(c)) {
                    if t < best {
                        best = t;
                        out[y * cam.width() + x] = f as i32;
                    }
                }
            }
        }
    }
    out
}

/// Pixels whose 3×3 neighbourhood holds a single id in `ids`.
pub fn interior_pixels(ids: &[i32], w: usize, h: usize) -> Vec<usize> {
    let mut out = Vec::new();
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let c = ids[y * w + x];
            let same = (0..3).all(|dy| (0..3).all(|dx| ids[(y + dy - 1) * w + x + dx - 1] == c));
            if same {
                out.push(y * w + x);
            }
        }
    }
    out
}

pub fn naive_morph(m: &BinaryMask, r: usize, dilate: bool) -> BinaryMask {
    let ri = r as isize;
    BinaryMask::from_fn(m.width(), m.height(), |x, y| {
        for dy in -ri..=ri {
            for dx in -ri..=ri {
                if dx * dx + dy * dy > ri * ri {
                    continue;
                }
                let (xx, yy) = (x as isize + dx, y as isize + dy);
                let inside = xx >= 0 && yy >= 0 && (xx as usize) < m.width() && (yy as usize) < m.height();
                let v = inside && m.get(xx as usize, yy as usize);
                // dilation: any set pixel decides; erosion: any unset pixel decides
                if v == dilate {
                    return dilate;
                }
            }
        }
        !dilate
    })
}

pub fn random_mask(rng: &mut ChaCha8Rng, w: usize, h: usize, density: f64) -> BinaryMask {
    let bits = (0..w * h).map(|_| rng.random::<f64>() < density).collect();
    BinaryMask::from_bits(w, h, bits).unwrap()
}

pub fn psnr_loop(a: &ImageRGB, b: &ImageRGB) -> f64 {
    let mut sse = 0.0;
    for y in 0..a.height() {
        for x in 0..a.width() {
            let (p, q) = (a.pixel(x, y), b.pixel(x, y));
            for c in 0..3 {
                sse += (p[c] as f64 - q[c] as f64).powi(2);
            }
        }
    }
    let mse = sse / (a.width() * a.height() * 3) as f64;
    if mse == 0.0 {
        99.0
    } else {
        (10.0 * (1.0 / mse).log10()).min(99.0)
    }
}

/// SSIM with a direct 2-D 11×11 Gaussian window (no separable filtering).
pub fn ssim_direct(a: &ImageRGB, b: &ImageRGB) -> f64 {
    let mut g = [[0.0f64; 11]; 11];
    let mut total = 0.0;
    for (i, row) in g.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            let (di, dj) = (i as f64 - 5.0, j as f64 - 5.0);
            *v = (-(di * di + dj * dj) / (2.0 * 1.5 * 1.5)).exp();
            total += *v;
        }
    }
    let (c1, c2) = (0.01f64.powi(2), 0.03f64.powi(2));
    let (w, h) = (a.width(), a.height());
    let mut acc = 0.0;
    for c in 0..3 {
        let mut sum = 0.0;
        let mut count = 0.0;
        for y in 0..=h - 11 {
            for x in 0..=w - 11 {
                let (mut mx, mut my, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
                for i in 0..11 {
                    for j in 0..11 {
                        let wgt = g[i][j] / total;
                        let p = a.pixel(x + j, y + i)[c] as f64;
                        let q = b.pixel(x + j, y + i)[c] as f64;
                        mx += wgt * p;
                        my += wgt * q;
                        sxx += wgt * p * p;
                        syy += wgt * q * q;
                        sxy += wgt * p * q;
                    }
                }
                let (vx, vy, cxy) = (sxx - mx * mx, syy - my * my, sxy - mx * my);
                sum += ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
                count += 1.0;
            }
        }
        acc += sum / count;
    }
    acc / 3.0
}

/// Smooth gradients, hard-edged shapes and fine texture, seeded.
pub fn natural_image(seed: u64, size: usize) -> ImageRGB {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let discs: Vec<(f64, f64, f64, [f32; 3])> = (0..6)
        .map(|_| {
            (
                rng.random_range(0.0..size as f64),
                rng.random_range(0.0..size as f64),
                rng.random_range(size as f64 / 12.0..size as f64 / 4.0),
                [rng.random(), rng.random(), rng.random()],
            )
        })
        .collect();
    let (fx, fy) = (rng.random_range(0.05..0.3), rng.random_range(0.05..0.3));
    let texture: Vec<f32> = (0..size * size).map(|_| rng.random_range(-0.05..0.05)).collect();
    ImageRGB::from_fn(size, size, |x, y| {
        let (xf, yf) = (x as f64, y as f64);
        let mut p = [
            (xf / size as f64) as f32 * 0.6 + 0.2,
            (yf / size as f64) as f32 * 0.6 + 0.2,
            (0.5 + 0.3 * (fx * xf).sin() * (fy * yf).cos()) as f32,
        ];
        for &(cx, cy, r, col) in &discs {
            if (xf - cx).powi(2) + (yf - cy).powi(2) <= r * r {
                p = col;
            }
        }
        let t = texture[y * size + x];
        p.map(|v| (v + t).clamp(0.0, 1.0))
    })
    .unwrap()
}

/// Central-difference check of `backward` over every parameter.
/// Returns the worst `|a − n| / max(|a|, |n|, floor)`.
pub fn gradient_check(head: &MlpHead, batch: &[TripletInput<'_>], margin: f64, step: f64, floor: f64) -> f64 {
    let (grads, _) = prism_core::train::backward(head, batch, margin).unwrap();
    let mut worst: f64 = 0.0;
    for p in Param::ALL {
        for i in 0..head.param(p).len() {
            let mut plus = head.clone();
            plus.param_mut(p)[i] += step;
            let mut minus = head.clone();
            minus.param_mut(p)[i] -= step;
            let num =
                (batch_loss(&plus, batch, margin).unwrap() - batch_loss(&minus, batch, margin).unwrap()) / (2.0 * step);
            let ana = grads.get(p)[i];
            worst = worst.max((ana - num).abs() / ana.abs().max(num.abs()).max(floor));
        }
    }
    worst
}

/// Raw features plus an aligned manifest for the synthetic training task.
///
/// Anchors are random vectors; positives are anchor plus small noise;
/// pose negatives are a cyclic coordinate shift of the anchor; inpaint
/// negatives have a random 40% of coordinates replaced.
pub struct SyntheticTask {
    pub manifest: Manifest,
    pub features: EmbeddingSet,
}

pub fn synthetic_task(
    rng: &mut ChaCha8Rng,
    anchors: usize,
    positives: usize,
    dim: usize,
    prefix: &str,
) -> SyntheticTask {
    let coord = Normal::new(0.0, 1.0 / (dim as f64).sqrt()).unwrap();
    let small = Normal::new(0.0, 0.1 / (dim as f64).sqrt()).unwrap();
    let mut records = Vec::new();
    let mut rows: Vec<Vec<f32>> = Vec::new();
    let pose = RelativePose::new(90.0, 0.0, 0.0);
    let push = |records: &mut Vec<TripletRecord>,
                src: &str,
                tgt: String,
                label: Label,
                weight: f64,
                anchor: Option<String>| {
        records.push(TripletRecord {
            source_id: src.to_owned(),
            target_id: tgt,
            pose,
            label,
            weight,
            activation_path: format!("synthetic/{}.prsa", records.len()),
            anchor_id: anchor,
        });
    };
    for a in 0..anchors {
        let src = format!("{prefix}{a:04}/src");
        let tgt = format!("{prefix}{a:04}/tgt");
        let base: Vec<f64> = (0..dim).map(|_| coord.sample(rng)).collect();
        push(&mut records, &src, tgt.clone(), Label::GroundTruth, 1.0, None);
        rows.push(base.iter().map(|&v| v as f32).collect());
        for p in 0..positives {
            push(
                &mut records,
                &src,
                format!("{tgt}_p{p}"),
                Label::Positive,
                1.0,
                Some(tgt.clone()),
            );
            rows.push(base.iter().map(|&v| (v + small.sample(rng)) as f32).collect());
        }
        let shift = dim / 4;
        push(
            &mut records,
            &src,
            format!("{tgt}_pose"),
            Label::NegativePose,
            1.0,
            Some(tgt.clone()),
        );
        rows.push(
            (0..dim)
                .map(|i| (base[(i + shift) % dim] + small.sample(rng)) as f32)
                .collect(),
        );
        let w = rng.random_range(0.2..1.0);
        push(
            &mut records,
            &src,
            format!("{tgt}_inpaint"),
            Label::NegativeInpaint,
            w,
            Some(tgt.clone()),
        );
        rows.push(
            base.iter()
                .map(|&v| {
                    if rng.random::<f64>() < 0.4 {
                        coord.sample(rng) as f32
                    } else {
                        v as f32
                    }
                })
                .collect(),
        );
    }
    SyntheticTask {
        manifest: Manifest::new(records, Split::Train, "synthetic").unwrap(),
        features: EmbeddingSet::from_rows(&rows, Role::Generated).unwrap(),
    }
}
