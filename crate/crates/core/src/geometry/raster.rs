use rayon::prelude::*;

use super::camera::Camera;
use super::mask::BinaryMask;
use super::mesh::TriMesh;

/// Faces with any vertex closer than this to the camera plane are skipped.
const NEAR: f64 = 1e-6;
const TILE_ROWS: usize = 8;

/// Hard z-buffer output: camera-space depth (+inf for background) and the
/// owning face id (−1 for background).
#[derive(Debug, Clone, PartialEq)]
pub struct RenderBuffers {
    width: usize,
    height: usize,
    depth: Vec<f64>,
    face_id: Vec<i32>,
}

impl RenderBuffers {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn depth(&self) -> &[f64] {
        &self.depth
    }

    pub fn face_ids(&self) -> &[i32] {
        &self.face_id
    }

    pub fn depth_at(&self, x: usize, y: usize) -> f64 {
        self.depth[y * self.width + x]
    }

    pub fn face_at(&self, x: usize, y: usize) -> Option<usize> {
        let f = self.face_id[y * self.width + x];
        (f >= 0).then_some(f as usize)
    }

    pub fn silhouette(&self) -> BinaryMask {
        BinaryMask::from_bits(self.width, self.height, self.face_id.iter().map(|&f| f >= 0).collect())
            .expect("buffer sizes agree")
    }
}

struct ScreenTri {
    face: i32,
    xs: [f64; 3],
    ys: [f64; 3],
    inv_z: [f64; 3],
    area: f64,
    x0: usize,
    x1: usize,
    y0: usize,
    y1: usize,
}

fn edge(ax: f64, ay: f64, bx: f64, by: f64, px: f64, py: f64) -> f64 {
    (bx - ax) * (py - ay) - (by - ay) * (px - ax)
}

/// Range of pixel indices whose centres fall in [lo, hi], clipped to [0, n).
fn pixel_span(lo: f64, hi: f64, n: usize) -> Option<(usize, usize)> {
    let a = (lo - 0.5).ceil().max(0.0);
    let b = (hi - 0.5).floor().min(n as f64 - 1.0);
    (a <= b).then_some((a as usize, b as usize))
}

fn setup(mesh: &TriMesh, cam: &Camera) -> Vec<ScreenTri> {
    let eye = cam.position();
    let (w, h) = (cam.width() as f64, cam.height() as f64);
    (0..mesh.face_count())
        .filter_map(|f| {
            let verts = mesh.face_vertices(f);
            if mesh.face_normal(f).dot(&(eye - verts[0])) <= 0.0 {
                return None;
            }
            let c = verts.map(|v| cam.world_to_camera(&v));
            if c.iter().any(|p| p.z <= NEAR) {
                return None;
            }
            let xs = c.map(|p| cam.focal() * p.x / p.z + w / 2.0);
            let ys = c.map(|p| cam.focal() * p.y / p.z + h / 2.0);
            let area = edge(xs[0], ys[0], xs[1], ys[1], xs[2], ys[2]);
            if area.abs() < 1e-12 {
                return None;
            }
            let (x0, x1) = pixel_span(
                xs.iter().copied().fold(f64::MAX, f64::min),
                xs.iter().copied().fold(f64::MIN, f64::max),
                cam.width(),
            )?;
            let (y0, y1) = pixel_span(
                ys.iter().copied().fold(f64::MAX, f64::min),
                ys.iter().copied().fold(f64::MIN, f64::max),
                cam.height(),
            )?;
            Some(ScreenTri {
                face: f as i32,
                xs,
                ys,
                inv_z: c.map(|p| 1.0 / p.z),
                area,
                x0,
                x1,
                y0,
                y1,
            })
        })
        .collect()
}

/// Rasterizes front-facing triangles with an inclusive edge test and
/// perspective-correct depth. On equal depth the lower face index wins.
pub fn rasterize(mesh: &TriMesh, cam: &Camera) -> RenderBuffers {
    let (w, h) = (cam.width(), cam.height());
    let tris = setup(mesh, cam);
    let mut depth = vec![f64::INFINITY; w * h];
    let mut face_id = vec![-1i32; w * h];
    depth
        .par_chunks_mut(TILE_ROWS * w)
        .zip(face_id.par_chunks_mut(TILE_ROWS * w))
        .enumerate()
        .for_each(|(tile, (depth, ids))| {
            let ty0 = tile * TILE_ROWS;
            let ty1 = ty0 + depth.len() / w - 1;
            for t in tris.iter().filter(|t| t.y1 >= ty0 && t.y0 <= ty1) {
                for y in t.y0.max(ty0)..=t.y1.min(ty1) {
                    let py = y as f64 + 0.5;
                    for x in t.x0..=t.x1 {
                        let px = x as f64 + 0.5;
                        let b0 = edge(t.xs[1], t.ys[1], t.xs[2], t.ys[2], px, py) / t.area;
                        let b1 = edge(t.xs[2], t.ys[2], t.xs[0], t.ys[0], px, py) / t.area;
                        let b2 = edge(t.xs[0], t.ys[0], t.xs[1], t.ys[1], px, py) / t.area;
                        if b0 < 0.0 || b1 < 0.0 || b2 < 0.0 {
                            continue;
                        }
                        let z = 1.0 / (b0 * t.inv_z[0] + b1 * t.inv_z[1] + b2 * t.inv_z[2]);
                        let i = (y - ty0) * w + x;
                        if z < depth[i] {
                            depth[i] = z;
                            ids[i] = t.face;
                        }
                    }
                }
            }
        });
    RenderBuffers {
        width: w,
        height: h,
        depth,
        face_id,
    }
}
