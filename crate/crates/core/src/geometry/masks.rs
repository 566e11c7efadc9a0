use std::collections::BTreeSet;

use rayon::prelude::*;

use super::camera::Camera;
use super::mask::BinaryMask;
use super::mesh::TriMesh;
use super::morphology::{close, dilate, open, StructuringElement};
use super::raster::{rasterize, RenderBuffers};
use super::ray::ray_crossings;
use super::Vec3;
use crate::error::{Error, Result};
use crate::types::CameraPose;

pub const AZIMUTH_STEPS: usize = 16;
pub const GRID_ELEVATION_DEG: f64 = 30.0;
pub const GRID_RADIUS: f64 = 2.7;
/// Neighbourhood around the silhouette that still counts towards a mask's weight.
pub const WEIGHT_NEIGHBORHOOD_RADIUS: usize = 20;

fn faces_in(buffers: &RenderBuffers, face_count: usize, min_pixels: usize) -> BTreeSet<usize> {
    let mut hits = vec![0usize; face_count];
    for &f in buffers.face_ids() {
        if f >= 0 {
            hits[f as usize] += 1;
        }
    }
    hits.iter()
        .enumerate()
        .filter(|(_, &n)| n >= min_pixels.max(1))
        .map(|(f, _)| f)
        .collect()
}

/// Faces owning at least `min_pixels` pixels of the z-buffer from `cam`.
pub fn visible_faces(mesh: &TriMesh, cam: &Camera, min_pixels: usize) -> BTreeSet<usize> {
    faces_in(&rasterize(mesh, cam), mesh.face_count(), min_pixels)
}

/// Target-view masks before refinement. `visibility` and `invisibility`
/// partition `silhouette`.
#[derive(Debug, Clone, PartialEq)]
pub struct VisibilityMasks {
    pub visibility: BinaryMask,
    pub invisibility: BinaryMask,
    pub silhouette: BinaryMask,
}

pub fn visibility_masks(mesh: &TriMesh, src: &Camera, tgt: &Camera, min_pixels: usize) -> VisibilityMasks {
    let seen = visible_faces(mesh, src, min_pixels);
    let target = rasterize(mesh, tgt);
    let silhouette = target.silhouette();
    let visibility = BinaryMask::from_fn(tgt.width(), tgt.height(), |x, y| {
        target.face_at(x, y).is_some_and(|f| seen.contains(&f))
    });
    let invisibility = silhouette.and_not(&visibility).expect("same target size");
    VisibilityMasks {
        visibility,
        invisibility,
        silhouette,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RefineConfig {
    pub close_radius: usize,
    pub open_radius: usize,
}

impl Default for RefineConfig {
    fn default() -> Self {
        RefineConfig {
            close_radius: 4,
            open_radius: 10,
        }
    }
}

/// Closes both masks, removes the overlap from the invisibility mask
/// (visibility keeps it), then opens both. Outputs are disjoint.
pub fn refine_masks(vis: &BinaryMask, invis: &BinaryMask, cfg: &RefineConfig) -> Result<(BinaryMask, BinaryMask)> {
    vis.check_same_size(invis)?;
    let c = StructuringElement::disc(cfg.close_radius);
    let o = StructuringElement::disc(cfg.open_radius);
    let vis_c = close(vis, &c);
    let invis_c = close(invis, &c).and_not(&vis_c)?;
    Ok((open(&vis_c, &o), open(&invis_c, &o)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpipolarConfig {
    /// Samples per occluded segment.
    pub samples: usize,
    /// Segment length behind the first hit; `None` means twice the bounding radius.
    pub segment_length: Option<f64>,
    /// Relative slack on the target depth test.
    pub depth_epsilon: f64,
    /// Drop samples hidden behind the surface in the target view.
    pub drop_target_occluded: bool,
    pub close_radius: usize,
    pub silhouette_radius: usize,
}

impl Default for EpipolarConfig {
    fn default() -> Self {
        EpipolarConfig {
            samples: 64,
            segment_length: None,
            depth_epsilon: 1e-4,
            drop_target_occluded: true,
            close_radius: 3,
            silhouette_radius: 20,
        }
    }
}

/// World-space samples along each source ray behind its first visible hit,
/// minus those lying inside the object.
///
/// A sample is inside when the next surface crossing further along the ray
/// is an exit. Open surfaces therefore never swallow samples.
pub fn epipolar_points(mesh: &TriMesh, src: &Camera, cfg: &EpipolarConfig) -> Vec<Vec3> {
    if mesh.is_empty() || cfg.samples == 0 {
        return Vec::new();
    }
    let length = cfg.segment_length.unwrap_or(2.0 * mesh.bounding_radius());
    let eye = src.position();
    let buffers = rasterize(mesh, src);
    (0..src.height())
        .into_par_iter()
        .map(|y| {
            let mut out = Vec::new();
            for x in 0..src.width() {
                if buffers.face_at(x, y).is_none() {
                    continue;
                }
                let dir = src.pixel_ray(x, y);
                let hits = ray_crossings(mesh, &eye, &dir);
                let Some(first) = hits.iter().position(|h| h.entering) else {
                    continue;
                };
                let t0 = hits[first].t;
                let mut next = first + 1;
                for k in 1..=cfg.samples {
                    let t = t0 + length * k as f64 / cfg.samples as f64;
                    while next < hits.len() && hits[next].t <= t {
                        next += 1;
                    }
                    let inside = hits.get(next).is_some_and(|h| !h.entering);
                    if !inside {
                        out.push(eye + dir * t);
                    }
                }
            }
            out
        })
        .collect::<Vec<_>>()
        .concat()
}

/// Target pixels reached by unoccluded epipolar samples, closed and clipped
/// to the dilated target silhouette.
pub fn epipolar_mask(mesh: &TriMesh, src: &Camera, tgt: &Camera, cfg: &EpipolarConfig) -> BinaryMask {
    let mut mask = BinaryMask::new(tgt.width(), tgt.height());
    if mesh.is_empty() {
        return mask;
    }
    let target = rasterize(mesh, tgt);
    for p in epipolar_points(mesh, src, cfg) {
        let Some((x, y, z)) = tgt.project_to_pixel(&p) else {
            continue;
        };
        let d = target.depth_at(x, y);
        if !cfg.drop_target_occluded || !d.is_finite() || z <= d * (1.0 + cfg.depth_epsilon) {
            mask.set(x, y, true);
        }
    }
    let closed = close(&mask, &StructuringElement::disc(cfg.close_radius));
    let region = dilate(&target.silhouette(), &StructuringElement::disc(cfg.silhouette_radius));
    closed.and(&region).expect("same target size")
}

/// Positive (plausible) = invisibility ∪ epipolar; negative = visibility ∪ epipolar.
pub fn compose_label_masks(vis: &BinaryMask, invis: &BinaryMask, epi: &BinaryMask) -> Result<(BinaryMask, BinaryMask)> {
    Ok((invis.or(epi)?, vis.or(epi)?))
}

/// Mask area near the object relative to the silhouette area, clipped to [0,1].
/// Pixels within [`WEIGHT_NEIGHBORHOOD_RADIUS`] of the silhouette count.
pub fn mask_weight(mask: &BinaryMask, silhouette: &BinaryMask) -> Result<f64> {
    mask.check_same_size(silhouette)?;
    let area = silhouette.count();
    if area == 0 {
        return Err(Error::Degenerate("silhouette is empty".into()));
    }
    let region = dilate(silhouette, &StructuringElement::disc(WEIGHT_NEIGHBORHOOD_RADIUS));
    let covered = mask.and(&region)?.count();
    Ok((covered as f64 / area as f64).clamp(0.0, 1.0))
}

/// Pose of grid view `index` on the 16-step azimuth ring.
pub fn grid_pose(index: usize) -> Result<CameraPose> {
    if index >= AZIMUTH_STEPS {
        return Err(Error::Contract(format!(
            "grid index must be < {AZIMUTH_STEPS}, got {index}"
        )));
    }
    CameraPose::new(
        360.0 / AZIMUTH_STEPS as f64 * index as f64,
        GRID_ELEVATION_DEG,
        GRID_RADIUS,
    )
}

/// The grid view `offset` steps around from the true target.
pub fn misaligned_pose(true_index: usize, offset: usize) -> Result<CameraPose> {
    if offset.is_multiple_of(AZIMUTH_STEPS) {
        return Err(Error::Contract("misalignment offset must be nonzero mod 16".into()));
    }
    if true_index >= AZIMUTH_STEPS {
        return Err(Error::Contract(format!(
            "grid index must be < {AZIMUTH_STEPS}, got {true_index}"
        )));
    }
    grid_pose((true_index + offset) % AZIMUTH_STEPS)
}
