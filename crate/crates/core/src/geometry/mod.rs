//! Mask geometry: cameras, meshes, a z-buffer rasterizer, ray casting,
//! binary morphology and the visibility / epipolar label masks.

mod camera;
mod mask;
mod masks;
mod mesh;
mod morphology;
mod raster;
mod ray;

pub use camera::{Camera, DEFAULT_FOV_DEG, DEFAULT_IMAGE_SIZE};
pub use mask::BinaryMask;
pub use masks::{
    compose_label_masks, epipolar_mask, epipolar_points, grid_pose, mask_weight, misaligned_pose, refine_masks,
    visibility_masks, visible_faces, EpipolarConfig, RefineConfig, VisibilityMasks, AZIMUTH_STEPS, GRID_ELEVATION_DEG,
    GRID_RADIUS, WEIGHT_NEIGHBORHOOD_RADIUS,
};
pub use mesh::TriMesh;
pub use morphology::{close, dilate, erode, open, StructuringElement};
pub use raster::{rasterize, RenderBuffers};
pub use ray::{intersect_triangle, ray_crossings, Crossing};

/// World-space vector type used throughout the geometry code.
pub type Vec3 = nalgebra::Vector3<f64>;
