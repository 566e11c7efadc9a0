use nalgebra::Matrix3;

use super::Vec3;
use crate::types::CameraPose;

pub const DEFAULT_IMAGE_SIZE: usize = 512;
pub const DEFAULT_FOV_DEG: f64 = 60.0;

/// Pinhole camera looking at the origin.
///
/// World up is +Z. Camera axes are x right, y down (image rows), z forward.
/// Pixel (i, j) covers [i, i+1) × [j, j+1), so its centre is at (i+0.5, j+0.5)
/// and the optical axis hits (W/2, H/2).
#[derive(Debug, Clone, PartialEq)]
pub struct Camera {
    position: Vec3,
    /// Rows are the right, down and forward axes in world coordinates.
    rotation: Matrix3<f64>,
    focal: f64,
    width: usize,
    height: usize,
    fov_deg: f64,
}

impl Camera {
    pub fn from_pose(pose: &CameraPose, image_size: usize, fov_deg: f64) -> Self {
        let (az, el) = (pose.azimuth_deg().to_radians(), pose.elevation_deg().to_radians());
        let position = pose.radius() * Vec3::new(el.cos() * az.cos(), el.cos() * az.sin(), el.sin());
        Self::look_at(position, image_size, image_size, fov_deg)
    }

    pub fn look_at(position: Vec3, width: usize, height: usize, fov_deg: f64) -> Self {
        let forward = (-position).normalize();
        let mut right = forward.cross(&Vec3::z());
        if right.norm() < 1e-9 {
            // straight above or below: pick +Y as up instead
            right = forward.cross(&Vec3::y());
        }
        let right = right.normalize();
        let down = forward.cross(&right);
        let rotation = Matrix3::from_rows(&[right.transpose(), down.transpose(), forward.transpose()]);
        let focal = (width as f64 / 2.0) / (fov_deg.to_radians() / 2.0).tan();
        Camera {
            position,
            rotation,
            focal,
            width,
            height,
            fov_deg,
        }
    }

    pub fn position(&self) -> Vec3 {
        self.position
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn focal(&self) -> f64 {
        self.focal
    }

    pub fn fov_deg(&self) -> f64 {
        self.fov_deg
    }

    pub fn forward(&self) -> Vec3 {
        self.rotation.row(2).transpose()
    }

    pub fn world_to_camera(&self, p: &Vec3) -> Vec3 {
        self.rotation * (p - self.position)
    }

    /// Continuous pixel coordinates and camera depth, or `None` behind the camera.
    pub fn project(&self, p: &Vec3) -> Option<(f64, f64, f64)> {
        let c = self.world_to_camera(p);
        if c.z <= 0.0 {
            return None;
        }
        Some((
            self.focal * c.x / c.z + self.width as f64 / 2.0,
            self.focal * c.y / c.z + self.height as f64 / 2.0,
            c.z,
        ))
    }

    /// Pixel containing `p`, if it lands inside the image in front of the camera.
    pub fn project_to_pixel(&self, p: &Vec3) -> Option<(usize, usize, f64)> {
        let (u, v, z) = self.project(p)?;
        if u < 0.0 || v < 0.0 {
            return None;
        }
        let (x, y) = (u.floor() as usize, v.floor() as usize);
        (x < self.width && y < self.height).then_some((x, y, z))
    }

    /// Unit world-space direction through the centre of pixel (x, y).
    pub fn pixel_ray(&self, x: usize, y: usize) -> Vec3 {
        let d = Vec3::new(
            (x as f64 + 0.5 - self.width as f64 / 2.0) / self.focal,
            (y as f64 + 0.5 - self.height as f64 / 2.0) / self.focal,
            1.0,
        );
        (self.rotation.transpose() * d).normalize()
    }
}
