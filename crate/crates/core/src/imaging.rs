//! Float RGB images in [0,1] and PNG I/O.

use std::path::Path;

use crate::error::{Error, Result};

/// Interleaved RGB, row-major, every value clamped to [0,1].
#[derive(Debug, Clone, PartialEq)]
pub struct ImageRGB {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl ImageRGB {
    /// Builds an image, clamping every value into [0,1]. NaN is rejected.
    pub fn new(width: usize, height: usize, mut data: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Shape("image dimensions must be nonzero".into()));
        }
        if data.len() != width * height * 3 {
            return Err(Error::Shape(format!(
                "{}x{} RGB image needs {} values, got {}",
                width,
                height,
                width * height * 3,
                data.len()
            )));
        }
        for v in &mut data {
            if v.is_nan() {
                return Err(Error::Data("NaN pixel value".into()));
            }
            *v = v.clamp(0.0, 1.0);
        }
        Ok(ImageRGB { width, height, data })
    }

    pub fn filled(width: usize, height: usize, rgb: [f32; 3]) -> Result<Self> {
        Self::new(width, height, rgb.repeat(width * height))
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> [f32; 3]) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn pixel(&self, x: usize, y: usize) -> [f32; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    /// Single channel as a row-major plane.
    pub fn channel(&self, c: usize) -> Vec<f32> {
        self.data.iter().skip(c).step_by(3).copied().collect()
    }

    pub fn same_shape(&self, other: &ImageRGB) -> Result<()> {
        if self.width == other.width && self.height == other.height {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "{}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )))
        }
    }

    pub fn load_png(path: impl AsRef<Path>) -> Result<Self> {
        let img = image::open(path.as_ref())?.into_rgb32f();
        let (w, h) = img.dimensions();
        Self::new(w as usize, h as usize, img.into_raw())
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let bytes: Vec<u8> = self.data.iter().map(|&v| to_u8(v)).collect();
        image::save_buffer(
            path.as_ref(),
            &bytes,
            self.width as u32,
            self.height as u32,
            image::ColorType::Rgb8,
        )?;
        Ok(())
    }
}

/// Interleaved RGBA in [0,1], straight (non-premultiplied) alpha.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageRGBA {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl ImageRGBA {
    pub fn new(width: usize, height: usize, mut data: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Shape("image dimensions must be nonzero".into()));
        }
        if data.len() != width * height * 4 {
            return Err(Error::Shape(format!(
                "{}x{} RGBA image needs {} values, got {}",
                width,
                height,
                width * height * 4,
                data.len()
            )));
        }
        for v in &mut data {
            if v.is_nan() {
                return Err(Error::Data("NaN pixel value".into()));
            }
            *v = v.clamp(0.0, 1.0);
        }
        Ok(ImageRGBA { width, height, data })
    }

    pub fn from_rgb(img: &ImageRGB) -> Self {
        let data = img.data.chunks(3).flat_map(|p| [p[0], p[1], p[2], 1.0]).collect();
        ImageRGBA {
            width: img.width,
            height: img.height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn pixel(&self, x: usize, y: usize) -> [f32; 4] {
        let i = (y * self.width + x) * 4;
        [self.data[i], self.data[i + 1], self.data[i + 2], self.data[i + 3]]
    }

    /// Loads any PNG; images without alpha come back opaque.
    pub fn load_png(path: impl AsRef<Path>) -> Result<Self> {
        let img = image::open(path.as_ref())?.into_rgba32f();
        let (w, h) = img.dimensions();
        Self::new(w as usize, h as usize, img.into_raw())
    }
}

fn to_u8(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}
