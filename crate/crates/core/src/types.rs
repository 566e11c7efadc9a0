//! Domain types shared by every stage of the pipeline.

use std::fmt;

use crate::error::{Error, Result};

/// Tolerance on `| ‖f‖₂ − 1 |` for anything flagged as a unit embedding.
pub const UNIT_NORM_TOL: f64 = 1e-5;

/// Absolute camera placement on a sphere around the object.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraPose {
    azimuth_deg: f64,
    elevation_deg: f64,
    radius: f64,
}

impl CameraPose {
    pub fn new(azimuth_deg: f64, elevation_deg: f64, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Data(format!("camera radius must be > 0, got {radius}")));
        }
        if !azimuth_deg.is_finite() || !elevation_deg.is_finite() {
            return Err(Error::Data("camera angles must be finite".into()));
        }
        Ok(CameraPose {
            azimuth_deg: wrap_360(azimuth_deg),
            elevation_deg,
            radius,
        })
    }

    pub fn azimuth_deg(&self) -> f64 {
        self.azimuth_deg
    }

    pub fn elevation_deg(&self) -> f64 {
        self.elevation_deg
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Pose of `other` relative to `self`.
    pub fn relative_to(&self, other: &CameraPose) -> RelativePose {
        RelativePose::new(
            other.azimuth_deg - self.azimuth_deg,
            other.elevation_deg - self.elevation_deg,
            other.radius - self.radius,
        )
    }
}

impl fmt::Display for CameraPose {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "az={} el={} r={}", self.azimuth_deg, self.elevation_deg, self.radius)
    }
}

/// Signed camera motion between a source and a target view.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativePose {
    pub d_azimuth_deg: f64,
    pub d_elevation_deg: f64,
    pub d_radius: f64,
}

impl RelativePose {
    /// Builds a pose with the azimuth delta folded into (−180, 180].
    pub fn new(d_azimuth_deg: f64, d_elevation_deg: f64, d_radius: f64) -> Self {
        RelativePose {
            d_azimuth_deg: wrap_180(d_azimuth_deg),
            d_elevation_deg,
            d_radius,
        }
    }

    pub fn normalized(self) -> Self {
        RelativePose::new(self.d_azimuth_deg, self.d_elevation_deg, self.d_radius)
    }
}

/// Folds an angle into [0, 360).
pub fn wrap_360(deg: f64) -> f64 {
    let a = deg.rem_euclid(360.0);
    // rem_euclid can round up to exactly 360 for tiny negative inputs
    if a >= 360.0 {
        0.0
    } else {
        a
    }
}

/// Folds an angle into (−180, 180].
pub fn wrap_180(deg: f64) -> f64 {
    let a = wrap_360(deg);
    if a > 180.0 {
        a - 360.0
    } else {
        a
    }
}

/// One block output `F_b` with shape (H, W, C), stored row-major as (i, j, c).
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationBlock {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f32>,
}

impl ActivationBlock {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        if height == 0 || width == 0 || channels == 0 {
            return Err(Error::Shape(format!(
                "block dims must be >= 1, got {height}x{width}x{channels}"
            )));
        }
        let expected = height
            .checked_mul(width)
            .and_then(|v| v.checked_mul(channels))
            .ok_or_else(|| Error::Shape("block size overflows".into()))?;
        if data.len() != expected {
            return Err(Error::Shape(format!(
                "block {height}x{width}x{channels} needs {expected} values, got {}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!("non-finite activation at offset {pos}")));
        }
        Ok(ActivationBlock {
            height,
            width,
            channels,
            data,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.height, self.width, self.channels)
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    /// Channel vector at spatial position (i, j).
    pub fn pixel(&self, i: usize, j: usize) -> &[f32] {
        let start = (i * self.width + j) * self.channels;
        &self.data[start..start + self.channels]
    }

    pub fn pixels(&self) -> impl Iterator<Item = &[f32]> {
        self.data.chunks_exact(self.channels)
    }
}

/// Per-block activations for one triplet.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationStack {
    blocks: Vec<ActivationBlock>,
}

impl ActivationStack {
    pub fn new(blocks: Vec<ActivationBlock>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::Shape("activation stack needs at least one block".into()));
        }
        Ok(ActivationStack { blocks })
    }

    pub fn blocks(&self) -> &[ActivationBlock] {
        &self.blocks
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    /// Sum of channel counts, i.e. the pooled feature dimension.
    pub fn total_channels(&self) -> usize {
        self.blocks.iter().map(|b| b.channels).sum()
    }
}

/// A pooled raw feature or a unit-norm embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    values: Vec<f32>,
    unit_norm: bool,
}

impl FeatureVector {
    pub fn new(values: Vec<f32>) -> Result<Self> {
        check_finite(&values)?;
        if values.is_empty() {
            return Err(Error::Shape("feature vector must have dim >= 1".into()));
        }
        Ok(FeatureVector {
            values,
            unit_norm: false,
        })
    }

    /// Wraps values that are already unit length, checking the norm.
    pub fn unit(values: Vec<f32>) -> Result<Self> {
        let mut v = FeatureVector::new(values)?;
        let n = v.norm();
        if (n - 1.0).abs() > UNIT_NORM_TOL {
            return Err(Error::Contract(format!("expected unit norm, got {n}")));
        }
        v.unit_norm = true;
        Ok(v)
    }

    /// Scales to unit length. Fails for (near) zero vectors.
    pub fn normalized(values: &[f64]) -> Result<Self> {
        let n = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(n > 1e-12) || !n.is_finite() {
            return Err(Error::Degenerate(format!("cannot normalise vector of norm {n}")));
        }
        let out: Vec<f32> = values.iter().map(|v| (v / n) as f32).collect();
        FeatureVector::unit(out)
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f32> {
        self.values
    }

    pub fn is_unit(&self) -> bool {
        self.unit_norm
    }

    pub fn norm(&self) -> f64 {
        norm_f32(&self.values)
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.values.iter().map(|&v| f64::from(v)).collect()
    }
}

/// Which side of a comparison an embedding set plays.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Role {
    #[default]
    Generated,
    Anchor,
    Positive,
    Negative,
}

/// N embeddings of equal dimension, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    dim: usize,
    data: Vec<f32>,
    role: Role,
}

impl EmbeddingSet {
    pub fn new(dim: usize, data: Vec<f32>, role: Role) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Shape("embedding dim must be >= 1".into()));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::Shape(format!(
                "{} values do not form rows of dim {dim}",
                data.len()
            )));
        }
        check_finite(&data)?;
        Ok(EmbeddingSet { dim, data, role })
    }

    pub fn empty(dim: usize, role: Role) -> Result<Self> {
        EmbeddingSet::new(dim, Vec::new(), role)
    }

    pub fn from_rows<R: AsRef<[f32]>>(rows: &[R], role: Role) -> Result<Self> {
        let dim = rows
            .first()
            .map(|r| r.as_ref().len())
            .ok_or_else(|| Error::Shape("cannot infer dim from zero rows".into()))?;
        let mut data = Vec::with_capacity(dim * rows.len());
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(Error::Shape(format!("row {i} has dim {}, expected {dim}", r.len())));
            }
            data.extend_from_slice(r);
        }
        EmbeddingSet::new(dim, data, role)
    }

    pub fn from_vectors(vectors: &[FeatureVector], role: Role) -> Result<Self> {
        let rows: Vec<&[f32]> = vectors.iter().map(|v| v.values()).collect();
        EmbeddingSet::from_rows(&rows, role)
    }

    pub fn with_role(mut self, role: Role) -> Self {
        self.role = role;
        self
    }

    pub fn push_row(&mut self, row: &[f32]) -> Result<()> {
        if row.len() != self.dim {
            return Err(Error::Shape(format!(
                "row has dim {}, expected {}",
                row.len(),
                self.dim
            )));
        }
        check_finite(row)?;
        self.data.extend_from_slice(row);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f32]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn vector(&self, i: usize) -> Result<FeatureVector> {
        FeatureVector::new(self.row(i).to_vec())
    }

    /// Whether every row has unit norm within [`UNIT_NORM_TOL`].
    pub fn rows_are_unit(&self) -> bool {
        self.rows().all(|r| (norm_f32(r) - 1.0).abs() <= UNIT_NORM_TOL)
    }

    /// Keeps the rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            if i >= self.len() {
                return Err(Error::Shape(format!("row {i} out of range {}", self.len())));
            }
            data.extend_from_slice(self.row(i));
        }
        Ok(EmbeddingSet {
            dim: self.dim,
            data,
            role: self.role,
        })
    }
}

pub(crate) fn norm_f32(v: &[f32]) -> f64 {
    v.iter().map(|&x| f64::from(x) * f64::from(x)).sum::<f64>().sqrt()
}

fn check_finite(values: &[f32]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::Data(format!("non-finite value at index {i}"))),
        None => Ok(()),
    }
}
