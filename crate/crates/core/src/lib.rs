//! Evaluation toolkit for novel-view synthesis built on pooled diffusion
//! features: file formats, feature pooling, a trainable projection head,
//! distributional metrics, mask geometry and image corruptions.

pub mod corruptions;
pub mod error;
pub mod format;
pub mod geometry;
pub mod head;
pub mod imaging;
pub mod manifest;
pub mod metrics;
pub mod pooling;
pub mod train;
pub mod types;

pub use error::{Error, Result};
pub use geometry::{BinaryMask, Camera, TriMesh};
pub use head::MlpHead;
pub use imaging::{ImageRGB, ImageRGBA};
pub use manifest::{load_manifest, parse_manifest, Label, Manifest, Split, TripletRecord};
pub use pooling::{build_raw_feature, PoolingConfig};
pub use train::{train_head, TrainConfig, TrainOutcome};
pub use types::{
    ActivationBlock, ActivationStack, CameraPose, EmbeddingSet, FeatureVector, RelativePose, Role, UNIT_NORM_TOL,
};
