//! Dataset engineering and evaluation toolkit for UAV object detection.
//!
//! The crate covers the data side of a detection pipeline over very large
//! aerial captures:
//!
//! 1. [`tiler`] cuts full-resolution orthophotos into overlapping windows and
//!    stitches tile-level detections back into image space.
//! 2. [`pseudolabel`] turns model detections into proposed labels and merges
//!    human review decisions back into the label set.
//! 3. [`labelio`] reads and writes YOLO text, Pascal VOC XML and Labelme JSON,
//!    and performs seeded train/val/test splits.
//! 4. [`augment`] oversamples minority classes with box-aware transforms.
//! 5. [`anchors`] clusters ground-truth shapes into detector anchors.
//! 6. [`evalkit`] computes P/R/F1, AP, mAP and confusion matrices.
//! 7. [`lsk`] is a numerical reference of the large selective kernel
//!    attention block, with a direct convolution oracle and an im2col path.
//!
//! Geometry, evaluation, anchor clustering and the tensor code are generic
//! over the floating-point type through [`Scalar`]; the aliases at the crate
//! root name the concrete instantiations used by the file formats and CLI.

pub mod anchors;
pub mod augment;
pub mod error;
pub mod evalkit;
pub mod geometry;
pub mod labelio;
pub mod lsk;
pub mod manifest;
pub mod pseudolabel;
pub mod raster;
pub mod scalar;
pub mod tiler;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Tensor4 = lsk::Tensor4<f32>;
pub type Tensor4F64 = lsk::Tensor4<f64>;
pub type ConvSpec = lsk::ConvSpec<f32>;
pub type LskParams = lsk::LskParams<f32>;
pub type AnchorSet = anchors::AnchorSet<f64>;

/// Pixel-space box in double precision; the type every file format uses.
pub type BBox = geometry::BBox<f64>;
pub type BBoxF32 = geometry::BBox<f32>;
pub type NormBBox = geometry::NormBBox<f64>;
pub type Annotation = geometry::Annotation<f64>;
pub type Detection = geometry::Detection<f64>;







