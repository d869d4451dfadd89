use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid box: {0}")]
    InvalidBox(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("window exceeds image: window {window}px > image {image}px")]
    WindowExceedsImage { window: u32, image: u32 },

    #[error("tile origin ({x}, {y}) with window {w}x{h} lies outside {img_w}x{img_h} image")]
    TileOutOfBounds { x: u32, y: u32, w: u32, h: u32, img_w: u32, img_h: u32 },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("class id {class_id} out of range for {num_classes} classes")]
    ClassOutOfRange { class_id: usize, num_classes: usize },

    #[error("unknown class name {0:?}")]
    UnknownClass(String),

    #[error("missing element <{0}>")]
    MissingElement(String),

    #[error("xml: {0}")]
    Xml(#[from] roxmltree::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("edit references unknown proposal #{0}")]
    UnknownProposal(usize),

    #[error("illegal status transition {from:?} -> {to:?}")]
    StatusTransition { from: crate::geometry::LabelStatus, to: crate::geometry::LabelStatus },

    #[error("class {0:?} has no source images")]
    EmptyClass(String),

    #[error("fewer distinct shapes ({distinct}) than requested anchors ({k})")]
    TooFewShapes { distinct: usize, k: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid manifest: {0}")]
    Manifest(String),

    #[error("image: {0}")]
    Image(#[from] image::ImageError),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("io: {0}")]
    BareIo(#[from] std::io::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
