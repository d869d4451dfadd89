//! Annotation file formats and dataset splitting.
//!
//! Class names are the identity shared across formats. YOLO files carry
//! indices into the manifest's class list, VOC and Labelme carry names.

pub mod detections;
pub mod labelme;
pub mod split;
pub mod voc;
pub mod yolo;

pub use detections::{group_by_image, read_detections_jsonl, write_detections_jsonl, DetectionRecord};
pub use labelme::{read_labelme, write_labelme, LabelmeDoc};
pub use split::{split_dataset, split_sizes, Lcg64, SplitOptions};
pub use voc::{read_voc, write_voc, VocDocument, VocObject};
pub use yolo::{read_yolo, write_yolo};

use crate::error::{Error, Result};

pub(crate) fn class_id_for(classes: &[String], name: &str) -> Result<usize> {
    classes.iter().position(|c| c == name).ok_or_else(|| Error::UnknownClass(name.to_string()))
}

pub(crate) fn class_name_for(classes: &[String], id: usize) -> Result<&str> {
    classes
        .get(id)
        .map(String::as_str)
        .ok_or(Error::ClassOutOfRange { class_id: id, num_classes: classes.len() })
}
