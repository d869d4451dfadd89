//! Detection JSON-lines: one `{image_id, class_id, x1, y1, x2, y2, confidence}` object per line.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BBox, Detection};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub image_id: String,
    #[serde(flatten)]
    pub detection: Detection,
}

pub fn read_detections_jsonl(text: &str) -> Result<Vec<DetectionRecord>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let rec: DetectionRecord = serde_json::from_str(l).map_err(|e| Error::Parse { line: i + 1, msg: e.to_string() })?;
            let d = &rec.detection;
            BBox::new(d.bbox.x1, d.bbox.y1, d.bbox.x2, d.bbox.y2)
                .and_then(|b| Detection::new(d.class_id, b, d.confidence))
                .map_err(|e| Error::Parse { line: i + 1, msg: e.to_string() })?;
            Ok(rec)
        })
        .collect()
}

pub fn write_detections_jsonl(records: &[DetectionRecord]) -> Result<String> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    Ok(out)
}

/// Groups records by image id, preserving file order within an image.
pub fn group_by_image(records: Vec<DetectionRecord>) -> BTreeMap<String, Vec<Detection>> {
    let mut out: BTreeMap<String, Vec<Detection>> = BTreeMap::new();
    for r in records {
        out.entry(r.image_id).or_default().push(r.detection);
    }
    out
}
