//! Labelme JSON. Only rectangle shapes are read; everything else is counted
//! and skipped.

use serde::{Deserialize, Serialize};

use super::{class_id_for, class_name_for};
use crate::error::Result;
use crate::geometry::{Annotation, BBox};

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawShape {
    label: String,
    points: Vec<[f64; 2]>,
    #[serde(default = "polygon")]
    shape_type: String,
    #[serde(default)]
    group_id: Option<i64>,
    #[serde(default)]
    flags: serde_json::Map<String, serde_json::Value>,
}

fn polygon() -> String {
    "polygon".to_string()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct RawDoc {
    #[serde(default)]
    version: String,
    #[serde(default)]
    flags: serde_json::Map<String, serde_json::Value>,
    shapes: Vec<RawShape>,
    #[serde(default)]
    image_path: String,
    #[serde(default)]
    image_data: Option<String>,
    #[serde(default)]
    image_height: u32,
    #[serde(default)]
    image_width: u32,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabelmeDoc {
    pub image_path: String,
    pub width: u32,
    pub height: u32,
    pub rects: Vec<(String, BBox)>,
    /// Shapes that were not two-point rectangles.
    pub skipped: usize,
}

pub fn read_labelme(json: &str) -> Result<LabelmeDoc> {
    let raw: RawDoc = serde_json::from_str(json)?;
    let mut doc = LabelmeDoc { image_path: raw.image_path, width: raw.image_width, height: raw.image_height, ..Default::default() };
    for s in raw.shapes {
        match (s.shape_type.as_str(), s.points.as_slice()) {
            ("rectangle", [[ax, ay], [bx, by]]) => doc.rects.push((s.label, BBox::from_corners(*ax, *ay, *bx, *by)?)),
            _ => doc.skipped += 1,
        }
    }
    if doc.skipped > 0 {
        log::warn!("{}: skipped {} non-rectangle shape(s)", doc.image_path, doc.skipped);
    }
    Ok(doc)
}

pub fn write_labelme(doc: &LabelmeDoc) -> Result<String> {
    let raw = RawDoc {
        version: "5.2.1".into(),
        flags: Default::default(),
        shapes: doc
            .rects
            .iter()
            .map(|(label, b)| RawShape {
                label: label.clone(),
                points: vec![[b.x1, b.y1], [b.x2, b.y2]],
                shape_type: "rectangle".into(),
                group_id: None,
                flags: Default::default(),
            })
            .collect(),
        image_path: doc.image_path.clone(),
        image_data: None,
        image_height: doc.height,
        image_width: doc.width,
    };
    Ok(serde_json::to_string_pretty(&raw)?)
}

impl LabelmeDoc {
    pub fn from_annotations(anns: &[Annotation], classes: &[String], image_path: &str, width: u32, height: u32) -> Result<Self> {
        let rects = anns
            .iter()
            .filter(|a| a.is_active())
            .map(|a| Ok((class_name_for(classes, a.class_id)?.to_string(), a.bbox)))
            .collect::<Result<_>>()?;
        Ok(LabelmeDoc { image_path: image_path.to_string(), width, height, rects, skipped: 0 })
    }

    pub fn to_annotations(&self, classes: &[String]) -> Result<Vec<Annotation>> {
        self.rects.iter().map(|(l, b)| Ok(Annotation::human(class_id_for(classes, l)?, *b))).collect()
    }
}
