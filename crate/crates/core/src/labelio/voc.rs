//! Pascal VOC XML. Corners in the file are 1-based inclusive integers; in
//! memory they are 0-based continuous, so `(xmin, ymin, xmax, ymax)` maps to
//! `(xmin - 1, ymin - 1, xmax, ymax)`.

use std::fmt::Write;

use roxmltree::{Document, Node};

use super::{class_id_for, class_name_for};
use crate::error::{Error, Result};
use crate::geometry::{Annotation, BBox};

#[derive(Debug, Clone, PartialEq)]
pub struct VocObject {
    pub name: String,
    pub bbox: BBox,
    pub difficult: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VocDocument {
    pub filename: String,
    pub width: Option<u32>,
    pub height: Option<u32>,
    pub depth: Option<u32>,
    pub objects: Vec<VocObject>,
}

fn child<'a, 'i>(node: Node<'a, 'i>, name: &str) -> Option<Node<'a, 'i>> {
    node.children().find(|c| c.has_tag_name(name))
}

fn text_of(node: Node<'_, '_>, name: &str, path: &str) -> Result<String> {
    child(node, name)
        .and_then(|c| c.text())
        .map(|t| t.trim().to_string())
        .ok_or_else(|| Error::MissingElement(format!("{path}/{name}")))
}

fn number_of(node: Node<'_, '_>, name: &str, path: &str) -> Result<f64> {
    let t = text_of(node, name, path)?;
    t.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::InvalidArgument(format!("{path}/{name}: not a number: {t:?}")))
}

fn optional_u32(node: Node<'_, '_>, name: &str) -> Option<u32> {
    child(node, name).and_then(|c| c.text()).and_then(|t| t.trim().parse::<f64>().ok()).map(|v| v as u32)
}

pub fn read_voc(xml: &str) -> Result<VocDocument> {
    let doc = Document::parse(xml)?;
    let root = doc.root_element();
    if !root.has_tag_name("annotation") {
        return Err(Error::MissingElement("annotation".into()));
    }
    let size = child(root, "size");
    let mut out = VocDocument {
        filename: child(root, "filename").and_then(|n| n.text()).unwrap_or("").trim().to_string(),
        width: size.and_then(|s| optional_u32(s, "width")),
        height: size.and_then(|s| optional_u32(s, "height")),
        depth: size.and_then(|s| optional_u32(s, "depth")),
        objects: Vec::new(),
    };
    for obj in root.children().filter(|c| c.has_tag_name("object")) {
        let name = text_of(obj, "name", "annotation/object")?;
        let bb = child(obj, "bndbox").ok_or_else(|| Error::MissingElement("annotation/object/bndbox".into()))?;
        let p = "annotation/object/bndbox";
        let (xmin, ymin) = (number_of(bb, "xmin", p)?, number_of(bb, "ymin", p)?);
        let (xmax, ymax) = (number_of(bb, "xmax", p)?, number_of(bb, "ymax", p)?);
        let bbox = BBox::new(xmin - 1.0, ymin - 1.0, xmax, ymax)?;
        let difficult = child(obj, "difficult").and_then(|d| d.text()).is_some_and(|t| t.trim() == "1");
        out.objects.push(VocObject { name, bbox, difficult });
    }
    Ok(out)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

pub fn write_voc(doc: &VocDocument) -> String {
    let mut s = String::new();
    s.push_str("<annotation>\n");
    writeln!(s, "\t<filename>{}</filename>", escape(&doc.filename)).unwrap();
    if let (Some(w), Some(h)) = (doc.width, doc.height) {
        writeln!(s, "\t<size>\n\t\t<width>{w}</width>\n\t\t<height>{h}</height>\n\t\t<depth>{}</depth>\n\t</size>", doc.depth.unwrap_or(3)).unwrap();
    }
    for o in &doc.objects {
        let b = &o.bbox;
        writeln!(
            s,
            "\t<object>\n\t\t<name>{}</name>\n\t\t<pose>Unspecified</pose>\n\t\t<truncated>0</truncated>\n\t\t<difficult>{}</difficult>\n\t\t<bndbox>\n\t\t\t<xmin>{}</xmin>\n\t\t\t<ymin>{}</ymin>\n\t\t\t<xmax>{}</xmax>\n\t\t\t<ymax>{}</ymax>\n\t\t</bndbox>\n\t</object>",
            escape(&o.name),
            u8::from(o.difficult),
            b.x1.round() as i64 + 1,
            b.y1.round() as i64 + 1,
            b.x2.round() as i64,
            b.y2.round() as i64,
        )
        .unwrap();
    }
    s.push_str("</annotation>\n");
    s
}

impl VocDocument {
    pub fn from_annotations(anns: &[Annotation], classes: &[String], filename: &str, width: u32, height: u32) -> Result<Self> {
        let objects = anns
            .iter()
            .filter(|a| a.is_active())
            .map(|a| Ok(VocObject { name: class_name_for(classes, a.class_id)?.to_string(), bbox: a.bbox, difficult: false }))
            .collect::<Result<_>>()?;
        Ok(VocDocument { filename: filename.to_string(), width: Some(width), height: Some(height), depth: None, objects })
    }

    pub fn to_annotations(&self, classes: &[String]) -> Result<Vec<Annotation>> {
        self.objects.iter().map(|o| Ok(Annotation::human(class_id_for(classes, &o.name)?, o.bbox))).collect()
    }
}
