//! YOLO text labels: one `class cx cy w h` line per box, normalized to the image.

use std::fmt::Write;

use crate::error::{Error, Result};
use crate::geometry::{from_normalized, to_normalized, Annotation, NormBBox};

/// Parses a YOLO label file into pixel-space annotations (status accepted,
/// source human). Blank lines are ignored; boxes are clipped to the image.
pub fn read_yolo(text: &str, width: u32, height: u32, num_classes: usize) -> Result<Vec<Annotation>> {
    let (w, h) = (width as f64, height as f64);
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let perr = |msg: String| Error::Parse { line: line_no, msg };
        if fields.len() != 5 {
            return Err(perr(format!("expected 5 fields, found {}", fields.len())));
        }
        let class_id: usize = fields[0].parse().map_err(|_| perr(format!("bad class id {:?}", fields[0])))?;
        if class_id >= num_classes {
            return Err(Error::ClassOutOfRange { class_id, num_classes });
        }
        let mut v = [0.0f64; 4];
        for (slot, f) in v.iter_mut().zip(&fields[1..]) {
            *slot = f.parse().map_err(|_| perr(format!("bad number {f:?}")))?;
            if !slot.is_finite() {
                return Err(perr(format!("non-finite value {f:?}")));
            }
        }
        let n = NormBBox { cx: v[0], cy: v[1], w: v[2], h: v[3] };
        let bbox = from_normalized(&n, w, h).map_err(|e| perr(e.to_string()))?.clip(w, h);
        out.push(Annotation::human(class_id, bbox));
    }
    Ok(out)
}

/// Serializes active (non-rejected) annotations, six decimals per value.
pub fn write_yolo(anns: &[Annotation], width: u32, height: u32) -> Result<String> {
    let mut out = String::new();
    for a in anns.iter().filter(|a| a.is_active()) {
        let n = to_normalized(&a.bbox, width as f64, height as f64)?;
        writeln!(out, "{} {:.6} {:.6} {:.6} {:.6}", a.class_id, n.cx, n.cy, n.w, n.h).expect("write to string");
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BBox, LabelStatus};

    #[test]
    fn reads_pixel_box() {
        let a = read_yolo("0 0.5 0.5 0.25 0.25\n", 640, 640, 1).unwrap();
        assert_eq!(a[0].bbox, BBox::new(240.0, 240.0, 400.0, 400.0).unwrap());
        assert!(read_yolo("", 640, 640, 1).unwrap().is_empty());
        assert!(read_yolo("\n  \n", 640, 640, 1).unwrap().is_empty());
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = read_yolo("0 0.5 0.5 0.1 0.1\n0 0.5 oops 0.1 0.1\n", 100, 100, 1).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = read_yolo("0 0.5 0.5 0.1\n", 100, 100, 1).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = read_yolo("3 0.5 0.5 0.1 0.1\n", 100, 100, 2).unwrap_err();
        assert!(matches!(err, Error::ClassOutOfRange { class_id: 3, num_classes: 2 }));
    }

    #[test]
    fn write_format_and_round_trip() {
        assert_eq!(write_yolo(&[], 10, 10).unwrap(), "");
        let text = "0 0.500000 0.500000 0.250000 0.250000\n1 0.123457 0.654321 0.010000 0.020000\n";
        let anns = read_yolo(text, 640, 480, 2).unwrap();
        assert_eq!(write_yolo(&anns, 640, 480).unwrap(), text);
    }

    #[test]
    fn rejected_are_not_written() {
        let mut a = Annotation::proposed(0, BBox::new(0.0, 0.0, 10.0, 10.0).unwrap());
        a.status = LabelStatus::Rejected;
        assert_eq!(write_yolo(&[a], 20, 20).unwrap(), "");
    }
}
