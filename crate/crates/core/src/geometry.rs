//! Boxes, labels and detections, plus the primitive box operations.
//!
//! Boxes are corner-form in continuous pixel coordinates with the origin at
//! the top-left. Zero-area boxes are legal values but overlap nothing.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox<T = f64> {
    pub x1: T,
    pub y1: T,
    pub x2: T,
    pub y2: T,
}

impl<T: Scalar> BBox<T> {
    /// Checked constructor: corners must be finite and ordered.
    pub fn new(x1: T, y1: T, x2: T, y2: T) -> Result<Self> {
        let b = BBox { x1, y1, x2, y2 };
        b.validate()?;
        Ok(b)
    }

    /// Builds a box from two arbitrary corners, ordering them.
    pub fn from_corners(ax: T, ay: T, bx: T, by: T) -> Result<Self> {
        Self::new(ax.min(bx), ay.min(by), ax.max(bx), ay.max(by))
    }

    pub fn from_xywh(x: T, y: T, w: T, h: T) -> Result<Self> {
        Self::new(x, y, x + w, y + h)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.x1, self.y1, self.x2, self.y2].iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidBox(format!("non-finite corner in {self:?}")));
        }
        if self.x1 > self.x2 || self.y1 > self.y2 {
            return Err(Error::InvalidBox(format!("unordered corners in {self:?}")));
        }
        Ok(())
    }

    pub fn width(&self) -> T {
        self.x2 - self.x1
    }

    pub fn height(&self) -> T {
        self.y2 - self.y1
    }

    pub fn area(&self) -> T {
        self.width() * self.height()
    }

    pub fn is_degenerate(&self) -> bool {
        self.area() <= T::zero()
    }

    pub fn center(&self) -> (T, T) {
        let two = T::lit(2.0);
        ((self.x1 + self.x2) / two, (self.y1 + self.y2) / two)
    }

    pub fn translate(&self, dx: T, dy: T) -> Self {
        BBox { x1: self.x1 + dx, y1: self.y1 + dy, x2: self.x2 + dx, y2: self.y2 + dy }
    }

    /// Overlap rectangle, or `None` when the boxes do not share positive area.
    pub fn intersection(&self, other: &Self) -> Option<Self> {
        let x1 = self.x1.max(other.x1);
        let y1 = self.y1.max(other.y1);
        let x2 = self.x2.min(other.x2);
        let y2 = self.y2.min(other.y2);
        (x2 > x1 && y2 > y1).then_some(BBox { x1, y1, x2, y2 })
    }

    pub fn intersection_area(&self, other: &Self) -> T {
        let w = (self.x2.min(other.x2) - self.x1.max(other.x1)).max(T::zero());
        let h = (self.y2.min(other.y2) - self.y1.max(other.y1)).max(T::zero());
        w * h
    }

    /// Clips to `[0, width] x [0, height]`. The result may be degenerate.
    pub fn clip(&self, width: T, height: T) -> Self {
        let cx = |v: T| v.max(T::zero()).min(width);
        let cy = |v: T| v.max(T::zero()).min(height);
        BBox { x1: cx(self.x1), y1: cy(self.y1), x2: cx(self.x2), y2: cy(self.y2) }
    }

    pub fn contains(&self, other: &Self) -> bool {
        other.x1 >= self.x1 && other.y1 >= self.y1 && other.x2 <= self.x2 && other.y2 <= self.y2
    }

    /// Lexicographic order on `(x1, y1, x2, y2)`; used for deterministic tie-breaks.
    pub fn lex_cmp(&self, other: &Self) -> Ordering {
        cmp_total(self.x1, other.x1)
            .then(cmp_total(self.y1, other.y1))
            .then(cmp_total(self.x2, other.x2))
            .then(cmp_total(self.y2, other.y2))
    }

    pub fn cast<U: Scalar>(&self) -> BBox<U> {
        let c = |v: T| U::lit(v.to_f64_lossy());
        BBox { x1: c(self.x1), y1: c(self.y1), x2: c(self.x2), y2: c(self.y2) }
    }
}

pub(crate) fn cmp_total<T: Scalar>(a: T, b: T) -> Ordering {
    a.partial_cmp(&b).unwrap_or_else(|| a.is_nan().cmp(&b.is_nan()))
}

/// Intersection over union. Returns 0 when the union is empty.
pub fn iou<T: Scalar>(a: &BBox<T>, b: &BBox<T>) -> T {
    let inter = a.intersection_area(b);
    let union = a.area() + b.area() - inter;
    if union <= T::zero() {
        return T::zero();
    }
    (inter / union).min(T::one()).max(T::zero())
}

/// YOLO-style normalized center/size box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormBBox<T = f64> {
    pub cx: T,
    pub cy: T,
    pub w: T,
    pub h: T,
}

fn check_dims<T: Scalar>(width: T, height: T) -> Result<()> {
    if !(width.is_finite() && height.is_finite()) || width < T::one() || height < T::one() {
        return Err(Error::InvalidArgument(format!("image size {width}x{height} must be finite and >= 1")));
    }
    Ok(())
}

/// Converts a pixel box to normalized form after clipping it to the image.
pub fn to_normalized<T: Scalar>(b: &BBox<T>, width: T, height: T) -> Result<NormBBox<T>> {
    check_dims(width, height)?;
    b.validate()?;
    let c = b.clip(width, height);
    let two = T::lit(2.0);
    Ok(NormBBox {
        cx: (c.x1 + c.x2) / (two * width),
        cy: (c.y1 + c.y2) / (two * height),
        w: c.width() / width,
        h: c.height() / height,
    })
}

pub fn from_normalized<T: Scalar>(n: &NormBBox<T>, width: T, height: T) -> Result<BBox<T>> {
    check_dims(width, height)?;
    let finite = [n.cx, n.cy, n.w, n.h].iter().all(|v| v.is_finite());
    if !finite || n.w < T::zero() || n.h < T::zero() {
        return Err(Error::InvalidBox(format!("bad normalized box {n:?}")));
    }
    let two = T::lit(2.0);
    let (hw, hh) = (n.w * width / two, n.h * height / two);
    let (cx, cy) = (n.cx * width, n.cy * height);
    BBox::new(cx - hw, cy - hh, cx + hw, cy + hh)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SizeClass {
    S,
    M,
    L,
}

/// Area cutoffs in px². Upper bounds are inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SizeThresholds {
    pub small_max: f64,
    pub medium_max: f64,
}

impl Default for SizeThresholds {
    fn default() -> Self {
        SizeThresholds { small_max: 32.0 * 32.0, medium_max: 96.0 * 96.0 }
    }
}

impl SizeThresholds {
    pub fn new(small_max: f64, medium_max: f64) -> Result<Self> {
        if !(small_max.is_finite() && medium_max.is_finite()) || small_max >= medium_max {
            return Err(Error::InvalidArgument(format!(
                "size cutoffs must satisfy small < medium, got {small_max} / {medium_max}"
            )));
        }
        Ok(SizeThresholds { small_max, medium_max })
    }
}

pub fn size_class<T: Scalar>(b: &BBox<T>, cfg: &SizeThresholds) -> SizeClass {
    let area = b.area().to_f64_lossy();
    if area <= cfg.small_max {
        SizeClass::S
    } else if area <= cfg.medium_max {
        SizeClass::M
    } else {
        SizeClass::L
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelStatus {
    Proposed,
    Accepted,
    Corrected,
    Rejected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelSource {
    Human,
    Model,
}

/// A ground-truth or proposed label.
///
/// Serialized flat: `{class_id, x1, y1, x2, y2, status, source}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Annotation<T = f64> {
    pub class_id: usize,
    #[serde(flatten)]
    pub bbox: BBox<T>,
    pub status: LabelStatus,
    pub source: LabelSource,
}

impl<T: Scalar> Annotation<T> {
    /// Human-drawn label; starts accepted.
    pub fn human(class_id: usize, bbox: BBox<T>) -> Self {
        Annotation { class_id, bbox, status: LabelStatus::Accepted, source: LabelSource::Human }
    }

    /// Model proposal awaiting review.
    pub fn proposed(class_id: usize, bbox: BBox<T>) -> Self {
        Annotation { class_id, bbox, status: LabelStatus::Proposed, source: LabelSource::Model }
    }

    pub fn is_active(&self) -> bool {
        self.status != LabelStatus::Rejected
    }

    /// Only `proposed -> {accepted, corrected, rejected}` is legal.
    pub fn transition(&mut self, to: LabelStatus) -> Result<()> {
        match (self.status, to) {
            (LabelStatus::Proposed, LabelStatus::Accepted | LabelStatus::Corrected | LabelStatus::Rejected) => {
                self.status = to;
                Ok(())
            }
            (from, to) => Err(Error::StatusTransition { from, to }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection<T = f64> {
    pub class_id: usize,
    #[serde(flatten)]
    pub bbox: BBox<T>,
    pub confidence: T,
}

impl<T: Scalar> Detection<T> {
    pub fn new(class_id: usize, bbox: BBox<T>, confidence: T) -> Result<Self> {
        bbox.validate()?;
        if !(confidence >= T::zero() && confidence <= T::one()) {
            return Err(Error::InvalidArgument(format!("confidence {confidence} outside [0, 1]")));
        }
        Ok(Detection { class_id, bbox, confidence })
    }

    /// Ranking used by NMS and matching: confidence descending, then smaller
    /// class id, then lexicographic corners.
    pub fn rank_cmp(&self, other: &Self) -> Ordering {
        cmp_total(other.confidence, self.confidence)
            .then(self.class_id.cmp(&other.class_id))
            .then(self.bbox.lex_cmp(&other.bbox))
    }
}
