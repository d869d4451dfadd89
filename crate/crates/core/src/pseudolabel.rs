//! Pseudo-labeling: confidence filtering, greedy NMS and merging review
//! decisions back into the label set.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{iou, Annotation, BBox, Detection, LabelSource, LabelStatus};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PseudoLabelConfig {
    /// Detections with confidence >= this are kept.
    pub confidence: f64,
    pub nms_iou: f64,
    pub class_agnostic: bool,
}

impl Default for PseudoLabelConfig {
    fn default() -> Self {
        PseudoLabelConfig { confidence: 0.25, nms_iou: 0.45, class_agnostic: false }
    }
}

impl PseudoLabelConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("confidence", self.confidence), ("nms_iou", self.nms_iou)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidArgument(format!("{name} threshold {v} must lie in (0, 1)")));
            }
        }
        Ok(())
    }
}

/// Greedy hard NMS.
///
/// Detections are ranked by [`Detection::rank_cmp`]; the top survivor is kept
/// and every remaining detection of the same class (any class when
/// `class_agnostic`) with IoU strictly above `iou_thr` is discarded. The output
/// is in keep order.
pub fn nms<T: Scalar>(dets: &[Detection<T>], iou_thr: T, class_agnostic: bool) -> Vec<Detection<T>> {
    let mut order: Vec<&Detection<T>> = dets.iter().collect();
    order.sort_by(|a, b| a.rank_cmp(b));

    let mut suppressed = vec![false; order.len()];
    let mut keep = Vec::new();
    for i in 0..order.len() {
        if suppressed[i] {
            continue;
        }
        let top = order[i];
        keep.push(*top);
        for j in i + 1..order.len() {
            if suppressed[j] {
                continue;
            }
            let cand = order[j];
            if (class_agnostic || cand.class_id == top.class_id) && iou(&top.bbox, &cand.bbox) > iou_thr {
                suppressed[j] = true;
            }
        }
    }
    keep
}

/// Thresholds raw detections and turns the NMS survivors into proposals.
pub fn propose_labels<T: Scalar>(raw: &[Detection<T>], cfg: &PseudoLabelConfig) -> Vec<Annotation<T>> {
    let conf = T::lit(cfg.confidence);
    let confident: Vec<Detection<T>> = raw.iter().filter(|d| d.confidence >= conf).copied().collect();
    nms(&confident, T::lit(cfg.nms_iou), cfg.class_agnostic)
        .into_iter()
        .map(|d| Annotation::proposed(d.class_id, d.bbox))
        .collect()
}

/// One reviewer decision. Proposals are addressed by their index in the
/// proposal list handed to [`merge_corrections`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum Edit<T = f64> {
    Accept { index: usize },
    Reject { index: usize },
    Correct { index: usize, class_id: Option<usize>, bbox: Option<BBox<T>> },
    Add { class_id: usize, bbox: BBox<T> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MergeOutcome<T = f64> {
    /// Final active label set: surviving proposals in original order, then additions.
    pub labels: Vec<Annotation<T>>,
    pub rejected: Vec<Annotation<T>>,
    /// Number of labels still in `proposed` state; non-zero means review is incomplete.
    pub pending: usize,
}

impl<T> MergeOutcome<T> {
    pub fn review_complete(&self) -> bool {
        self.pending == 0
    }
}

pub fn merge_corrections<T: Scalar>(proposed: &[Annotation<T>], edits: &[Edit<T>]) -> Result<MergeOutcome<T>> {
    let mut working: Vec<Annotation<T>> = proposed.to_vec();
    let mut added = Vec::new();
    let lookup = |i: usize, len: usize| if i < len { Ok(i) } else { Err(Error::UnknownProposal(i)) };

    for edit in edits {
        match edit {
            Edit::Accept { index } => {
                let i = lookup(*index, working.len())?;
                working[i].transition(LabelStatus::Accepted)?;
            }
            Edit::Reject { index } => {
                let i = lookup(*index, working.len())?;
                working[i].transition(LabelStatus::Rejected)?;
            }
            Edit::Correct { index, class_id, bbox } => {
                let i = lookup(*index, working.len())?;
                if let Some(b) = bbox {
                    b.validate()?;
                }
                let a = &mut working[i];
                a.transition(LabelStatus::Corrected)?;
                if let Some(c) = class_id {
                    a.class_id = *c;
                }
                if let Some(b) = bbox {
                    a.bbox = *b;
                }
            }
            Edit::Add { class_id, bbox } => {
                bbox.validate()?;
                added.push(Annotation { class_id: *class_id, bbox: *bbox, status: LabelStatus::Accepted, source: LabelSource::Human });
            }
        }
    }

    let (labels, rejected): (Vec<_>, Vec<_>) = working.into_iter().partition(|a| a.is_active());
    let mut labels = labels;
    labels.extend(added);
    let pending = labels.iter().filter(|a| a.status == LabelStatus::Proposed).count();
    Ok(MergeOutcome { labels, rejected, pending })
}
