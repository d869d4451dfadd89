use serde::{Deserialize, Serialize};

use super::matching::match_detections;
use crate::geometry::{cmp_total, Annotation, Detection};
use crate::scalar::Scalar;

/// One point of a precision/recall curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint<T = f64> {
    pub confidence: T,
    pub recall: T,
    pub precision: T,
}

/// Builds the PR curve by sweeping the confidence cutoff downward.
///
/// Predictions sharing a confidence value enter together, so each point is
/// the operating point of the cutoff `confidence >= c`.
pub fn pr_curve<T: Scalar>(outcomes: &[(T, bool)], num_gt: usize) -> Vec<PrPoint<T>> {
    let mut sorted = outcomes.to_vec();
    sorted.sort_by(|a, b| cmp_total(b.0, a.0));
    let gt = T::from_usize_lossy(num_gt.max(1));
    let (mut tp, mut seen) = (0usize, 0usize);
    let mut out = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let c = sorted[i].0;
        while i < sorted.len() && sorted[i].0 == c {
            tp += usize::from(sorted[i].1);
            seen += 1;
            i += 1;
        }
        let recall = if num_gt == 0 { T::zero() } else { T::from_usize_lossy(tp) / gt };
        out.push(PrPoint { confidence: c, recall, precision: T::from_usize_lossy(tp) / T::from_usize_lossy(seen) });
    }
    out
}

/// All-points interpolated area under the PR curve.
///
/// Precision is replaced by its running maximum from the right (the monotone
/// envelope) and integrated exactly over recall. No ground truth gives 0.
pub fn average_precision_from_outcomes<T: Scalar>(outcomes: &[(T, bool)], num_gt: usize) -> T {
    if num_gt == 0 {
        return T::zero();
    }
    let curve = pr_curve(outcomes, num_gt);
    let mut envelope = T::zero();
    let mut ap = T::zero();
    let mut next_recall: Option<T> = None;
    for p in curve.iter().rev() {
        if let Some(r_next) = next_recall {
            ap += (r_next - p.recall) * envelope;
        }
        envelope = envelope.max(p.precision);
        next_recall = Some(p.recall);
    }
    if let Some(r_first) = next_recall {
        ap += r_first * envelope;
    }
    ap
}

/// AP for one class over a set of images: `(predictions, ground truth)` pairs
/// already restricted to that class.
pub fn average_precision<T: Scalar>(per_image: &[(Vec<Detection<T>>, Vec<Annotation<T>>)], iou_thr: T) -> T {
    let mut outcomes = Vec::new();
    let mut num_gt = 0;
    for (preds, gts) in per_image {
        let boxes: Vec<_> = gts.iter().filter(|a| a.is_active()).map(|a| a.bbox).collect();
        num_gt += boxes.len();
        outcomes.extend(match_detections(preds, &boxes, iou_thr).outcomes());
    }
    average_precision_from_outcomes(&outcomes, num_gt)
}
