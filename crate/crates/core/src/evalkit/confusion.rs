use serde::{Deserialize, Serialize};

use crate::geometry::{iou, Annotation, Detection};
use crate::scalar::Scalar;

/// `(C + 1) x (C + 1)` counts; rows are the true class, columns the predicted
/// class, and index `C` is background on both axes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub num_classes: usize,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(num_classes: usize) -> Self {
        ConfusionMatrix { num_classes, counts: vec![vec![0; num_classes + 1]; num_classes + 1] }
    }

    pub fn background(&self) -> usize {
        self.num_classes
    }

    pub fn diagonal(&self) -> u64 {
        (0..self.num_classes).map(|c| self.counts[c][c]).sum()
    }

    /// Each non-empty column scaled to sum to 1.
    pub fn normalized(&self) -> Vec<Vec<f64>> {
        let n = self.num_classes + 1;
        let mut out = vec![vec![0.0; n]; n];
        for col in 0..n {
            let sum: u64 = (0..n).map(|r| self.counts[r][col]).sum();
            if sum > 0 {
                for row in 0..n {
                    out[row][col] = self.counts[row][col] as f64 / sum as f64;
                }
            }
        }
        out
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    /// Accumulates one image.
    ///
    /// Predictions below `conf_thr` are ignored. Same-class matches are made
    /// first with the greedy matcher's rule, so the diagonal equals the
    /// per-class TP count. Leftover predictions may then claim a leftover
    /// ground truth of another class; anything still unmatched goes to the
    /// background row or column.
    pub fn add_image<T: Scalar>(&mut self, preds: &[Detection<T>], gts: &[Annotation<T>], conf_thr: T, iou_thr: T) {
        let bg = self.background();
        let gts: Vec<&Annotation<T>> = gts.iter().filter(|a| a.is_active()).collect();
        let mut preds: Vec<&Detection<T>> = preds.iter().filter(|d| d.confidence >= conf_thr).collect();
        preds.sort_by(|a, b| a.rank_cmp(b));

        let mut gt_used = vec![false; gts.len()];
        let mut pred_used = vec![false; preds.len()];
        for same_class in [true, false] {
            for (p, pred) in preds.iter().enumerate() {
                if pred_used[p] {
                    continue;
                }
                let mut best: Option<(usize, T)> = None;
                for (g, gt) in gts.iter().enumerate() {
                    if gt_used[g] || (same_class && gt.class_id != pred.class_id) {
                        continue;
                    }
                    let v = iou(&pred.bbox, &gt.bbox);
                    if v >= iou_thr && best.is_none_or(|(_, b)| v > b) {
                        best = Some((g, v));
                    }
                }
                if let Some((g, _)) = best {
                    gt_used[g] = true;
                    pred_used[p] = true;
                    self.counts[gts[g].class_id.min(bg)][pred.class_id.min(bg)] += 1;
                }
            }
        }
        for gt in gts.iter().zip(&gt_used).filter(|(_, used)| !**used).map(|(gt, _)| gt) {
            self.counts[gt.class_id.min(bg)][bg] += 1;
        }
        for (p, pred) in preds.iter().enumerate() {
            if !pred_used[p] {
                self.counts[bg][pred.class_id.min(bg)] += 1;
            }
        }
    }
}

pub fn confusion_matrix<T: Scalar>(
    images: &[(Vec<Detection<T>>, Vec<Annotation<T>>)],
    num_classes: usize,
    conf_thr: T,
    iou_thr: T,
) -> ConfusionMatrix {
    let mut m = ConfusionMatrix::new(num_classes);
    for (preds, gts) in images {
        m.add_image(preds, gts, conf_thr, iou_thr);
    }
    m
}
