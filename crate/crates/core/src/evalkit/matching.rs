use serde::{Deserialize, Serialize};

use crate::geometry::{iou, BBox, Detection};
use crate::scalar::Scalar;

/// Greedy TP/FP assignment for one image and one class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult<T = f64> {
    /// Prediction indices in processing order (descending confidence).
    pub order: Vec<usize>,
    /// Per prediction, indexed like the input: `Some(gt index)` for a TP.
    pub matched_gt: Vec<Option<usize>>,
    /// Per ground truth: whether some prediction claimed it.
    pub gt_matched: Vec<bool>,
    pub confidences: Vec<T>,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl<T: Scalar> MatchResult<T> {
    pub fn is_tp(&self, pred: usize) -> bool {
        self.matched_gt[pred].is_some()
    }

    /// `(confidence, is_tp)` per prediction, in input order.
    pub fn outcomes(&self) -> impl Iterator<Item = (T, bool)> + '_ {
        self.confidences.iter().zip(&self.matched_gt).map(|(&c, m)| (c, m.is_some()))
    }
}

/// Predictions are visited in rank order; each claims the still-unmatched
/// ground truth with the highest IoU if that IoU reaches `iou_thr`, and is a
/// false positive otherwise. A second hit on an already claimed box is a FP.
pub fn match_detections<T: Scalar>(preds: &[Detection<T>], gts: &[BBox<T>], iou_thr: T) -> MatchResult<T> {
    let mut order: Vec<usize> = (0..preds.len()).collect();
    order.sort_by(|&a, &b| preds[a].rank_cmp(&preds[b]));

    let mut gt_matched = vec![false; gts.len()];
    let mut matched_gt = vec![None; preds.len()];
    for &p in &order {
        let mut best: Option<(usize, T)> = None;
        for (g, gt) in gts.iter().enumerate() {
            if gt_matched[g] {
                continue;
            }
            let v = iou(&preds[p].bbox, gt);
            if v >= iou_thr && best.is_none_or(|(_, b)| v > b) {
                best = Some((g, v));
            }
        }
        if let Some((g, _)) = best {
            gt_matched[g] = true;
            matched_gt[p] = Some(g);
        }
    }
    let tp = matched_gt.iter().filter(|m| m.is_some()).count();
    MatchResult {
        order,
        confidences: preds.iter().map(|d| d.confidence).collect(),
        fp: preds.len() - tp,
        fn_: gts.len() - tp,
        tp,
        matched_gt,
        gt_matched,
    }
}

/// Precision, recall and their harmonic mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf1<T = f64> {
    pub precision: T,
    pub recall: T,
    pub f1: T,
    /// Set when a zero denominator forced a value to 0.
    pub degenerate: bool,
}

pub fn f1_score<T: Scalar>(precision: T, recall: T) -> T {
    let s = precision + recall;
    if s <= T::zero() {
        T::zero()
    } else {
        T::lit(2.0) * precision * recall / s
    }
}

pub fn prf1<T: Scalar>(tp: usize, fp: usize, fn_: usize) -> Prf1<T> {
    let ratio = |num: usize, den: usize| if den == 0 { None } else { Some(T::from_usize_lossy(num) / T::from_usize_lossy(den)) };
    let p = ratio(tp, tp + fp);
    let r = ratio(tp, tp + fn_);
    let precision = p.unwrap_or_else(T::zero);
    let recall = r.unwrap_or_else(T::zero);
    let sum_zero = precision + recall <= T::zero();
    Prf1 { precision, recall, f1: f1_score(precision, recall), degenerate: p.is_none() || r.is_none() || sum_zero }
}
