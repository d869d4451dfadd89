//! Detection evaluation: greedy matching, P/R/F1, all-points AP, mAP over IoU
//! thresholds, confusion matrices and dataset statistics.

mod ap;
mod confusion;
mod matching;
mod stats;

use std::fmt::Write;

use serde::{Deserialize, Serialize};

pub use ap::{average_precision, average_precision_from_outcomes, pr_curve, PrPoint};
pub use confusion::{confusion_matrix, ConfusionMatrix};
pub use matching::{f1_score, match_detections, prf1, MatchResult, Prf1};
pub use stats::{dataset_stats, DatasetStats, SplitStats};

use crate::geometry::{Annotation, Detection};
use crate::scalar::Scalar;

/// Predictions and ground truth of one image, all classes.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalImage<T = f64> {
    pub image_id: String,
    pub preds: Vec<Detection<T>>,
    pub gts: Vec<Annotation<T>>,
}

/// IoU thresholds `0.50, 0.55, ..., 0.95`.
pub fn coco_thresholds<T: Scalar>() -> Vec<T> {
    (0..10).map(|i| T::lit(0.5 + 0.05 * i as f64)).collect()
}

fn class_slice<T: Scalar>(images: &[EvalImage<T>], class_id: usize) -> Vec<(Vec<Detection<T>>, Vec<Annotation<T>>)> {
    images
        .iter()
        .map(|img| {
            (
                img.preds.iter().filter(|d| d.class_id == class_id).copied().collect(),
                img.gts.iter().filter(|a| a.class_id == class_id && a.is_active()).copied().collect(),
            )
        })
        .collect()
}

fn gt_count<T: Scalar>(images: &[EvalImage<T>], class_id: usize) -> usize {
    images.iter().flat_map(|i| &i.gts).filter(|a| a.class_id == class_id && a.is_active()).count()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapTable<T = f64> {
    pub thresholds: Vec<T>,
    /// `ap[class][threshold]`; `None` for classes without ground truth, which
    /// are left out of the means.
    pub ap: Vec<Vec<Option<T>>>,
    pub map_per_threshold: Vec<T>,
    pub map: T,
}

fn mean<T: Scalar>(values: impl Iterator<Item = T>) -> T {
    let (sum, n) = values.fold((T::zero(), 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        T::zero()
    } else {
        sum / T::from_usize_lossy(n)
    }
}

/// AP per class and threshold; mAP is the mean over classes, then over thresholds.
pub fn map_at<T: Scalar>(images: &[EvalImage<T>], num_classes: usize, thresholds: &[T]) -> MapTable<T> {
    let ap: Vec<Vec<Option<T>>> = (0..num_classes)
        .map(|c| {
            if gt_count(images, c) == 0 {
                return vec![None; thresholds.len()];
            }
            let slice = class_slice(images, c);
            thresholds.iter().map(|&t| Some(average_precision(&slice, t))).collect()
        })
        .collect();
    let map_per_threshold: Vec<T> = (0..thresholds.len()).map(|t| mean(ap.iter().filter_map(|row| row[t]))).collect();
    let map = mean(map_per_threshold.iter().copied());
    MapTable { thresholds: thresholds.to_vec(), ap, map_per_threshold, map }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    /// IoU for matching in P/R/F1, AP@.5 and the confusion matrix.
    pub iou: f64,
    /// Confidence cutoff for P/R/F1 and the confusion matrix. AP uses every prediction.
    pub conf: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { iou: 0.5, conf: 0.25 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport<T = f64> {
    pub name: String,
    pub instances: usize,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub precision: T,
    pub recall: T,
    pub f1: T,
    pub ap50: Option<T>,
    pub ap50_95: Option<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport<T = f64> {
    pub images: usize,
    pub instances: usize,
    pub precision: T,
    pub recall: T,
    pub f1: T,
    pub map50: T,
    pub map50_95: T,
    pub degenerate: bool,
    pub classes: Vec<ClassReport<T>>,
    pub confusion: ConfusionMatrix,
    pub confusion_normalized: Vec<Vec<f64>>,
}

pub fn evaluate<T: Scalar>(images: &[EvalImage<T>], class_names: &[String], cfg: &EvalConfig) -> EvalReport<T> {
    let nc = class_names.len();
    let (iou_thr, conf_thr) = (T::lit(cfg.iou), T::lit(cfg.conf));

    let at50 = map_at(images, nc, &[iou_thr]);
    let coco = map_at(images, nc, &coco_thresholds::<T>());

    let mut classes = Vec::with_capacity(nc);
    let (mut tp_all, mut fp_all, mut fn_all) = (0, 0, 0);
    for (c, name) in class_names.iter().enumerate() {
        let (mut tp, mut fp, mut fn_) = (0, 0, 0);
        for (preds, gts) in class_slice(images, c) {
            let confident: Vec<_> = preds.into_iter().filter(|d| d.confidence >= conf_thr).collect();
            let boxes: Vec<_> = gts.iter().map(|a| a.bbox).collect();
            let m = match_detections(&confident, &boxes, iou_thr);
            tp += m.tp;
            fp += m.fp;
            fn_ += m.fn_;
        }
        tp_all += tp;
        fp_all += fp;
        fn_all += fn_;
        let s = prf1::<T>(tp, fp, fn_);
        let ap50_95 = coco.ap[c][0].map(|_| mean(coco.ap[c].iter().flatten().copied()));
        classes.push(ClassReport {
            name: name.clone(),
            instances: tp + fn_,
            tp,
            fp,
            fn_,
            precision: s.precision,
            recall: s.recall,
            f1: s.f1,
            ap50: at50.ap[c][0],
            ap50_95,
        });
    }

    let overall = prf1::<T>(tp_all, fp_all, fn_all);
    let pairs: Vec<_> = images.iter().map(|i| (i.preds.clone(), i.gts.clone())).collect();
    let confusion = confusion_matrix(&pairs, nc, conf_thr, iou_thr);
    EvalReport {
        images: images.len(),
        instances: tp_all + fn_all,
        precision: overall.precision,
        recall: overall.recall,
        f1: overall.f1,
        map50: at50.map,
        map50_95: coco.map,
        degenerate: overall.degenerate,
        classes,
        confusion_normalized: confusion.normalized(),
        confusion,
    }
}

impl<T: Scalar> EvalReport<T> {
    /// Plain-text table with columns P, R, mAP@.5, mAP@.5:.95, F1.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let f = |v: T| format!("{:.4}", v.to_f64_lossy());
        let o = |v: Option<T>| v.map_or_else(|| "-".to_string(), f);
        writeln!(s, "{:<16} {:>9} {:>8} {:>8} {:>8} {:>11} {:>8}", "Class", "Instances", "P", "R", "mAP@.5", "mAP@.5:.95", "F1").unwrap();
        writeln!(
            s,
            "{:<16} {:>9} {:>8} {:>8} {:>8} {:>11} {:>8}",
            "all",
            self.instances,
            f(self.precision),
            f(self.recall),
            f(self.map50),
            f(self.map50_95),
            f(self.f1)
        )
        .unwrap();
        for c in &self.classes {
            writeln!(
                s,
                "{:<16} {:>9} {:>8} {:>8} {:>8} {:>11} {:>8}",
                c.name,
                c.instances,
                f(c.precision),
                f(c.recall),
                o(c.ap50),
                o(c.ap50_95),
                f(c.f1)
            )
            .unwrap();
        }
        s
    }
}
