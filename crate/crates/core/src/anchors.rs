//! Anchor shapes by k-means over ground-truth `(w, h)` pairs.
//!
//! The default metric treats every box as anchored at the origin and uses
//! `1 - IoU` as the distance, with per-cluster medians as the center update.
//! Seeding is the k-means++ rule under that same distance.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::cmp_total;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnchorMetric {
    /// `1 - IoU` with median updates.
    #[default]
    Iou,
    /// Squared Euclidean distance over `(w, h)` with mean updates.
    Euclidean,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KmeansOptions {
    pub k: usize,
    pub seed: u64,
    pub max_iter: usize,
    pub tol: f64,
    pub metric: AnchorMetric,
}

impl Default for KmeansOptions {
    fn default() -> Self {
        KmeansOptions { k: 9, seed: 0, max_iter: 300, tol: 1e-6, metric: AnchorMetric::Iou }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorSet<T = f64> {
    /// `(w, h)` pairs sorted by ascending area.
    pub anchors: Vec<(T, T)>,
    /// Mean over boxes of the best IoU to any anchor.
    pub mean_best_iou: T,
    /// Clustering cost after each accepted iteration, starting with the seeding.
    pub cost_history: Vec<T>,
    pub iterations: usize,
}

/// IoU of two boxes sharing their top-left corner.
pub fn shape_iou<T: Scalar>(a: (T, T), b: (T, T)) -> T {
    let inter = a.0.min(b.0) * a.1.min(b.1);
    let union = a.0 * a.1 + b.0 * b.1 - inter;
    if union <= T::zero() {
        T::zero()
    } else {
        inter / union
    }
}

fn distance<T: Scalar>(metric: AnchorMetric, a: (T, T), b: (T, T)) -> T {
    match metric {
        AnchorMetric::Iou => T::one() - shape_iou(a, b),
        AnchorMetric::Euclidean => (a.0 - b.0).powi(2) + (a.1 - b.1).powi(2),
    }
}

/// Nearest center per box (lowest index on ties) and the summed distance.
fn assign<T: Scalar>(metric: AnchorMetric, whs: &[(T, T)], centers: &[(T, T)]) -> (Vec<usize>, T) {
    let mut cost = T::zero();
    let labels = whs
        .iter()
        .map(|&b| {
            let (mut best, mut best_d) = (0, distance(metric, b, centers[0]));
            for (i, &c) in centers.iter().enumerate().skip(1) {
                let d = distance(metric, b, c);
                if d < best_d {
                    best = i;
                    best_d = d;
                }
            }
            cost += best_d;
            best
        })
        .collect();
    (labels, cost)
}

fn median<T: Scalar>(v: &mut [T]) -> T {
    v.sort_by(|a, b| cmp_total(*a, *b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / T::lit(2.0)
    }
}

fn update<T: Scalar>(metric: AnchorMetric, whs: &[(T, T)], labels: &[usize], centers: &[(T, T)]) -> Vec<(T, T)> {
    centers
        .iter()
        .enumerate()
        .map(|(c, &old)| {
            let (mut ws, mut hs): (Vec<T>, Vec<T>) = whs.iter().zip(labels).filter(|(_, &l)| l == c).map(|(b, _)| *b).unzip();
            if ws.is_empty() {
                return old;
            }
            match metric {
                AnchorMetric::Iou => (median(&mut ws), median(&mut hs)),
                AnchorMetric::Euclidean => {
                    let n = T::from_usize_lossy(ws.len());
                    (ws.iter().copied().sum::<T>() / n, hs.iter().copied().sum::<T>() / n)
                }
            }
        })
        .collect()
}

fn seed_centers<T: Scalar>(metric: AnchorMetric, whs: &[(T, T)], k: usize, rng: &mut ChaCha8Rng) -> Vec<(T, T)> {
    let mut centers = vec![whs[rng.random_range(0..whs.len())]];
    while centers.len() < k {
        let weights: Vec<f64> = whs
            .iter()
            .map(|&b| {
                let d = centers.iter().map(|&c| distance(metric, b, c)).fold(T::infinity(), |a, v| a.min(v));
                d.to_f64_lossy().powi(2)
            })
            .collect();
        let total: f64 = weights.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            // last positive-weight index guards against rounding at the top end
            let fallback = weights.iter().rposition(|&w| w > 0.0).unwrap_or(0);
            weights
                .iter()
                .position(|&w| {
                    acc += w;
                    w > 0.0 && acc > target
                })
                .unwrap_or(fallback)
        } else {
            rng.random_range(0..whs.len())
        };
        centers.push(whs[pick]);
    }
    centers
}

fn count_distinct<T: Scalar>(whs: &[(T, T)]) -> usize {
    let mut v = whs.to_vec();
    v.sort_by(|a, b| cmp_total(a.0, b.0).then(cmp_total(a.1, b.1)));
    v.dedup();
    v.len()
}

/// Lloyd iterations from k-means++ seeding.
///
/// An update is accepted only if it does not raise the cost, so the recorded
/// cost history is non-increasing. Iteration stops after `max_iter` updates,
/// when an update would raise the cost, or when the improvement falls below
/// `tol`.
pub fn kmeans_anchors<T: Scalar>(whs: &[(T, T)], opts: &KmeansOptions) -> Result<AnchorSet<T>> {
    if opts.k == 0 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    if let Some(bad) = whs.iter().find(|(w, h)| !(w.is_finite() && h.is_finite() && *w > T::zero() && *h > T::zero())) {
        return Err(Error::InvalidArgument(format!("box shape {bad:?} must be positive and finite")));
    }
    let distinct = count_distinct(whs);
    if distinct < opts.k {
        return Err(Error::TooFewShapes { distinct, k: opts.k });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut centers = seed_centers(opts.metric, whs, opts.k, &mut rng);
    let (mut labels, mut cost) = assign(opts.metric, whs, &centers);
    let mut history = vec![cost];
    let tol = T::lit(opts.tol);
    let mut iterations = 0;

    while iterations < opts.max_iter {
        let proposed = update(opts.metric, whs, &labels, &centers);
        let (new_labels, new_cost) = assign(opts.metric, whs, &proposed);
        if new_cost > cost {
            break;
        }
        iterations += 1;
        let improvement = cost - new_cost;
        centers = proposed;
        labels = new_labels;
        cost = new_cost;
        history.push(cost);
        if improvement < tol {
            break;
        }
    }

    centers.sort_by(|a, b| cmp_total(a.0 * a.1, b.0 * b.1).then(cmp_total(a.0, b.0)));
    let mean_best_iou = anchor_fitness(whs, &centers)?;
    Ok(AnchorSet { anchors: centers, mean_best_iou, cost_history: history, iterations })
}

/// Mean over boxes of the best origin-anchored IoU to any anchor.
pub fn anchor_fitness<T: Scalar>(whs: &[(T, T)], anchors: &[(T, T)]) -> Result<T> {
    if whs.is_empty() || anchors.is_empty() {
        return Err(Error::InvalidArgument("anchor fitness needs boxes and anchors".into()));
    }
    let total: T = whs
        .iter()
        .map(|&b| anchors.iter().map(|&a| shape_iou(b, a)).fold(T::zero(), |m, v| m.max(v)))
        .sum();
    Ok(total / T::from_usize_lossy(whs.len()))
}

impl<T: Scalar> AnchorSet<T> {
    /// Anchors as rows of flattened `w,h` pairs, three anchors per row:
    /// `[[w,h, w,h, w,h], ...]`.
    pub fn to_nested_list(&self) -> String {
        let rows: Vec<String> = self
            .anchors
            .chunks(3)
            .map(|row| {
                let pairs: Vec<String> =
                    row.iter().map(|(w, h)| format!("{},{}", w.to_f64_lossy().round(), h.to_f64_lossy().round())).collect();
                format!("[{}]", pairs.join(", "))
            })
            .collect();
        format!("[{}]", rows.join(", "))
    }
}
