use std::path::{Path, PathBuf};

use adk_core::anchors::{kmeans_anchors, AnchorMetric, KmeansOptions};
use adk_core::evalkit::{dataset_stats, evaluate, EvalConfig, EvalImage};
use adk_core::geometry::SizeThresholds;
use adk_core::labelio::{group_by_image, read_detections_jsonl};
use adk_core::manifest::Split;
use anyhow::{Context, Result};

use crate::args::{AnchorArgs, EvalArgs, Metric, StatsArgs};
use crate::dataset::{read_text, write_json, Dataset};
use crate::Usage;

/// `--manifest`, else `manifest.json` in the ground-truth directory or its parent.
fn find_manifest(explicit: Option<&Path>, gt: &Path) -> Result<PathBuf> {
    if let Some(p) = explicit {
        return Ok(p.to_path_buf());
    }
    [Some(gt), gt.parent()]
        .into_iter()
        .flatten()
        .map(|d| d.join("manifest.json"))
        .find(|p| p.is_file())
        .ok_or_else(|| Usage(format!("no manifest.json in or above {}; pass --manifest", gt.display())).into())
}

pub fn eval(a: EvalArgs) -> Result<()> {
    let ds = Dataset::load(&find_manifest(a.manifest.as_deref(), &a.gt)?)?;
    let gt_dir = if a.gt.join("manifest.json").is_file() { ds.label_dir() } else { a.gt.clone() };
    let mut labels = ds.labels_from(&gt_dir, a.split)?;
    let records = read_detections_jsonl(&read_text(&a.dets)?).with_context(|| format!("in {}", a.dets.display()))?;
    let mut dets = group_by_image(records);

    let mut images = Vec::new();
    for rec in ds.manifest.images.iter().filter(|r| a.split.is_none_or(|s| r.split == s)) {
        let gts = labels.remove(&rec.id).unwrap_or_else(|| {
            log::warn!("{}: no label file, treated as background", rec.id);
            Vec::new()
        });
        images.push(EvalImage { image_id: rec.id.clone(), preds: dets.remove(&rec.id).unwrap_or_default(), gts });
    }
    if !dets.is_empty() {
        log::warn!("detections for {} images outside the evaluated set were ignored", dets.len());
    }
    let report = evaluate(&images, &ds.manifest.classes, &EvalConfig { iou: a.iou, conf: a.conf });
    print!("{}", report.to_table());
    if report.degenerate {
        log::warn!("some metrics had zero denominators and were set to 0");
    }
    if let Some(p) = &a.json {
        write_json(p, &report)?;
    }
    Ok(())
}

pub fn stats(a: StatsArgs) -> Result<()> {
    let cfg = SizeThresholds::new(a.small_max, a.medium_max).map_err(|e| Usage(e.to_string()))?;
    let ds = Dataset::load(&a.manifest)?;
    let labels = ds.labels(None)?;
    let st = dataset_stats(&ds.manifest, &labels, &cfg);
    println!(
        "{:<8} {:>7} {:>9} {:>11} {:>10} {:>9} {:>8} {:>8} {:>8}",
        "split", "images", "targeted", "untargeted", "instances", "per-img", "S", "M", "L"
    );
    let rows = Split::ALL.iter().filter_map(|s| st.per_split.get(s).map(|v| (s.as_str(), v))).chain([("all", &st.total)]);
    for (name, s) in rows {
        println!(
            "{:<8} {:>7} {:>9} {:>11} {:>10} {:>9.2} {:>8} {:>8} {:>8}",
            name,
            s.images,
            s.targeted,
            s.untargeted,
            s.instances,
            s.instances_per_image(),
            s.small,
            s.medium,
            s.large
        );
    }
    if st.total.missing_labels > 0 {
        log::warn!("{} images have no label file", st.total.missing_labels);
    }
    if let Some(p) = &a.json {
        write_json(p, &st)?;
    }
    Ok(())
}

pub fn anchors(a: AnchorArgs) -> Result<()> {
    let ds = Dataset::load(&a.manifest)?;
    let whs: Vec<(f64, f64)> = ds
        .labels(a.split)?
        .values()
        .flatten()
        .filter(|x| x.is_active() && !x.bbox.is_degenerate())
        .map(|x| (x.bbox.width(), x.bbox.height()))
        .collect();
    let metric = match a.metric {
        Metric::Iou => AnchorMetric::Iou,
        Metric::Euclidean => AnchorMetric::Euclidean,
    };
    let opts = KmeansOptions { k: a.k, seed: a.seed, max_iter: a.max_iter, metric, ..KmeansOptions::default() };
    let set = kmeans_anchors(&whs, &opts)?;
    println!("{}", set.to_nested_list());
    println!("shapes {}  mean best IoU {:.4}  iterations {}", whs.len(), set.mean_best_iou, set.iterations);
    if let Some(p) = &a.json {
        write_json(p, &set)?;
    }
    Ok(())
}
