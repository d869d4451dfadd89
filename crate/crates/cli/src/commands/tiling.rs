use std::collections::BTreeMap;
use std::path::Path;

use adk_core::labelio::{read_detections_jsonl, read_yolo, write_detections_jsonl, write_yolo, DetectionRecord};
use adk_core::manifest::{DatasetManifest, ImageRecord, Split};
use adk_core::raster::Raster;
use adk_core::tiler::{crop_tile, plan_tiles, remap_annotations, stitch_detections, TileOrigin, TilePlan, TilePolicy};
use adk_core::{Annotation, Detection};
use anyhow::{Context, Result};
use rayon::prelude::*;

use crate::args::{Policy, StitchArgs, TileArgs};
use crate::dataset::{class_list, expand, is_image, read_text, stem, write_text};
use crate::Usage;

fn tile_one(path: &Path, a: &TileArgs, num_classes: Option<usize>) -> Result<Vec<ImageRecord>> {
    let id = stem(path)?;
    let img = Raster::load(path)?;
    let policy = match a.policy {
        Policy::Clamp => TilePolicy::Clamp,
        Policy::DropPartial => TilePolicy::DropPartial,
    };
    let plan = plan_tiles(&id, img.width(), img.height(), (a.win, a.win), (a.stride, a.stride), policy)
        .with_context(|| format!("tiling {}", path.display()))?;
    write_text(&a.out.join("plans").join(format!("{id}.json")), &plan.to_json()?)?;

    let labels: Option<Vec<Annotation>> = match (&a.labels, num_classes) {
        (Some(dir), Some(nc)) => {
            let lp = dir.join(format!("{id}.txt"));
            Some(match std::fs::read_to_string(&lp) {
                Ok(text) => read_yolo(&text, img.width(), img.height(), nc).with_context(|| format!("in {}", lp.display()))?,
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                    log::warn!("{}: no label file, tiles get empty labels", lp.display());
                    Vec::new()
                }
                Err(e) => return Err(e).with_context(|| format!("reading {}", lp.display())),
            })
        }
        _ => None,
    };

    let (tw, th) = plan.tile_size();
    let mut records = Vec::with_capacity(plan.len());
    for o in &plan.origins {
        let name = plan.tile_name(o);
        let tile = crop_tile(&img, o.x, o.y, (tw, th))?;
        tile.save(&a.out.join(format!("{name}.png")))?;
        if let Some(anns) = &labels {
            let local = remap_annotations(anns, &plan.tile_rect(o), a.min_visibility)?;
            write_text(&a.out.join("labels").join(format!("{name}.txt")), &write_yolo(&local, tw, th)?)?;
        }
        records.push(ImageRecord { id: name.clone(), path: format!("{name}.png"), width: tw, height: th, split: Split::Unsplit });
    }
    log::info!("{}: {} tiles", path.display(), plan.len());
    Ok(records)
}

pub fn tile(a: TileArgs) -> Result<()> {
    if a.win == 0 || a.stride == 0 {
        return Err(Usage("--win and --stride must be positive".into()).into());
    }
    if !(0.0..=1.0).contains(&a.min_visibility) {
        return Err(Usage("--min-visibility must lie in [0, 1]".into()).into());
    }
    let classes = a.classes.as_deref().map(class_list).transpose()?;
    if a.labels.is_some() && classes.is_none() {
        return Err(Usage("--labels needs --classes to validate class ids".into()).into());
    }
    let images = expand(&a.inputs, is_image)?;
    anyhow::ensure!(!images.is_empty(), "no images found in the --in paths");
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let nc = classes.as_ref().map(Vec::len);
    let per_image: Vec<Vec<ImageRecord>> = images.par_iter().map(|p| tile_one(p, &a, nc)).collect::<Result<_>>()?;
    let records: Vec<ImageRecord> = per_image.into_iter().flatten().collect();
    let count = records.len();
    if let Some(classes) = classes {
        let manifest = DatasetManifest::new(classes, records)?;
        manifest.save(&a.out.join("manifest.json"))?;
    }
    println!("{} images -> {count} tiles in {}", images.len(), a.out.display());
    Ok(())
}

pub fn stitch(a: StitchArgs) -> Result<()> {
    let plan_files = expand(&a.plan, |p| p.extension().is_some_and(|e| e == "json"))?;
    let mut plans: Vec<TilePlan> = Vec::new();
    let mut by_tile: BTreeMap<String, (usize, TileOrigin)> = BTreeMap::new();
    for pf in &plan_files {
        let plan = TilePlan::from_json(&read_text(pf)?).with_context(|| format!("in {}", pf.display()))?;
        for o in &plan.origins {
            by_tile.insert(plan.tile_name(o), (plans.len(), *o));
        }
        plans.push(plan);
    }
    anyhow::ensure!(!plans.is_empty(), "no tile plans found");

    let records = read_detections_jsonl(&read_text(&a.dets)?).with_context(|| format!("in {}", a.dets.display()))?;
    let mut per_plan: Vec<BTreeMap<(u32, u32), (TileOrigin, Vec<Detection>)>> = vec![BTreeMap::new(); plans.len()];
    let mut unknown = 0usize;
    for r in records {
        match by_tile.get(&r.image_id) {
            Some(&(p, o)) => per_plan[p].entry((o.row, o.col)).or_insert_with(|| (o, Vec::new())).1.push(r.detection),
            None => unknown += 1,
        }
    }
    if unknown > 0 {
        log::warn!("{unknown} detections reference tiles not in any plan; skipped");
    }

    let mut out = Vec::new();
    for (plan, tiles) in plans.iter().zip(per_plan) {
        let tiles: Vec<(TileOrigin, Vec<Detection>)> = tiles.into_values().collect();
        for d in stitch_detections(&tiles, a.nms)? {
            out.push(DetectionRecord { image_id: plan.image_id.clone(), detection: d });
        }
    }
    write_text(&a.out, &write_detections_jsonl(&out)?)?;
    println!("{} detections over {} images -> {}", out.len(), plans.len(), a.out.display());
    Ok(())
}

