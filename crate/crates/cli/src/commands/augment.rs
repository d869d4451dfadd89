use std::collections::BTreeMap;

use adk_core::augment::{apply_spec, oversample_plan, plan_to_jsonl, OversampleOptions, SourceImage};
use adk_core::labelio::write_yolo;
use adk_core::manifest::{DatasetManifest, ImageRecord};
use adk_core::raster::Raster;
use anyhow::{Context, Result};
use rayon::prelude::*;

use crate::args::AugmentArgs;
use crate::dataset::{write_text, Dataset};

pub fn augment(a: AugmentArgs) -> Result<()> {
    let ds = Dataset::load(&a.manifest)?;
    let labels = ds.labels(a.split)?;
    let mut class_images: BTreeMap<String, Vec<SourceImage>> = ds.manifest.classes.iter().map(|c| (c.clone(), Vec::new())).collect();
    for rec in ds.manifest.images.iter().filter(|r| a.split.is_none_or(|s| r.split == s)) {
        let Some(anns) = labels.get(&rec.id) else { continue };
        let mut present: Vec<usize> = anns.iter().filter(|x| x.is_active()).map(|x| x.class_id).collect();
        present.sort_unstable();
        present.dedup();
        for c in present {
            let src = SourceImage { id: rec.id.clone(), width: rec.width, height: rec.height };
            class_images.get_mut(&ds.manifest.classes[c]).expect("class ids were validated").push(src);
        }
    }
    let opts = OversampleOptions { target: a.target, seed: a.seed, allow_downsample: a.allow_downsample };
    let plan = oversample_plan(&class_images, &opts)?;
    write_text(&a.out.join("plan.jsonl"), &plan_to_jsonl(&plan)?)?;
    if a.plan_only {
        println!("{} augmentations planned -> {}", plan.len(), a.out.join("plan.jsonl").display());
        return Ok(());
    }

    std::fs::create_dir_all(a.out.join("images")).with_context(|| format!("creating {}", a.out.display()))?;
    let records: Vec<ImageRecord> = plan
        .par_iter()
        .map(|e| {
            let rec = ds.manifest.image(&e.source).expect("plan sources come from the manifest");
            let img = Raster::load(&ds.image_path(&rec.path))?;
            let (out, anns) = apply_spec(&img, &labels[&e.source], &e.spec).with_context(|| format!("augmenting {}", e.source))?;
            let name = e.output_stem();
            out.save(&a.out.join("images").join(format!("{name}.png")))?;
            write_text(&a.out.join("labels").join(format!("{name}.txt")), &write_yolo(&anns, out.width(), out.height())?)?;
            Ok(ImageRecord { id: name.clone(), path: format!("images/{name}.png"), width: out.width(), height: out.height(), split: rec.split })
        })
        .collect::<Result<_>>()?;
    let manifest = DatasetManifest::new(ds.manifest.classes.clone(), records)?;
    manifest.save(&a.out.join("manifest.json"))?;
    println!("{} augmented images -> {}", plan.len(), a.out.display());
    Ok(())
}
