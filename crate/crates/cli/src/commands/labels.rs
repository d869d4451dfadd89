use std::path::Path;

use adk_core::labelio::{
    group_by_image, read_detections_jsonl, read_labelme, read_voc, read_yolo, split_dataset, write_labelme, write_voc, write_yolo,
    LabelmeDoc, SplitOptions, VocDocument,
};
use adk_core::manifest::{DatasetManifest, Split};
use adk_core::pseudolabel::{propose_labels, PseudoLabelConfig};
use adk_core::Annotation;
use anyhow::{Context, Result};

use crate::args::{ConvertArgs, LabelFormat, PseudoLabelArgs, SplitArgs};
use crate::dataset::{class_list, expand, read_text, stem, write_json, write_text};
use crate::Usage;

fn extension(f: LabelFormat) -> &'static str {
    match f {
        LabelFormat::Yolo => "txt",
        LabelFormat::Voc => "xml",
        LabelFormat::Labelme => "json",
    }
}

struct Loaded {
    anns: Vec<Annotation>,
    size: Option<(u32, u32)>,
    image_name: Option<String>,
}

fn load_labels(from: LabelFormat, text: &str, classes: &[String], size: Option<(u32, u32)>) -> Result<Loaded> {
    Ok(match from {
        LabelFormat::Yolo => {
            let (w, h) = size.context("YOLO labels need the image size: list the image in --manifest or pass --size")?;
            Loaded { anns: read_yolo(text, w, h, classes.len())?, size, image_name: None }
        }
        LabelFormat::Voc => {
            let doc = read_voc(text)?;
            let doc_size = doc.width.zip(doc.height);
            Loaded { anns: doc.to_annotations(classes)?, size: size.or(doc_size), image_name: Some(doc.filename) }
        }
        LabelFormat::Labelme => {
            let doc = read_labelme(text)?;
            if doc.skipped > 0 {
                log::warn!("{} non-rectangle shapes skipped", doc.skipped);
            }
            let doc_size = Some((doc.width, doc.height));
            Loaded { anns: doc.to_annotations(classes)?, size: size.or(doc_size), image_name: Some(doc.image_path) }
        }
    })
}

pub fn convert(a: ConvertArgs) -> Result<()> {
    let manifest = a.manifest.as_deref().map(DatasetManifest::load).transpose()?;
    let classes = match (&manifest, &a.classes) {
        (Some(m), _) => m.classes.clone(),
        (None, Some(spec)) => class_list(spec)?,
        (None, None) => return Err(Usage("convert needs --manifest or --classes".into()).into()),
    };
    let ext = extension(a.from);
    let files = expand(std::slice::from_ref(&a.input), |p| p.extension().is_some_and(|e| e == ext))?;
    anyhow::ensure!(!files.is_empty(), "no .{ext} files under {}", a.input.display());
    for f in &files {
        convert_one(f, &a, manifest.as_ref(), &classes).with_context(|| format!("converting {}", f.display()))?;
    }
    println!("converted {} files to {}", files.len(), a.out.display());
    Ok(())
}

fn convert_one(f: &Path, a: &ConvertArgs, manifest: Option<&DatasetManifest>, classes: &[String]) -> Result<()> {
    let id = stem(f)?;
    let rec = manifest.and_then(|m| m.image(&id));
    let size = rec.map(|r| (r.width, r.height)).or(a.size);
    let loaded = load_labels(a.from, &read_text(f)?, classes, size)?;
    let (w, h) = loaded.size.context("image size unknown: list the image in --manifest or pass --size")?;
    let image_name = rec
        .map(|r| Path::new(&r.path).file_name().map_or(r.path.clone(), |n| n.to_string_lossy().into_owned()))
        .or(loaded.image_name)
        .unwrap_or_else(|| format!("{id}.png"));
    let text = match a.to {
        LabelFormat::Yolo => write_yolo(&loaded.anns, w, h)?,
        LabelFormat::Voc => write_voc(&VocDocument::from_annotations(&loaded.anns, classes, &image_name, w, h)?),
        LabelFormat::Labelme => write_labelme(&LabelmeDoc::from_annotations(&loaded.anns, classes, &image_name, w, h)?)?,
    };
    write_text(&a.out.join(format!("{id}.{}", extension(a.to))), &text)
}

pub fn split(a: SplitArgs) -> Result<()> {
    let manifest = DatasetManifest::load(&a.manifest)?;
    let opts = SplitOptions { ratios: a.ratios, seed: a.seed, group_by_source: a.group_by_source };
    let out = split_dataset(&manifest, &opts)?;
    let dest = a.out.as_deref().unwrap_or(&a.manifest);
    out.save(dest)?;
    let count = |s: Split| out.images.iter().filter(|r| r.split == s).count();
    println!(
        "train {} / val {} / test {} -> {}",
        count(Split::Train),
        count(Split::Val),
        count(Split::Test),
        dest.display()
    );
    Ok(())
}

pub fn pseudo_label(a: PseudoLabelArgs) -> Result<()> {
    let cfg = PseudoLabelConfig { confidence: a.conf, nms_iou: a.nms, class_agnostic: a.class_agnostic };
    cfg.validate().map_err(|e| Usage(e.to_string()))?;
    let records = read_detections_jsonl(&read_text(&a.dets)?).with_context(|| format!("in {}", a.dets.display()))?;
    let mut total = 0;
    let grouped = group_by_image(records);
    for (id, dets) in &grouped {
        let proposals = propose_labels(dets, &cfg);
        total += proposals.len();
        write_json(&a.out.join(format!("{id}.json")), &proposals)?;
    }
    println!("{total} proposals for {} images -> {}", grouped.len(), a.out.display());
    Ok(())
}
