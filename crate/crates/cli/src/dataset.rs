//! File-system helpers shared by the subcommands.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use adk_core::labelio::read_yolo;
use adk_core::manifest::{DatasetManifest, Split};
use adk_core::Annotation;
use anyhow::{Context, Result};
use serde::Serialize;

use crate::Usage;

const IMAGE_EXTS: [&str; 6] = ["png", "jpg", "jpeg", "bmp", "tif", "tiff"];

pub fn is_image(p: &Path) -> bool {
    p.extension().and_then(|e| e.to_str()).is_some_and(|e| IMAGE_EXTS.contains(&e.to_ascii_lowercase().as_str()))
}

pub fn stem(p: &Path) -> Result<String> {
    p.file_stem().and_then(|s| s.to_str()).map(str::to_string).with_context(|| format!("{}: no usable file name", p.display()))
}

/// Files as given plus the matching files of any directory, sorted, without
/// duplicates.
pub fn expand(inputs: &[PathBuf], keep: impl Fn(&Path) -> bool) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in inputs {
        if p.is_dir() {
            for entry in fs::read_dir(p).with_context(|| format!("reading {}", p.display()))? {
                let path = entry?.path();
                if path.is_file() && keep(&path) {
                    out.push(path);
                }
            }
        } else if p.is_file() {
            out.push(p.clone());
        } else {
            anyhow::bail!("{}: no such file or directory", p.display());
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

/// `a,b,c` or the path of a file with one name per line.
pub fn class_list(spec: &str) -> Result<Vec<String>> {
    let names: Vec<String> = if Path::new(spec).is_file() {
        fs::read_to_string(spec).with_context(|| format!("reading {spec}"))?.lines().map(|l| l.trim().to_string()).filter(|l| !l.is_empty()).collect()
    } else {
        spec.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
    };
    if names.is_empty() {
        return Err(Usage(format!("no class names in {spec:?}")).into());
    }
    Ok(names)
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    write_text(path, &(text + "\n"))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

/// A manifest with its directory, against which image paths and the label
/// directory resolve.
pub struct Dataset {
    pub root: PathBuf,
    pub manifest: DatasetManifest,
}

impl Dataset {
    pub fn load(manifest_path: &Path) -> Result<Self> {
        let manifest = DatasetManifest::load(manifest_path)?;
        let root = manifest_path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Dataset { root, manifest })
    }

    pub fn image_path(&self, path: &str) -> PathBuf {
        self.root.join(path)
    }

    pub fn label_dir(&self) -> PathBuf {
        self.root.join(&self.manifest.label_dir)
    }

    /// Labels of every image in `split` (all images when `None`). Images
    /// without a label file are left out of the map.
    pub fn labels(&self, split: Option<Split>) -> Result<BTreeMap<String, Vec<Annotation>>> {
        self.labels_from(&self.label_dir(), split)
    }

    pub fn labels_from(&self, dir: &Path, split: Option<Split>) -> Result<BTreeMap<String, Vec<Annotation>>> {
        let mut out = BTreeMap::new();
        for rec in self.manifest.images.iter().filter(|r| split.is_none_or(|s| r.split == s)) {
            let path = dir.join(format!("{}.txt", rec.id));
            match fs::read_to_string(&path) {
                Ok(text) => {
                    let anns = read_yolo(&text, rec.width, rec.height, self.manifest.classes.len())
                        .with_context(|| format!("in {}", path.display()))?;
                    out.insert(rec.id.clone(), anns);
                }
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
                Err(e) => return Err(e).with_context(|| format!("reading {}", path.display())),
            }
        }
        Ok(out)
    }
}
