//! On-disk review state.
//!
//! A dataset root holds `manifest.json`, one YOLO label file per image under
//! the manifest's label directory, optional model proposals as JSON arrays of
//! annotations under `proposals/`, and the `review.json` sidecar with
//! revisions, completion flags and the full reviewed label sets including
//! statuses. Label files only ever hold accepted, corrected and human labels.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use adk_core::geometry::LabelStatus;
use adk_core::labelio::{read_yolo, write_yolo};
use adk_core::manifest::{DatasetManifest, ImageRecord, Split};
use adk_core::Annotation;
use serde::{Deserialize, Serialize};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SIDECAR_FILE: &str = "review.json";
pub const PROPOSAL_DIR: &str = "proposals";

#[derive(Debug)]
pub enum StoreError {
    NotFound(String),
    BadRequest(String),
    Conflict { current: u64, got: u64 },
    Internal(String),
}

impl std::fmt::Display for StoreError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StoreError::NotFound(id) => write!(f, "unknown image {id}"),
            StoreError::BadRequest(m) => write!(f, "{m}"),
            StoreError::Conflict { current, got } => write!(f, "stale revision {got}, current is {current}"),
            StoreError::Internal(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for StoreError {}

impl From<adk_core::Error> for StoreError {
    fn from(e: adk_core::Error) -> Self {
        StoreError::Internal(e.to_string())
    }
}

fn internal(path: &Path, e: impl std::fmt::Display) -> StoreError {
    StoreError::Internal(format!("{}: {e}", path.display()))
}

/// Labels of one image as exchanged with clients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelSet {
    pub revision: u64,
    pub annotations: Vec<Annotation>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
struct ImageReview {
    revision: u64,
    #[serde(default)]
    completed: bool,
    /// Absent until the first save; afterwards the authoritative label set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    annotations: Option<Vec<Annotation>>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct Sidecar {
    images: BTreeMap<String, ImageReview>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReviewStatus {
    Pending,
    InProgress,
    Completed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageEntry {
    pub id: String,
    pub path: String,
    pub width: u32,
    pub height: u32,
    pub split: Split,
    pub revision: u64,
    pub status: ReviewStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestView {
    pub classes: Vec<String>,
    pub images: Vec<ImageEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    pub total: usize,
    pub completed: usize,
    pub in_progress: usize,
    pub pending: usize,
}

/// Writes go through a temporary sibling and a rename so readers never see a
/// partial file.
fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), StoreError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| internal(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents).map_err(|e| internal(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| internal(path, e))
}

fn status_of(r: Option<&ImageReview>) -> ReviewStatus {
    match r {
        Some(r) if r.completed => ReviewStatus::Completed,
        Some(r) if r.revision > 0 => ReviewStatus::InProgress,
        _ => ReviewStatus::Pending,
    }
}

pub struct ReviewStore {
    root: PathBuf,
    manifest: DatasetManifest,
    index: HashMap<String, usize>,
    proposal_dir: PathBuf,
    sidecar: RwLock<Sidecar>,
    /// Serializes writes to one image.
    gates: HashMap<String, Mutex<()>>,
    /// Serializes sidecar snapshots with their disk writes so they land in order.
    persist: Mutex<()>,
}

impl ReviewStore {
    /// Opens `root`. `proposal_dir` defaults to `root/proposals`.
    pub fn open(root: impl Into<PathBuf>, proposal_dir: Option<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        let manifest = DatasetManifest::load(&root.join(MANIFEST_FILE))?;
        let index: HashMap<String, usize> = manifest.images.iter().enumerate().map(|(i, r)| (r.id.clone(), i)).collect();
        let sidecar_path = root.join(SIDECAR_FILE);
        let mut sidecar: Sidecar = match fs::read_to_string(&sidecar_path) {
            Ok(text) => serde_json::from_str(&text).map_err(|e| internal(&sidecar_path, e))?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Sidecar::default(),
            Err(e) => return Err(internal(&sidecar_path, e)),
        };
        sidecar.images.retain(|id, _| {
            let known = index.contains_key(id);
            if !known {
                log::warn!("review.json mentions unknown image {id}; ignoring it");
            }
            known
        });
        let gates = index.keys().map(|id| (id.clone(), Mutex::new(()))).collect();
        Ok(ReviewStore {
            proposal_dir: proposal_dir.unwrap_or_else(|| root.join(PROPOSAL_DIR)),
            root,
            manifest,
            index,
            sidecar: RwLock::new(sidecar),
            gates,
            persist: Mutex::new(()),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn record(&self, id: &str) -> Result<&ImageRecord, StoreError> {
        self.index.get(id).map(|&i| &self.manifest.images[i]).ok_or_else(|| StoreError::NotFound(id.to_string()))
    }

    fn label_path(&self, id: &str) -> PathBuf {
        self.root.join(&self.manifest.label_dir).join(format!("{id}.txt"))
    }

    fn review(&self, id: &str) -> Option<ImageReview> {
        self.sidecar.read().expect("sidecar lock").images.get(id).cloned()
    }

    pub fn manifest_view(&self) -> ManifestView {
        let sidecar = self.sidecar.read().expect("sidecar lock");
        let images = self
            .manifest
            .images
            .iter()
            .map(|r| {
                let review = sidecar.images.get(&r.id);
                ImageEntry {
                    id: r.id.clone(),
                    path: r.path.clone(),
                    width: r.width,
                    height: r.height,
                    split: r.split,
                    revision: review.map_or(0, |v| v.revision),
                    status: status_of(review),
                }
            })
            .collect();
        ManifestView { classes: self.manifest.classes.clone(), images }
    }

    pub fn image_path(&self, id: &str) -> Result<PathBuf, StoreError> {
        Ok(self.root.join(&self.record(id)?.path))
    }

    /// Reviewed labels once saved; before that, the label file plus any
    /// model proposals.
    pub fn labels(&self, id: &str) -> Result<LabelSet, StoreError> {
        let rec = self.record(id)?;
        let review = self.review(id).unwrap_or_default();
        if let Some(annotations) = review.annotations {
            return Ok(LabelSet { revision: review.revision, annotations });
        }
        let path = self.label_path(id);
        let mut annotations = match fs::read_to_string(&path) {
            Ok(text) => read_yolo(&text, rec.width, rec.height, self.manifest.classes.len()).map_err(|e| internal(&path, e))?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
            Err(e) => return Err(internal(&path, e)),
        };
        let prop_path = self.proposal_dir.join(format!("{id}.json"));
        match fs::read_to_string(&prop_path) {
            Ok(text) => {
                let props: Vec<Annotation> = serde_json::from_str(&text).map_err(|e| internal(&prop_path, e))?;
                annotations.extend(props);
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
            Err(e) => return Err(internal(&prop_path, e)),
        }
        Ok(LabelSet { revision: review.revision, annotations })
    }

    fn check(&self, rec: &ImageRecord, anns: &[Annotation]) -> Result<(), StoreError> {
        let (w, h) = (rec.width as f64, rec.height as f64);
        for (i, a) in anns.iter().enumerate() {
            if a.class_id >= self.manifest.classes.len() {
                return Err(StoreError::BadRequest(format!(
                    "annotation {i}: class {} out of range for {} classes",
                    a.class_id,
                    self.manifest.classes.len()
                )));
            }
            a.bbox.validate().map_err(|e| StoreError::BadRequest(format!("annotation {i}: {e}")))?;
            let b = &a.bbox;
            if b.x1 < 0.0 || b.y1 < 0.0 || b.x2 > w || b.y2 > h {
                return Err(StoreError::BadRequest(format!("annotation {i}: box outside the {w}x{h} image")));
            }
        }
        Ok(())
    }

    fn persist_with(&self, f: impl FnOnce(&mut Sidecar)) -> Result<(), StoreError> {
        let _order = self.persist.lock().expect("persist lock");
        let snapshot = {
            let mut sidecar = self.sidecar.write().expect("sidecar lock");
            f(&mut sidecar);
            serde_json::to_vec_pretty(&*sidecar).map_err(|e| StoreError::Internal(e.to_string()))?
        };
        write_atomic(&self.root.join(SIDECAR_FILE), &snapshot)
    }

    /// Stores `set` if its revision is current and returns the new revision.
    pub fn save(&self, id: &str, set: LabelSet) -> Result<LabelSet, StoreError> {
        let rec = self.record(id)?;
        self.check(rec, &set.annotations)?;
        let _gate = self.gates[id].lock().expect("image gate");
        let current = self.review(id).map_or(0, |r| r.revision);
        if set.revision != current {
            return Err(StoreError::Conflict { current, got: set.revision });
        }
        let confirmed: Vec<Annotation> = set.annotations.iter().filter(|a| a.status != LabelStatus::Proposed).copied().collect();
        let text = write_yolo(&confirmed, rec.width, rec.height)?;
        write_atomic(&self.label_path(id), text.as_bytes())?;
        let revision = current + 1;
        let annotations = set.annotations;
        self.persist_with(|s| {
            let entry = s.images.entry(id.to_string()).or_default();
            entry.revision = revision;
            entry.annotations = Some(annotations.clone());
        })?;
        Ok(LabelSet { revision, annotations })
    }

    pub fn complete(&self, id: &str) -> Result<ImageEntry, StoreError> {
        self.record(id)?;
        let _gate = self.gates[id].lock().expect("image gate");
        self.persist_with(|s| s.images.entry(id.to_string()).or_default().completed = true)?;
        self.manifest_view()
            .images
            .into_iter()
            .find(|e| e.id == id)
            .ok_or_else(|| StoreError::NotFound(id.to_string()))
    }

    pub fn progress(&self) -> Progress {
        let sidecar = self.sidecar.read().expect("sidecar lock");
        let mut p = Progress { total: self.manifest.images.len(), completed: 0, in_progress: 0, pending: 0 };
        for r in &self.manifest.images {
            match status_of(sidecar.images.get(&r.id)) {
                ReviewStatus::Completed => p.completed += 1,
                ReviewStatus::InProgress => p.in_progress += 1,
                ReviewStatus::Pending => p.pending += 1,
            }
        }
        p
    }
}
