//! Dataset manifest: class list, image records and split membership.
//!
//! JSON form: `{"classes": [...], "images": [{"id", "path", "width", "height", "split"}], "label_dir": "labels"}`.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
    #[default]
    Unsplit,
}

impl Split {
    pub const ALL: [Split; 4] = [Split::Train, Split::Val, Split::Test, Split::Unsplit];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
            Split::Unsplit => "unsplit",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageRecord {
    pub id: String,
    pub path: String,
    pub width: u32,
    pub height: u32,
    #[serde(default)]
    pub split: Split,
}

fn default_label_dir() -> String {
    "labels".to_string()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub classes: Vec<String>,
    pub images: Vec<ImageRecord>,
    /// Label directory, relative to the manifest's directory.
    #[serde(default = "default_label_dir")]
    pub label_dir: String,
}

impl DatasetManifest {
    pub fn new(classes: Vec<String>, images: Vec<ImageRecord>) -> Result<Self> {
        let m = DatasetManifest { classes, images, label_dir: default_label_dir() };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let mut names = HashSet::new();
        for c in &self.classes {
            if !names.insert(c.as_str()) {
                return Err(Error::Manifest(format!("duplicate class name {c:?}")));
            }
        }
        let mut ids = HashSet::new();
        for img in &self.images {
            if !ids.insert(img.id.as_str()) {
                return Err(Error::Manifest(format!("duplicate image id {:?}", img.id)));
            }
            if img.width == 0 || img.height == 0 {
                return Err(Error::Manifest(format!("image {:?} has zero size", img.id)));
            }
        }
        Ok(())
    }

    pub fn class_index(&self, name: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == name)
    }

    pub fn image(&self, id: &str) -> Option<&ImageRecord> {
        self.images.iter().find(|i| i.id == id)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: DatasetManifest = serde_json::from_str(text)?;
        m.validate()?;
        Ok(m)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()? + "\n").map_err(|e| Error::io(path, e))
    }
}
