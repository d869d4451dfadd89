use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::geometry::{size_class, Annotation, SizeClass, SizeThresholds};
use crate::manifest::{DatasetManifest, Split};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitStats {
    pub images: usize,
    pub targeted: usize,
    pub untargeted: usize,
    pub instances: usize,
    pub small: usize,
    pub medium: usize,
    pub large: usize,
    /// Images whose label file was absent; also counted as untargeted.
    pub missing_labels: usize,
}

impl SplitStats {
    pub fn instances_per_image(&self) -> f64 {
        if self.images == 0 {
            0.0
        } else {
            self.instances as f64 / self.images as f64
        }
    }

    fn add(&mut self, o: &SplitStats) {
        self.images += o.images;
        self.targeted += o.targeted;
        self.untargeted += o.untargeted;
        self.instances += o.instances;
        self.small += o.small;
        self.medium += o.medium;
        self.large += o.large;
        self.missing_labels += o.missing_labels;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub per_split: BTreeMap<Split, SplitStats>,
    pub total: SplitStats,
}

/// Counts images, instances and S/M/L sizes per split. `labels` maps image id
/// to its active annotations; ids absent from the map are untargeted.
pub fn dataset_stats(manifest: &DatasetManifest, labels: &BTreeMap<String, Vec<Annotation>>, cfg: &SizeThresholds) -> DatasetStats {
    let mut out = DatasetStats::default();
    for img in &manifest.images {
        let s = out.per_split.entry(img.split).or_default();
        s.images += 1;
        let Some(anns) = labels.get(&img.id) else {
            log::warn!("no label file for image {:?}; counted as untargeted", img.id);
            s.untargeted += 1;
            s.missing_labels += 1;
            continue;
        };
        let active: Vec<&Annotation> = anns.iter().filter(|a| a.is_active()).collect();
        if active.is_empty() {
            s.untargeted += 1;
        } else {
            s.targeted += 1;
        }
        for a in active {
            s.instances += 1;
            match size_class(&a.bbox, cfg) {
                SizeClass::S => s.small += 1,
                SizeClass::M => s.medium += 1,
                SizeClass::L => s.large += 1,
            }
        }
    }
    for s in out.per_split.values() {
        out.total.add(s);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BBox;
    use crate::manifest::ImageRecord;

    fn rec(id: &str) -> ImageRecord {
        ImageRecord { id: id.into(), path: format!("{id}.png"), width: 640, height: 640, split: Split::Train }
    }

    #[test]
    fn empty_dataset() {
        let m = DatasetManifest::new(vec!["a".into()], vec![]).unwrap();
        let s = dataset_stats(&m, &BTreeMap::new(), &SizeThresholds::default());
        assert_eq!(s.total, SplitStats::default());
    }

    #[test]
    fn synthetic_counts() {
        let m = DatasetManifest::new(vec!["a".into()], vec![rec("a"), rec("b"), rec("c"), rec("d")]).unwrap();
        let sq = |s: f64| Annotation::human(0, BBox::new(0.0, 0.0, s, s).unwrap());
        let mut labels = BTreeMap::new();
        labels.insert("a".to_string(), vec![sq(10.0), sq(50.0)]);
        labels.insert("b".to_string(), vec![sq(200.0)]);
        labels.insert("c".to_string(), vec![]);
        let s = dataset_stats(&m, &labels, &SizeThresholds::default());
        let t = s.total;
        assert_eq!((t.targeted, t.untargeted, t.missing_labels), (2, 2, 1));
        assert_eq!((t.small, t.medium, t.large, t.instances), (1, 1, 1, 3));
        assert_eq!(t.instances_per_image(), 0.75);
    }
}
