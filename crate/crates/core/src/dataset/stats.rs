use std::fmt;

use rand::seq::index;

use super::{DatasetManifest, ExpressionClass, NUM_CLASSES};
use crate::rng;
use crate::{FerError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ClassDistribution {
    pub counts: [u64; NUM_CLASSES],
    pub ratios: [f64; NUM_CLASSES],
    pub total: u64,
}

impl ClassDistribution {
    pub fn from_labels<'a>(labels: impl IntoIterator<Item = &'a ExpressionClass>) -> Self {
        let mut counts = [0u64; NUM_CLASSES];
        for label in labels {
            if let Some(i) = label.index() {
                counts[i] += 1;
            }
        }
        Self::from_counts(counts)
    }

    pub fn from_counts(counts: [u64; NUM_CLASSES]) -> Self {
        let total: u64 = counts.iter().sum();
        let ratios = counts.map(|c| if total == 0 { 0.0 } else { c as f64 / total as f64 });
        ClassDistribution { counts, ratios, total }
    }

    pub fn count(&self, class: ExpressionClass) -> u64 {
        class.index().map_or(0, |i| self.counts[i])
    }

    pub fn ratio(&self, class: ExpressionClass) -> f64 {
        class.index().map_or(0.0, |i| self.ratios[i])
    }
}

impl fmt::Display for ClassDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<10} {:>10} {:>7}", "class", "count", "ratio")?;
        for class in ExpressionClass::ALL {
            writeln!(f, "{:<10} {:>10} {:>7.3}", class.name(), self.count(class), self.ratio(class))?;
        }
        let total_ratio = if self.total == 0 { 0.0 } else { 1.0 };
        write!(f, "{:<10} {:>10} {:>7.3}", "total", self.total, total_ratio)
    }
}

/// Per-class frame counts over labeled frames only.
pub fn class_distribution(manifest: &DatasetManifest) -> ClassDistribution {
    ClassDistribution::from_labels(manifest.frames().map(|f| &f.label))
}

/// Number of items kept out of `count` at `fraction`: the ceiling of the
/// product, with a tolerance so `0.1 * 30` keeps 3 rather than 4.
fn kept_count(count: usize, fraction: f64) -> usize {
    let raw = fraction * count as f64;
    ((raw - 1e-9 * raw.max(1.0)).ceil().max(0.0) as usize).min(count)
}

/// Choose, independently per class, `⌈fraction · count⌉` item positions
/// uniformly at random. Unlabeled items form their own bucket. The result is
/// sorted ascending.
pub fn subsample_indices(labels: &[ExpressionClass], fraction: f64, seed: u64) -> Result<Vec<usize>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(FerError::invalid(format!("subsample fraction {fraction} outside (0, 1]")));
    }
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); NUM_CLASSES + 1];
    for (i, label) in labels.iter().enumerate() {
        buckets[label.index().unwrap_or(NUM_CLASSES)].push(i);
    }
    let mut kept = Vec::new();
    for (slot, members) in buckets.iter().enumerate() {
        let k = kept_count(members.len(), fraction);
        if k == members.len() {
            kept.extend_from_slice(members);
            continue;
        }
        let mut rng = rng::derived(seed, &[slot as u64]);
        kept.extend(index::sample(&mut rng, members.len(), k).into_iter().map(|j| members[j]));
    }
    kept.sort_unstable();
    Ok(kept)
}

/// Keep `⌈fraction · count⌉` frames of every class, chosen uniformly by a
/// generator seeded with `seed`. Videos keep their order and stay in the
/// manifest even when all their frames are dropped.
pub fn subsample_per_class(manifest: &DatasetManifest, fraction: f64, seed: u64) -> Result<DatasetManifest> {
    let labels: Vec<ExpressionClass> = manifest.frames().map(|f| f.label).collect();
    let kept = subsample_indices(&labels, fraction, seed)?;
    let mut keep = vec![false; labels.len()];
    for i in kept {
        keep[i] = true;
    }
    let mut flat = keep.into_iter();
    let videos = manifest
        .videos
        .iter()
        .map(|v| {
            let mut video = v.clone();
            video.frames.retain(|_| flat.next().unwrap_or(false));
            video
        })
        .collect();
    DatasetManifest::new(manifest.split, videos)
}
