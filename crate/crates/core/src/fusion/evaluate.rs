use std::collections::HashSet;
use std::fmt::Write as _;

use rayon::prelude::*;

use super::combine::{align_to_frames, argmax_predict, fuse, FrameScores, FusionConfig};
use super::metrics::{ConfusionMatrix, MetricsReport};
use super::scores::StreamScores;
use crate::dataset::{DatasetManifest, ExpressionClass, StreamKind};
use crate::{FerError, Result};

/// One fusion configuration of the report.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub streams: Vec<StreamKind>,
    pub metrics: MetricsReport,
    /// Labeled frames left without a prediction by this configuration.
    pub unpredicted: u64,
}

impl ReportRow {
    pub fn name(&self) -> String {
        row_name(&self.streams)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub config: FusionConfig,
    pub rows: Vec<ReportRow>,
    pub labeled_frames: u64,
}

fn row_name(streams: &[StreamKind]) -> String {
    match streams {
        [StreamKind::Visual] => "Visual".into(),
        [StreamKind::Temporal] => "Temporal".into(),
        [StreamKind::Audio] => "Audio".into(),
        _ => streams
            .iter()
            .map(|s| match s {
                StreamKind::Visual => "V",
                StreamKind::Temporal => "T",
                StreamKind::Audio => "A",
            })
            .collect::<Vec<_>>()
            .join("+"),
    }
}

/// Report configurations for the given streams: each single stream, then
/// visual plus temporal, then all provided streams together.
pub fn fusion_rows(provided: &[StreamKind]) -> Vec<Vec<StreamKind>> {
    let present: Vec<StreamKind> = StreamKind::ALL.iter().copied().filter(|s| provided.contains(s)).collect();
    let mut rows: Vec<Vec<StreamKind>> = present.iter().map(|&s| vec![s]).collect();
    if present.contains(&StreamKind::Visual) && present.contains(&StreamKind::Temporal) {
        rows.push(vec![StreamKind::Visual, StreamKind::Temporal]);
    }
    if present.len() > 1 && !rows.contains(&present) {
        rows.push(present);
    }
    rows
}

/// Align, fuse, predict and score every fusion configuration over the
/// labeled frames of `manifest`.
pub fn evaluate(manifest: &DatasetManifest, streams: &[StreamScores], config: &FusionConfig) -> Result<EvaluationReport> {
    config.validate()?;
    if streams.is_empty() {
        return Err(FerError::invalid("evaluation needs at least one score file"));
    }
    let mut seen = HashSet::new();
    for s in streams {
        if !seen.insert(s.stream) {
            return Err(FerError::invalid(format!("{} scores given twice", s.stream)));
        }
        s.validate()?;
        if let Some(row) = s.rows.iter().find(|r| manifest.video(&r.video_id).is_none()) {
            return Err(FerError::Integrity(format!(
                "{} scores reference unknown video {}",
                s.stream, row.video_id
            )));
        }
    }
    let kinds: Vec<StreamKind> = streams.iter().map(|s| s.stream).collect();
    let combos = fusion_rows(&kinds);
    let combo_configs = combos
        .iter()
        .map(|combo| {
            let mut c = config.clone();
            if let [single] = combo.as_slice() {
                c.weights = [0.0; 3];
                c.weights[StreamKind::ALL.iter().position(|s| s == single).unwrap_or(0)] = 1.0;
            } else if combo.iter().all(|&s| config.weight(s) == 0.0) {
                return Err(FerError::Config(format!("all weights of {} are zero", row_name(combo))));
            }
            Ok(c)
        })
        .collect::<Result<Vec<_>>>()?;

    let per_video = manifest
        .videos
        .par_iter()
        .map(|video| {
            let aligned = streams
                .iter()
                .map(|s| Ok((s.stream, align_to_frames(s, video)?)))
                .collect::<Result<Vec<(StreamKind, FrameScores)>>>()?;
            let mut out = Vec::with_capacity(combos.len());
            for (combo, combo_config) in combos.iter().zip(&combo_configs) {
                let selected: Vec<(StreamKind, &FrameScores)> = aligned
                    .iter()
                    .filter(|(k, _)| combo.contains(k))
                    .map(|(k, s)| (*k, s))
                    .collect();
                let fused = fuse(&selected, combo_config)?;
                let mut cm = ConfusionMatrix::default();
                let mut unpredicted = 0u64;
                for frame in &video.frames {
                    if !frame.label.is_labeled() {
                        continue;
                    }
                    match fused.get(frame.frame_index as usize).copied().flatten() {
                        Some(row) => cm.add(frame.label, argmax_predict(&row))?,
                        None => unpredicted += 1,
                    }
                }
                out.push((cm, unpredicted));
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut totals = vec![(ConfusionMatrix::default(), 0u64); combos.len()];
    for video in &per_video {
        for ((cm, un), (vcm, vun)) in totals.iter_mut().zip(video) {
            cm.merge(vcm);
            *un += vun;
        }
    }
    let labeled_frames = manifest.frames().filter(|f| f.label.is_labeled()).count() as u64;
    let rows = combos
        .into_iter()
        .zip(totals)
        .map(|(streams, (cm, unpredicted))| ReportRow {
            streams,
            metrics: MetricsReport::from_confusion(&cm),
            unpredicted,
        })
        .collect();
    Ok(EvaluationReport {
        config: config.clone(),
        rows,
        labeled_frames,
    })
}

impl EvaluationReport {
    pub fn row(&self, name: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.name() == name)
    }

    /// Summary table of every configuration followed by the per-class table
    /// of the last (widest) one.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let w = self.config.weights;
        let _ = writeln!(
            out,
            "fusion rule={} weights={},{},{} labeled_frames={}",
            self.config.rule.name(),
            w[0],
            w[1],
            w[2],
            self.labeled_frames
        );
        let _ = writeln!(out, "{:<10} {:>9} {:>9} {:>11}", "streams", "macro_f1", "evaluated", "unpredicted");
        for row in &self.rows {
            let _ = writeln!(
                out,
                "{:<10} {:>9.4} {:>9} {:>11}",
                row.name(),
                row.metrics.macro_f1,
                row.metrics.total,
                row.unpredicted
            );
        }
        if let Some(last) = self.rows.last() {
            let _ = writeln!(out, "\n[{}]", last.name());
            out.push_str(&last.metrics.to_string());
        }
        out
    }

    /// One `key=value` per line; floats printed with 12 significant digits.
    pub fn render_key_values(&self) -> String {
        let mut out = String::new();
        let w = self.config.weights;
        let _ = writeln!(out, "fusion.rule={}", self.config.rule.name());
        let _ = writeln!(out, "fusion.weights={},{},{}", w[0], w[1], w[2]);
        let _ = writeln!(out, "labeled_frames={}", self.labeled_frames);
        for row in &self.rows {
            let name = row.name();
            let m = &row.metrics;
            let _ = writeln!(out, "{name}.macro_f1={:.12e}", m.macro_f1);
            let _ = writeln!(out, "{name}.evaluated={}", m.total);
            let _ = writeln!(out, "{name}.unpredicted={}", row.unpredicted);
            for (class, c) in ExpressionClass::ALL.iter().zip(&m.per_class) {
                let class = class.name();
                let _ = writeln!(out, "{name}.{class}.precision={:.12e}", c.precision);
                let _ = writeln!(out, "{name}.{class}.recall={:.12e}", c.recall);
                let _ = writeln!(out, "{name}.{class}.f1={:.12e}", c.f1);
                let _ = writeln!(out, "{name}.{class}.support={}", c.support);
            }
        }
        out
    }
}
