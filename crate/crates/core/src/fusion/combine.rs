use std::str::FromStr;

use super::scores::StreamScores;
use crate::dataset::{ExpressionClass, StreamKind, VideoRecord, NUM_CLASSES};
use crate::{FerError, Result};

/// Per-frame scores of one stream over a video timeline; `None` where no
/// window covers the frame.
pub type FrameScores = Vec<Option<[f64; NUM_CLASSES]>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FusionRule {
    /// Weighted arithmetic mean of the softmax scores.
    #[default]
    WeightedMean,
    /// Weighted mean of log-scores, renormalized. Equal to a softmax over the
    /// weighted mean of logits.
    LogMean,
    /// Each stream votes its argmax with its weight.
    MajorityVote,
}

impl FusionRule {
    pub fn name(self) -> &'static str {
        match self {
            FusionRule::WeightedMean => "mean",
            FusionRule::LogMean => "log-mean",
            FusionRule::MajorityVote => "vote",
        }
    }
}

impl FromStr for FusionRule {
    type Err = FerError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(FusionRule::WeightedMean),
            "log-mean" | "logit-mean" => Ok(FusionRule::LogMean),
            "vote" => Ok(FusionRule::MajorityVote),
            _ => Err(FerError::Config(format!("unknown fusion rule `{s}` (mean, log-mean, vote)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusionConfig {
    /// Visual, temporal, audio.
    pub weights: [f64; 3],
    pub rule: FusionRule,
}

impl Default for FusionConfig {
    fn default() -> Self {
        FusionConfig {
            weights: [1.0; 3],
            rule: FusionRule::WeightedMean,
        }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(FerError::Config(format!("fusion weights {:?} must be finite and non-negative", self.weights)));
        }
        if self.weights.iter().all(|w| *w == 0.0) {
            return Err(FerError::Config("at least one fusion weight must be positive".into()));
        }
        Ok(())
    }

    pub fn weight(&self, stream: StreamKind) -> f64 {
        self.weights[stream_slot(stream)]
    }
}

fn stream_slot(stream: StreamKind) -> usize {
    match stream {
        StreamKind::Visual => 0,
        StreamKind::Temporal => 1,
        StreamKind::Audio => 2,
    }
}

/// Broadcast each window's row to the frames it covers. Rows of other videos
/// are ignored.
pub fn align_to_frames(scores: &StreamScores, video: &VideoRecord) -> Result<FrameScores> {
    let n = video.timeline_len();
    let mut out: FrameScores = vec![None; n as usize];
    for row in scores.rows.iter().filter(|r| r.video_id == video.video_id) {
        if row.start_frame >= row.end_frame || row.end_frame > n {
            return Err(FerError::Integrity(format!(
                "{} window [{}, {}) lies outside video {} ({} frames)",
                scores.stream, row.start_frame, row.end_frame, video.video_id, n
            )));
        }
        for f in row.start_frame..row.end_frame {
            let slot = &mut out[f as usize];
            if slot.is_some() {
                return Err(FerError::Integrity(format!(
                    "{} windows overlap at frame {f} of video {}",
                    scores.stream, video.video_id
                )));
            }
            *slot = Some(row.scores);
        }
    }
    Ok(out)
}

/// Fuse aligned per-frame scores of several streams. A frame where no
/// positively weighted stream is present stays `None` (unpredicted).
pub fn fuse(streams: &[(StreamKind, &FrameScores)], config: &FusionConfig) -> Result<FrameScores> {
    config.validate()?;
    let Some(n) = streams.first().map(|(_, s)| s.len()) else {
        return Err(FerError::invalid("fusion needs at least one stream"));
    };
    if streams.iter().any(|(_, s)| s.len() != n) {
        return Err(FerError::Integrity("aligned streams differ in timeline length".into()));
    }
    let mut out = Vec::with_capacity(n);
    let mut present: Vec<(f64, &[f64; NUM_CLASSES])> = Vec::with_capacity(streams.len());
    for f in 0..n {
        present.clear();
        for (kind, s) in streams {
            let w = config.weight(*kind);
            if let (Some(row), true) = (&s[f], w > 0.0) {
                present.push((w, row));
            }
        }
        out.push(if present.is_empty() { None } else { Some(combine(&present, config.rule)) });
    }
    Ok(out)
}

fn combine(present: &[(f64, &[f64; NUM_CLASSES])], rule: FusionRule) -> [f64; NUM_CLASSES] {
    let total: f64 = present.iter().map(|(w, _)| w).sum();
    let mut fused = [0.0; NUM_CLASSES];
    match rule {
        FusionRule::WeightedMean => {
            for (w, row) in present {
                for (acc, s) in fused.iter_mut().zip(row.iter()) {
                    *acc += w * s;
                }
            }
            for v in &mut fused {
                *v /= total;
            }
        }
        FusionRule::LogMean => {
            for (w, row) in present {
                for (acc, s) in fused.iter_mut().zip(row.iter()) {
                    *acc += w * s.max(f64::MIN_POSITIVE).ln();
                }
            }
            let logits = fused.map(|v| v / total);
            fused = crate::model::softmax(&logits);
        }
        FusionRule::MajorityVote => {
            for (w, row) in present {
                fused[argmax_index(row)] += w / total;
            }
        }
    }
    fused
}

fn argmax_index(row: &[f64; NUM_CLASSES]) -> usize {
    let mut best = 0;
    for k in 1..NUM_CLASSES {
        if row[k] > row[best] {
            best = k;
        }
    }
    best
}

/// Class with the largest score; ties go to the lowest class index.
pub fn argmax_predict(row: &[f64; NUM_CLASSES]) -> ExpressionClass {
    ExpressionClass::ALL[argmax_index(row)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{FrameRate, FrameRecord};
    use crate::fusion::ScoreRow;
    use proptest::prelude::*;

    fn video(n: u32) -> VideoRecord {
        VideoRecord {
            video_id: "v".into(),
            fps: FrameRate::DEFAULT,
            frames: (0..n)
                .map(|i| FrameRecord {
                    video_id: "v".into(),
                    frame_index: i,
                    image_path: format!("v/{i:05}.jpg"),
                    label: ExpressionClass::Neutral,
                })
                .collect(),
            audio_path: None,
            audio_sample_rate: None,
        }
    }

    fn onehot(k: usize) -> [f64; NUM_CLASSES] {
        let mut r = [0.0; NUM_CLASSES];
        r[k] = 1.0;
        r
    }

    fn windows(stream: StreamKind, bounds: &[(u32, u32)]) -> StreamScores {
        StreamScores {
            stream,
            rows: bounds
                .iter()
                .enumerate()
                .map(|(i, &(s, e))| ScoreRow {
                    video_id: "v".into(),
                    start_frame: s,
                    end_frame: e,
                    scores: onehot(i % NUM_CLASSES),
                })
                .collect(),
        }
    }

    #[test]
    fn per_frame_windows_align_to_identity() {
        let bounds: Vec<(u32, u32)> = (0..20).map(|i| (i, i + 1)).collect();
        let aligned = align_to_frames(&windows(StreamKind::Visual, &bounds), &video(20)).unwrap();
        for (i, a) in aligned.iter().enumerate() {
            assert_eq!(*a, Some(onehot(i % NUM_CLASSES)));
        }
    }

    #[test]
    fn audio_window_broadcasts_and_leaves_tail_absent() {
        let aligned = align_to_frames(&windows(StreamKind::Audio, &[(0, 60)]), &video(75)).unwrap();
        assert!(aligned[..60].iter().all(|a| *a == Some(onehot(0))));
        assert!(aligned[60..].iter().all(Option::is_none));
    }

    #[test]
    fn temporal_windows_cover_every_frame_once() {
        let aligned = align_to_frames(&windows(StreamKind::Temporal, &[(0, 30), (30, 60), (60, 90)]), &video(90)).unwrap();
        assert!(aligned.iter().all(Option::is_some));
        assert_eq!(aligned[29], Some(onehot(0)));
        assert_eq!(aligned[30], Some(onehot(1)));
    }

    #[test]
    fn overlap_and_out_of_range_are_integrity_errors() {
        let overlapping = windows(StreamKind::Audio, &[(0, 60), (30, 90)]);
        assert!(matches!(align_to_frames(&overlapping, &video(90)), Err(FerError::Integrity(_))));
        let beyond = windows(StreamKind::Audio, &[(0, 100)]);
        assert!(matches!(align_to_frames(&beyond, &video(90)), Err(FerError::Integrity(_))));
    }

    #[test]
    fn two_stream_mean_matches_hand_sum() {
        let mut a = [0.0; NUM_CLASSES];
        let mut b = [0.0; NUM_CLASSES];
        a[..2].copy_from_slice(&[0.8, 0.2]);
        b[..2].copy_from_slice(&[0.2, 0.8]);
        let (va, vb): (FrameScores, FrameScores) = (vec![Some(a)], vec![Some(b)]);
        let absent: FrameScores = vec![None];
        let fused = fuse(
            &[(StreamKind::Visual, &va), (StreamKind::Temporal, &vb), (StreamKind::Audio, &absent)],
            &FusionConfig::default(),
        )
        .unwrap();
        let mut want = [0.0; NUM_CLASSES];
        want[0] = (0.8 + 0.2) / 2.0;
        want[1] = (0.2 + 0.8) / 2.0;
        assert_eq!(fused[0], Some(want));
    }

    #[test]
    fn single_weight_selects_that_stream() {
        let v: FrameScores = vec![Some([0.3, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1]), None];
        let t: FrameScores = vec![Some(onehot(4)), Some(onehot(4))];
        let config = FusionConfig {
            weights: [1.0, 0.0, 0.0],
            ..FusionConfig::default()
        };
        let fused = fuse(&[(StreamKind::Visual, &v), (StreamKind::Temporal, &t)], &config).unwrap();
        assert_eq!(fused[0], v[0]);
        assert_eq!(fused[1], None);
    }

    #[test]
    fn tie_rules() {
        let mut tie = [0.0; NUM_CLASSES];
        tie[0] = 0.5;
        tie[7] = 0.5;
        assert_eq!(argmax_predict(&tie), ExpressionClass::Neutral);
        assert_eq!(argmax_predict(&[0.125; NUM_CLASSES]), ExpressionClass::Neutral);
        assert_eq!(argmax_predict(&onehot(6)), ExpressionClass::Surprise);
    }

    #[test]
    fn config_needs_a_positive_weight() {
        assert!(FusionConfig { weights: [0.0; 3], ..FusionConfig::default() }.validate().is_err());
        assert!(FusionConfig { weights: [-1.0, 1.0, 1.0], ..FusionConfig::default() }.validate().is_err());
        assert_eq!("vote".parse::<FusionRule>().unwrap(), FusionRule::MajorityVote);
    }

    fn distribution() -> impl Strategy<Value = [f64; NUM_CLASSES]> {
        prop::array::uniform8(0.0f64..1.0).prop_filter_map("non-zero", |raw| {
            let s: f64 = raw.iter().sum();
            (s > 1e-3).then(|| raw.map(|v| v / s))
        })
    }

    proptest! {
        #[test]
        fn identical_streams_fuse_to_themselves(
            row in distribution(),
            w in prop::array::uniform3(0.01f64..5.0),
            rule in prop::sample::select(vec![FusionRule::WeightedMean, FusionRule::LogMean]),
        ) {
            let s: FrameScores = vec![Some(row)];
            let config = FusionConfig { weights: w, rule };
            let fused = fuse(
                &[(StreamKind::Visual, &s), (StreamKind::Temporal, &s), (StreamKind::Audio, &s)],
                &config,
            ).unwrap()[0].unwrap();
            for (a, b) in fused.iter().zip(&row) {
                prop_assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
            }
        }

        #[test]
        fn scaling_weights_keeps_decisions(
            rows in prop::collection::vec(prop::array::uniform3(distribution()), 1..20),
            w in prop::array::uniform3(0.0f64..3.0),
            c in 0.01f64..100.0,
        ) {
            prop_assume!(w.iter().any(|x| *x > 0.0));
            let per_stream: Vec<FrameScores> = (0..3).map(|s| rows.iter().map(|r| Some(r[s])).collect()).collect();
            let streams: Vec<(StreamKind, &FrameScores)> = StreamKind::ALL.iter().copied().zip(per_stream.iter()).collect();
            let base = FusionConfig { weights: w, rule: FusionRule::WeightedMean };
            let scaled = FusionConfig { weights: w.map(|x| x * c), rule: FusionRule::WeightedMean };
            let a = fuse(&streams, &base).unwrap();
            let b = fuse(&streams, &scaled).unwrap();
            for (x, y) in a.iter().zip(&b) {
                let (x, y) = (x.unwrap(), y.unwrap());
                prop_assert!((x.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                prop_assert_eq!(argmax_predict(&x), argmax_predict(&y));
            }
        }
    }
}
