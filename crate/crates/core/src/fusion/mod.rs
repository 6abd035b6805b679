//! Score alignment, late fusion and the per-class / macro F1 metric.

mod combine;
mod evaluate;
mod metrics;
mod scores;

pub use combine::{align_to_frames, argmax_predict, fuse, FrameScores, FusionConfig, FusionRule};
pub use evaluate::{evaluate, fusion_rows, EvaluationReport, ReportRow};
pub use metrics::{confusion, f1_per_class, macro_f1, ClassMetrics, ConfusionMatrix, MetricsReport};
pub use scores::{read_scores, write_scores, ScoreRow, StreamScores, SCORE_HEADER};
