use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::dataset::{ExpressionClass, StreamKind, NUM_CLASSES};
use crate::{FerError, Result};

pub const SCORE_HEADER: &str = "video_id,start_frame,end_frame,neutral,anger,disgust,fear,happiness,sadness,surprise,other";

const ROW_SUM_TOLERANCE: f64 = 1e-6;

/// Scores of one window `[start_frame, end_frame)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub video_id: String,
    pub start_frame: u32,
    pub end_frame: u32,
    pub scores: [f64; NUM_CLASSES],
}

#[derive(Debug, Clone, PartialEq)]
pub struct StreamScores {
    pub stream: StreamKind,
    pub rows: Vec<ScoreRow>,
}

impl ScoreRow {
    fn check(&self) -> std::result::Result<(), String> {
        if self.start_frame >= self.end_frame {
            return Err(format!("empty window [{}, {})", self.start_frame, self.end_frame));
        }
        if self.scores.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err("scores must be finite and non-negative".into());
        }
        let sum: f64 = self.scores.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
            return Err(format!("scores sum to {sum}, not 1"));
        }
        Ok(())
    }
}

impl StreamScores {
    /// Rows are valid distributions; windows of each video are sorted and
    /// disjoint.
    pub fn validate(&self) -> Result<()> {
        let mut last_end: HashMap<&str, u32> = HashMap::new();
        for (i, row) in self.rows.iter().enumerate() {
            row.check()
                .map_err(|m| FerError::Integrity(format!("{} score row {}: {m}", self.stream, i + 1)))?;
            if let Some(&end) = last_end.get(row.video_id.as_str()) {
                if row.start_frame < end {
                    return Err(FerError::Integrity(format!(
                        "{} score row {}: window [{}, {}) of video {} overlaps or precedes an earlier window",
                        self.stream,
                        i + 1,
                        row.start_frame,
                        row.end_frame,
                        row.video_id
                    )));
                }
            }
            last_end.insert(&row.video_id, row.end_frame);
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 + self.rows.len() * 160);
        out.push_str(SCORE_HEADER);
        out.push('\n');
        for row in &self.rows {
            let _ = write!(out, "{},{},{}", row.video_id, row.start_frame, row.end_frame);
            for s in row.scores {
                let _ = write!(out, ",{s:.9e}");
            }
            out.push('\n');
        }
        out
    }

    /// Parse a score CSV. Line numbers in errors count the header as line 1.
    pub fn from_csv(text: &str, stream: StreamKind) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim_end() == SCORE_HEADER => {}
            _ => {
                return Err(FerError::Parse {
                    line: 1,
                    message: format!("expected header `{SCORE_HEADER}`"),
                })
            }
        }
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let line_no = i + 2;
            if line.trim().is_empty() {
                continue;
            }
            let parse_err = |message: String| FerError::Parse { line: line_no, message };
            let fields: Vec<&str> = line.trim_end().split(',').collect();
            if fields.len() != 3 + NUM_CLASSES {
                return Err(parse_err(format!("expected {} fields, found {}", 3 + NUM_CLASSES, fields.len())));
            }
            if fields[0].is_empty() {
                return Err(parse_err("empty video_id".into()));
            }
            let frame = |s: &str, name: &str| {
                s.parse::<u32>()
                    .map_err(|_| parse_err(format!("{name} `{s}` is not a frame index")))
            };
            let mut scores = [0.0; NUM_CLASSES];
            for (k, (slot, field)) in scores.iter_mut().zip(&fields[3..]).enumerate() {
                *slot = field.parse::<f64>().map_err(|_| {
                    parse_err(format!(
                        "{} score `{field}` is not a number",
                        ExpressionClass::ALL[k].name()
                    ))
                })?;
            }
            let row = ScoreRow {
                video_id: fields[0].to_string(),
                start_frame: frame(fields[1], "start_frame")?,
                end_frame: frame(fields[2], "end_frame")?,
                scores,
            };
            row.check().map_err(parse_err)?;
            rows.push(row);
        }
        let scores = StreamScores { stream, rows };
        scores.validate()?;
        Ok(scores)
    }
}

pub fn write_scores(path: &Path, scores: &StreamScores) -> Result<()> {
    scores.validate()?;
    std::fs::write(path, scores.to_csv()).map_err(|e| FerError::io(path, e))
}

pub fn read_scores(path: &Path, stream: StreamKind) -> Result<StreamScores> {
    let text = std::fs::read_to_string(path).map_err(|e| FerError::io(path, e))?;
    StreamScores::from_csv(&text, stream)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(video: &str, start: u32, end: u32, top: usize) -> ScoreRow {
        let mut scores = [0.02; NUM_CLASSES];
        scores[top] = 1.0 - 0.02 * 7.0;
        ScoreRow {
            video_id: video.into(),
            start_frame: start,
            end_frame: end,
            scores,
        }
    }

    #[test]
    fn csv_round_trip_is_exact_at_nine_digits() {
        let mut r = row("a", 0, 30, 3);
        r.scores = [0.1, 0.2, 0.05, 0.05, 0.3, 0.1, 0.1, 0.1];
        let s = StreamScores {
            stream: StreamKind::Temporal,
            rows: vec![r, row("a", 30, 60, 1), row("b", 0, 30, 0)],
        };
        let text = s.to_csv();
        assert!(text.starts_with(SCORE_HEADER));
        let back = StreamScores::from_csv(&text, StreamKind::Temporal).unwrap();
        assert_eq!(back.to_csv(), text);
        for (a, b) in back.rows.iter().zip(&s.rows) {
            for (x, y) in a.scores.iter().zip(&b.scores) {
                assert!((x - y).abs() <= 1e-9 * y.abs().max(1e-300));
            }
        }
    }

    #[test]
    fn malformed_row_names_its_line() {
        let text = format!("{SCORE_HEADER}\nv,0,1,1,0,0,0,0,0,0,0\nv,1,2,0.5,x,0,0,0,0,0,0.5\n");
        match StreamScores::from_csv(&text, StreamKind::Visual) {
            Err(FerError::Parse { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains("anger"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
        let text = format!("{SCORE_HEADER}\nv,0,1,1,0,0\n");
        assert!(matches!(
            StreamScores::from_csv(&text, StreamKind::Visual),
            Err(FerError::Parse { line: 2, .. })
        ));
        let text = format!("{SCORE_HEADER}\nv,0,1,0.5,0,0,0,0,0,0,0\n");
        assert!(matches!(
            StreamScores::from_csv(&text, StreamKind::Visual),
            Err(FerError::Parse { line: 2, .. })
        ));
        assert!(matches!(
            StreamScores::from_csv("video,start\n", StreamKind::Visual),
            Err(FerError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn overlapping_windows_are_rejected() {
        let s = StreamScores {
            stream: StreamKind::Audio,
            rows: vec![row("a", 0, 60, 0), row("a", 30, 90, 0)],
        };
        assert!(matches!(s.validate(), Err(FerError::Integrity(_))));
        let s = StreamScores {
            stream: StreamKind::Audio,
            rows: vec![row("a", 0, 60, 0), row("b", 0, 60, 0), row("a", 60, 120, 0)],
        };
        assert!(s.validate().is_ok());
    }
}
