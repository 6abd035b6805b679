use super::ExpressionClass;
use crate::{FerError, Result};

/// Header line written by [`render_annotation_file`].
pub const ANNOTATION_HEADER: &str = "Neutral,Anger,Disgust,Fear,Happiness,Sadness,Surprise,Other";

/// Parse a per-frame annotation file: one header line naming the eight
/// classes, then one integer in `{-1, 0..=7}` per frame.
///
/// The returned length is whatever the file holds; `expected_frame_count` is
/// only used to warn about a mismatch. See [`fit_labels`].
pub fn parse_annotation_file(text: &str, expected_frame_count: usize) -> Result<Vec<ExpressionClass>> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| FerError::Parse {
        line: 1,
        message: "missing header line".into(),
    })?;
    let names = header.trim().split(',').filter(|s| !s.trim().is_empty()).count();
    if names != 8 {
        return Err(FerError::Parse {
            line: 1,
            message: format!("header must name 8 classes, found {names}"),
        });
    }

    let labels = lines
        .enumerate()
        .map(|(i, raw)| {
            let line = i + 2;
            let value: i64 = raw.trim().parse().map_err(|_| FerError::Parse {
                line,
                message: format!("expected an integer label, found `{}`", raw.trim()),
            })?;
            ExpressionClass::from_code(value).ok_or_else(|| FerError::Parse {
                line,
                message: format!("label {value} outside {{-1, 0..7}}"),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    if labels.len() != expected_frame_count {
        log::warn!(
            "annotation holds {} labels for {} frames",
            labels.len(),
            expected_frame_count
        );
    }
    Ok(labels)
}

pub fn render_annotation_file(labels: &[ExpressionClass]) -> String {
    let mut out = String::with_capacity(ANNOTATION_HEADER.len() + 3 * labels.len() + 1);
    out.push_str(ANNOTATION_HEADER);
    out.push('\n');
    for label in labels {
        out.push_str(&label.code().to_string());
        out.push('\n');
    }
    out
}

/// Truncate or pad `labels` with `Unlabeled` to exactly `frame_count` entries.
/// Returns true when the length had to change.
pub fn fit_labels(labels: &mut Vec<ExpressionClass>, frame_count: usize) -> bool {
    let changed = labels.len() != frame_count;
    labels.resize(frame_count, ExpressionClass::Unlabeled);
    changed
}

#[cfg(test)]
mod tests {
    use super::*;
    use ExpressionClass::*;

    fn with_header(body: &str) -> String {
        format!("{ANNOTATION_HEADER}\n{body}")
    }

    #[test]
    fn maps_alphabet() {
        assert_eq!(
            parse_annotation_file(&with_header("0\n4\n-1"), 3).unwrap(),
            vec![Neutral, Happiness, Unlabeled]
        );
        assert_eq!(parse_annotation_file(&with_header("7"), 1).unwrap(), vec![Other]);
    }

    #[test]
    fn rejects_out_of_range_with_line_number() {
        match parse_annotation_file(&with_header("8"), 1) {
            Err(FerError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        match parse_annotation_file(&with_header("1\n2\nx"), 3) {
            Err(FerError::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_header() {
        assert!(matches!(
            parse_annotation_file("Neutral,Anger\n0", 1),
            Err(FerError::Parse { line: 1, .. })
        ));
        assert!(parse_annotation_file("", 0).is_err());
    }

    #[test]
    fn length_mismatch_is_returned_as_is() {
        let labels = parse_annotation_file(&with_header("1\n2"), 5).unwrap();
        assert_eq!(labels.len(), 2);
        let mut fitted = labels.clone();
        assert!(fit_labels(&mut fitted, 4));
        assert_eq!(fitted, vec![Anger, Disgust, Unlabeled, Unlabeled]);
        assert!(fit_labels(&mut fitted, 1));
        assert_eq!(fitted, vec![Anger]);
    }

    proptest::proptest! {
        #[test]
        fn render_then_parse_is_identity(codes in proptest::collection::vec(-1i64..=7, 0..200)) {
            let labels: Vec<_> = codes.iter().map(|&c| ExpressionClass::from_code(c).unwrap()).collect();
            let parsed = parse_annotation_file(&render_annotation_file(&labels), labels.len()).unwrap();
            proptest::prop_assert_eq!(parsed, labels);
        }
    }
}
