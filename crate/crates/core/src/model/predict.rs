use rayon::prelude::*;

use super::backbone::{featurize, BackboneSpec};
use super::head::LinearHead;
use super::loss::softmax;
use super::StreamInput;
use crate::dataset::{StreamKind, Window, NUM_CLASSES};
use crate::fusion::{ScoreRow, StreamScores};
use crate::Result;

/// Logits of one input: `W · backbone(input) + b`.
pub fn forward(backbone: &BackboneSpec, head: &LinearHead, input: &StreamInput) -> Result<[f64; NUM_CLASSES]> {
    head.logits(&featurize(backbone, input)?)
}

/// Softmax scores for every window, in window order. `load` produces the
/// input of a window and may be called from several threads.
pub fn predict<F>(
    stream: StreamKind,
    backbone: &BackboneSpec,
    head: &LinearHead,
    windows: &[Window],
    load: F,
) -> Result<StreamScores>
where
    F: Fn(&Window) -> Result<StreamInput> + Sync,
{
    let rows = windows
        .par_iter()
        .map(|w| {
            let logits = forward(backbone, head, &load(w)?)?;
            Ok(ScoreRow {
                video_id: w.video_id.clone(),
                start_frame: w.start_frame,
                end_frame: w.end_frame,
                scores: softmax(&logits),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StreamScores { stream, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::augment::ImageTensor;
    use crate::model::BackboneKind;

    fn spec() -> BackboneSpec {
        BackboneSpec {
            kind: BackboneKind::FlattenMean,
            input_size: (8, 8),
        }
    }

    #[test]
    fn zero_image_and_zero_head_give_zero_logits() {
        let img = StreamInput::Image(ImageTensor::filled(8, 8, 0.0).unwrap());
        assert_eq!(forward(&spec(), &LinearHead::zeros(192), &img).unwrap(), [0.0; 8]);
    }

    #[test]
    fn forward_is_linear_without_bias() {
        let mut head = LinearHead::init(192, 4);
        let n = head.params().len();
        for b in &mut head.params_mut()[n - 8..] {
            *b = 0.0;
        }
        let img = ImageTensor::from_fn(8, 8, |y, x, c| ((y * 3 + x + c) % 9) as f32 / 10.0).unwrap();
        let scaled = ImageTensor::from_fn(8, 8, |y, x, c| 0.5 * img.get(y, x, c)).unwrap();
        let a = forward(&spec(), &head, &StreamInput::Image(img)).unwrap();
        let b = forward(&spec(), &head, &StreamInput::Image(scaled)).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((0.5 * x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn rows_are_distributions_in_window_order() {
        let windows: Vec<Window> = (0..90)
            .map(|i| Window {
                video_id: "v".into(),
                start_frame: i,
                end_frame: i + 1,
                frames: vec![i],
            })
            .collect();
        let head = LinearHead::init(192, 1);
        let scores = predict(StreamKind::Visual, &spec(), &head, &windows, |w| {
            Ok(StreamInput::Image(ImageTensor::filled(8, 8, w.start_frame as f32 / 100.0)?))
        })
        .unwrap();
        assert_eq!(scores.rows.len(), 90);
        for (i, row) in scores.rows.iter().enumerate() {
            assert_eq!(row.start_frame, i as u32);
            assert!((row.scores.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }
}
