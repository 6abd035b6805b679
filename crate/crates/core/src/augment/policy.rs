//! Per-stream training augmentation.
//!
//! * visual: half-mix against a minority-class reference, horizontal flip, jitter;
//! * temporal: horizontal flip, random crop (resized back), jitter, with one draw
//!   shared by all frames of a shot;
//! * audio: horizontal flip and jitter on the spectrogram image.

use std::collections::HashSet;

use rand::Rng;
use rayon::prelude::*;

use super::halfmix::{half_mix_with, sample_spec, select_reference, HalfMixSpec, MaskMode, SoftLabel};
use super::image::ImageTensor;
use super::ops::{horizontal_flip, random_crop, resize_bilinear, Jitter};
use crate::dataset::{ExpressionClass, StreamKind};
use crate::model::StreamInput;
use crate::rng;
use crate::{FerError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentConfig {
    pub flip_probability: f64,
    /// `None` disables photometric jitter.
    pub jitter: Option<Jitter>,
    pub halfmix_enabled: bool,
    pub halfmix_probability: f64,
    pub mask_mode: MaskMode,
    pub minority: Vec<ExpressionClass>,
    /// Random crop side as a fraction of the input side; `None` disables cropping.
    pub crop_fraction: Option<f64>,
}

impl AugmentConfig {
    pub fn for_stream(stream: StreamKind) -> Self {
        let base = AugmentConfig {
            flip_probability: 0.5,
            jitter: Some(Jitter::default()),
            halfmix_enabled: false,
            halfmix_probability: 0.5,
            mask_mode: MaskMode::Binary,
            minority: ExpressionClass::MINORITY.to_vec(),
            crop_fraction: None,
        };
        match stream {
            StreamKind::Visual => AugmentConfig {
                halfmix_enabled: true,
                ..base
            },
            StreamKind::Temporal => AugmentConfig {
                crop_fraction: Some(0.875),
                ..base
            },
            StreamKind::Audio => base,
        }
    }

    /// No augmentation at all.
    pub fn none() -> Self {
        AugmentConfig {
            flip_probability: 0.0,
            jitter: None,
            halfmix_enabled: false,
            halfmix_probability: 0.0,
            mask_mode: MaskMode::Binary,
            minority: Vec::new(),
            crop_fraction: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("flip probability", self.flip_probability),
            ("half-mix probability", self.halfmix_probability),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(FerError::Config(format!("{name} {p} outside [0, 1]")));
            }
        }
        if let Some(j) = &self.jitter {
            if !(0.0..=1.0).contains(&j.probability) || j.brightness < 0.0 || !(0.0 < j.contrast.0 && j.contrast.0 <= j.contrast.1) {
                return Err(FerError::Config(format!("invalid jitter {j:?}")));
            }
        }
        if let Some(f) = self.crop_fraction {
            if !(f > 0.0 && f <= 1.0) {
                return Err(FerError::Config(format!("crop fraction {f} outside (0, 1]")));
            }
        }
        Ok(())
    }
}

/// One augmented training item.
#[derive(Debug, Clone, PartialEq)]
pub struct Augmented {
    pub input: StreamInput,
    pub target: SoftLabel,
    /// Batch position of the half-mix reference and the spec used.
    pub mix: Option<(usize, HalfMixSpec)>,
}

#[derive(Debug, Clone)]
pub struct StreamAugmenter {
    pub stream: StreamKind,
    pub config: AugmentConfig,
    minority: HashSet<ExpressionClass>,
}

impl StreamAugmenter {
    pub fn new(stream: StreamKind, config: AugmentConfig) -> Result<Self> {
        config.validate()?;
        let minority = config.minority.iter().copied().collect();
        Ok(StreamAugmenter {
            stream,
            config,
            minority,
        })
    }

    pub fn for_stream(stream: StreamKind) -> Self {
        Self::new(stream, AugmentConfig::for_stream(stream)).expect("default config is valid")
    }

    /// Augment a batch. Item `i` draws from its own generator derived from
    /// `seed` and `stream_path ++ [i]`, so the output does not depend on the
    /// thread count.
    pub fn augment_batch(
        &self,
        inputs: &[StreamInput],
        classes: &[ExpressionClass],
        seed: u64,
        stream_path: &[u64],
    ) -> Result<Vec<Augmented>> {
        if inputs.len() != classes.len() {
            return Err(FerError::invalid("batch inputs and classes differ in length"));
        }
        (0..inputs.len())
            .into_par_iter()
            .map(|i| {
                let mut path = stream_path.to_vec();
                path.push(i as u64);
                let mut rng = rng::derived(seed, &path);
                self.augment_item(i, inputs, classes, &mut rng)
            })
            .collect()
    }

    fn augment_item(
        &self,
        i: usize,
        inputs: &[StreamInput],
        classes: &[ExpressionClass],
        rng: &mut rng::SeededRng,
    ) -> Result<Augmented> {
        let mut target = SoftLabel::one_hot(classes[i])?;
        let mut mix = None;
        let mut input = inputs[i].clone();

        if self.config.halfmix_enabled && rng.gen_bool(self.config.halfmix_probability) {
            if let Some(r) = select_reference(classes, &self.minority, rng) {
                let spec = sample_spec(rng);
                let (StreamInput::Image(img), StreamInput::Image(ref_img)) = (&inputs[i], &inputs[r]) else {
                    return Err(FerError::invalid("half-mix applies to single-image inputs only"));
                };
                let ref_label = SoftLabel::one_hot(classes[r])?;
                let out = half_mix_with((img, &target), (ref_img, &ref_label), &spec, self.config.mask_mode)?;
                input = StreamInput::Image(out.image);
                target = out.label;
                mix = Some((r, spec));
            }
        }

        let flip = rng.gen_bool(self.config.flip_probability);
        let crop = match self.config.crop_fraction {
            Some(f) if f < 1.0 => Some((f, rng.gen::<u64>())),
            _ => None,
        };
        let jitter = self.config.jitter.map(|j| j.draw(rng));

        let transform = |img: &ImageTensor| -> Result<ImageTensor> {
            let mut out = match crop {
                Some((f, crop_seed)) => {
                    let (h, w) = (img.height(), img.width());
                    let ch = ((h as f64 * f).round() as usize).clamp(1, h);
                    let cw = ((w as f64 * f).round() as usize).clamp(1, w);
                    // same seed per frame, so every frame of a shot gets the same offset
                    let cropped = random_crop(img, ch, cw, &mut rng::seeded(crop_seed))?;
                    resize_bilinear(&cropped, h, w)?
                }
                None => img.clone(),
            };
            if flip {
                out = horizontal_flip(&out);
            }
            if let Some(draw) = &jitter {
                out = draw.apply(&out);
            }
            Ok(out)
        };

        let input = match input {
            StreamInput::Image(img) => StreamInput::Image(transform(&img)?),
            StreamInput::Shot(frames) => StreamInput::Shot(frames.iter().map(transform).collect::<Result<_>>()?),
        };
        Ok(Augmented { input, target, mix })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ExpressionClass::*;

    fn img(v: f32) -> StreamInput {
        StreamInput::Image(ImageTensor::from_fn(8, 8, |y, x, c| ((y * 8 + x + c) as f32 / 80.0 + v).min(1.0)).unwrap())
    }

    #[test]
    fn batch_is_deterministic_for_a_seed() {
        let aug = StreamAugmenter::for_stream(StreamKind::Visual);
        let inputs: Vec<_> = (0..6).map(|i| img(i as f32 * 0.05)).collect();
        let classes = [Neutral, Anger, Happiness, Fear, Other, Sadness];
        let a = aug.augment_batch(&inputs, &classes, 4, &[0, 1]).unwrap();
        let b = aug.augment_batch(&inputs, &classes, 4, &[0, 1]).unwrap();
        assert_eq!(a, b);
        let c = aug.augment_batch(&inputs, &classes, 4, &[0, 2]).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn mixed_targets_reference_minority_items() {
        let aug = StreamAugmenter::new(
            StreamKind::Visual,
            AugmentConfig {
                halfmix_probability: 1.0,
                ..AugmentConfig::for_stream(StreamKind::Visual)
            },
        )
        .unwrap();
        let inputs: Vec<_> = (0..4).map(|i| img(i as f32 * 0.1)).collect();
        let classes = [Neutral, Disgust, Happiness, Other];
        for seed in 0..20 {
            for item in aug.augment_batch(&inputs, &classes, seed, &[]).unwrap() {
                let (r, spec) = item.mix.expect("a minority reference is always available");
                assert_eq!(r, 1);
                let p = item.target.probabilities();
                assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                assert!(p[2] >= 1.0 - spec.alpha() - 1e-12, "{p:?} {spec:?}");
            }
        }
    }

    #[test]
    fn no_minority_means_no_mix() {
        let aug = StreamAugmenter::for_stream(StreamKind::Visual);
        let inputs: Vec<_> = (0..3).map(|i| img(i as f32 * 0.1)).collect();
        let out = aug.augment_batch(&inputs, &[Neutral, Other, Sadness], 1, &[]).unwrap();
        assert!(out.iter().all(|a| a.mix.is_none()));
    }

    #[test]
    fn shots_share_one_draw() {
        let aug = StreamAugmenter::for_stream(StreamKind::Temporal);
        let frame = match img(0.1) {
            StreamInput::Image(i) => i,
            _ => unreachable!(),
        };
        let shot = StreamInput::Shot(vec![frame; 16]);
        for seed in 0..10 {
            let out = aug.augment_batch(std::slice::from_ref(&shot), &[Anger], seed, &[]).unwrap();
            let StreamInput::Shot(frames) = &out[0].input else { panic!() };
            assert!(frames.iter().all(|f| f == &frames[0]));
            assert_eq!(frames[0].dims(), (8, 8, 3));
            assert!(out[0].mix.is_none());
        }
    }

    #[test]
    fn unlabeled_items_are_rejected() {
        let aug = StreamAugmenter::for_stream(StreamKind::Audio);
        assert!(aug.augment_batch(&[img(0.0)], &[Unlabeled], 0, &[]).is_err());
    }
}
