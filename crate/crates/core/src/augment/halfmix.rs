//! Half-mix jittering.
//!
//! A contiguous block of the input face (left/right columns or top/bottom
//! rows) is kept and the remainder is filled from a reference face, usually
//! one of a minority class. The kept block covers `⌊α·W⌋` columns or `⌊α·H⌋`
//! rows, and the label becomes `α·y + (1 − α)·y_ref`, so label weight tracks
//! kept area.

use std::collections::HashSet;

use rand::Rng;

use super::image::{ImageTensor, CHANNELS};
use crate::dataset::{ExpressionClass, NUM_CLASSES};
use crate::{FerError, Result};

/// Probability distribution over the eight classes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoftLabel([f64; NUM_CLASSES]);

impl SoftLabel {
    pub fn new(probabilities: [f64; NUM_CLASSES]) -> Result<Self> {
        if probabilities.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(FerError::invalid(format!("soft label has a negative or non-finite entry: {probabilities:?}")));
        }
        let sum: f64 = probabilities.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(FerError::invalid(format!("soft label sums to {sum}")));
        }
        Ok(SoftLabel(probabilities))
    }

    pub fn one_hot(class: ExpressionClass) -> Result<Self> {
        let i = class
            .index()
            .ok_or_else(|| FerError::invalid("cannot one-hot encode an unlabeled frame"))?;
        let mut p = [0.0; NUM_CLASSES];
        p[i] = 1.0;
        Ok(SoftLabel(p))
    }

    /// `alpha · self + (1 − alpha) · other`.
    pub fn mix(&self, other: &SoftLabel, alpha: f64) -> SoftLabel {
        let mut p = [0.0; NUM_CLASSES];
        for (i, slot) in p.iter_mut().enumerate() {
            *slot = alpha * self.0[i] + (1.0 - alpha) * other.0[i];
        }
        SoftLabel(p)
    }

    pub fn probabilities(&self) -> &[f64; NUM_CLASSES] {
        &self.0
    }

    /// Class with the most mass; ties go to the lower index.
    pub fn dominant(&self) -> ExpressionClass {
        let mut best = 0;
        for i in 1..NUM_CLASSES {
            if self.0[i] > self.0[best] {
                best = i;
            }
        }
        ExpressionClass::ALL[best]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Orientation {
    /// Split by columns: left or right part is kept.
    Vertical,
    /// Split by rows: top or bottom part is kept.
    Horizontal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KeptSide {
    /// Left or top.
    First,
    /// Right or bottom.
    Second,
}

impl Orientation {
    pub fn name(self) -> &'static str {
        match self {
            Orientation::Vertical => "vertical",
            Orientation::Horizontal => "horizontal",
        }
    }
}

impl KeptSide {
    pub fn name(self) -> &'static str {
        match self {
            KeptSide::First => "first",
            KeptSide::Second => "second",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfMixSpec {
    pub orientation: Orientation,
    pub kept_side: KeptSide,
    alpha: f64,
}

impl HalfMixSpec {
    pub const ALPHAS: [f64; 2] = [0.4, 0.6];

    pub fn new(orientation: Orientation, kept_side: KeptSide, alpha: f64) -> Result<Self> {
        if !Self::ALPHAS.contains(&alpha) {
            return Err(FerError::invalid(format!("half-mix alpha {alpha} not in {{0.4, 0.6}}")));
        }
        Ok(HalfMixSpec {
            orientation,
            kept_side,
            alpha,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Every combination of orientation, side and alpha.
    pub fn all() -> Vec<HalfMixSpec> {
        let mut specs = Vec::with_capacity(8);
        for orientation in [Orientation::Vertical, Orientation::Horizontal] {
            for kept_side in [KeptSide::First, KeptSide::Second] {
                for alpha in Self::ALPHAS {
                    specs.push(HalfMixSpec {
                        orientation,
                        kept_side,
                        alpha,
                    });
                }
            }
        }
        specs
    }
}

/// How the kept region is blended.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum MaskMode {
    /// Kept region copied from the input, the rest from the reference.
    #[default]
    Binary,
    /// Kept region is `weight · input + (1 − weight) · reference`; the rest is
    /// the reference.
    Soft { weight: f32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedSample {
    pub image: ImageTensor,
    pub label: SoftLabel,
    pub spec: HalfMixSpec,
}

/// Audit record of one half-mix application.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub input_id: String,
    pub reference_id: String,
    pub spec: HalfMixSpec,
}

impl Provenance {
    /// Tab-separated audit line: input, reference, orientation, side, alpha.
    pub fn to_line(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}",
            self.input_id,
            self.reference_id,
            self.spec.orientation.name(),
            self.spec.kept_side.name(),
            self.spec.alpha
        )
    }
}

/// Half-open row and column ranges of the kept block for an `h × w` image.
pub fn kept_extent(spec: &HalfMixSpec, h: usize, w: usize) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
    let span = |n: usize| -> std::ops::Range<usize> {
        let k = ((spec.alpha * n as f64) + 1e-9).floor() as usize;
        match spec.kept_side {
            KeptSide::First => 0..k,
            KeptSide::Second => n - k..n,
        }
    };
    match spec.orientation {
        Orientation::Vertical => (0..h, span(w)),
        Orientation::Horizontal => (span(h), 0..w),
    }
}

pub fn half_mix(
    input: (&ImageTensor, &SoftLabel),
    reference: (&ImageTensor, &SoftLabel),
    spec: &HalfMixSpec,
) -> Result<AugmentedSample> {
    half_mix_with(input, reference, spec, MaskMode::Binary)
}

pub(crate) fn half_mix_with(
    (image, label): (&ImageTensor, &SoftLabel),
    (ref_image, ref_label): (&ImageTensor, &SoftLabel),
    spec: &HalfMixSpec,
    mode: MaskMode,
) -> Result<AugmentedSample> {
    if image.dims() != ref_image.dims() {
        return Err(FerError::invalid(format!(
            "half-mix shape mismatch: {:?} vs {:?}",
            image.dims(),
            ref_image.dims()
        )));
    }
    let (h, w, _) = image.dims();
    if h < 2 || w < 2 {
        return Err(FerError::invalid(format!("half-mix needs at least 2x2 pixels, got {h}x{w}")));
    }
    let (rows, cols) = kept_extent(spec, h, w);
    let mut data = ref_image.data().to_vec();
    let src = image.data();
    for y in rows {
        let start = (y * w + cols.start) * CHANNELS;
        let end = (y * w + cols.end) * CHANNELS;
        match mode {
            MaskMode::Binary => data[start..end].copy_from_slice(&src[start..end]),
            MaskMode::Soft { weight } => {
                for (dst, &s) in data[start..end].iter_mut().zip(&src[start..end]) {
                    *dst = (weight * s + (1.0 - weight) * *dst).clamp(0.0, 1.0);
                }
            }
        }
    }
    Ok(AugmentedSample {
        image: ImageTensor::from_raw(h, w, data),
        label: label.mix(ref_label, spec.alpha),
        spec: *spec,
    })
}

/// Pick uniformly among batch positions whose class is in `minority`;
/// `None` when there is no such position.
pub fn select_reference(
    batch_classes: &[ExpressionClass],
    minority: &HashSet<ExpressionClass>,
    rng: &mut impl Rng,
) -> Option<usize> {
    let candidates: Vec<usize> = batch_classes
        .iter()
        .enumerate()
        .filter(|(_, c)| minority.contains(c))
        .map(|(i, _)| i)
        .collect();
    if candidates.is_empty() {
        None
    } else {
        Some(candidates[rng.gen_range(0..candidates.len())])
    }
}

pub fn sample_spec(rng: &mut impl Rng) -> HalfMixSpec {
    let orientation = if rng.gen_bool(0.5) {
        Orientation::Vertical
    } else {
        Orientation::Horizontal
    };
    let kept_side = if rng.gen_bool(0.5) {
        KeptSide::First
    } else {
        KeptSide::Second
    };
    let alpha = HalfMixSpec::ALPHAS[rng.gen_range(0..2)];
    HalfMixSpec {
        orientation,
        kept_side,
        alpha,
    }
}
