//! Image tensors, the geometric/photometric kernels every stream uses, and
//! half-mix jittering for the visual stream.

mod halfmix;
mod image;
mod ops;
mod policy;

pub use halfmix::{
    half_mix, kept_extent, sample_spec, select_reference, AugmentedSample, HalfMixSpec, KeptSide, MaskMode,
    Orientation, Provenance, SoftLabel,
};
pub use self::image::ImageTensor;
pub use ops::{adjust_brightness, adjust_contrast, crop, horizontal_flip, random_crop, resize_bilinear, Jitter};
pub use policy::{AugmentConfig, Augmented, StreamAugmenter};
