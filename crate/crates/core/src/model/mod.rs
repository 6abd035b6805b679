//! Stand-in backbones, the trainable linear head, soft cross-entropy, SGD
//! with momentum and the multi-step schedule, training and prediction.

mod backbone;
mod head;
mod loss;
mod optim;
mod predict;
mod train;

use crate::augment::ImageTensor;

pub use backbone::{featurize, BackboneKind, BackboneSpec, PATCH_GRID};
pub use head::{read_checkpoint, write_checkpoint, HeadGradient, LinearHead, CHECKPOINT_MAGIC};
pub use loss::{cross_entropy, grad_soft_cross_entropy, softmax, soft_cross_entropy};
pub use optim::{lr_schedule, sgd_momentum_step};
pub use predict::{forward, predict};
pub use train::{batch_loss_and_gradient, train, EpochRecord, TrainConfig, TrainHistory, TrainingSet};

/// What one stream feeds its backbone for a single window.
#[derive(Debug, Clone, PartialEq)]
pub enum StreamInput {
    /// A face crop (visual) or a spectrogram image (audio).
    Image(ImageTensor),
    /// The frames of a temporal shot.
    Shot(Vec<ImageTensor>),
}
