//! Minimal reverse-mode differentiable network stack and the dual-task
//! training procedure.
//!
//! The stack is deliberately small: batched dense tensors of `f64`, a
//! handful of layer kinds with hand-derived gradients, a fused
//! softmax-cross-entropy, Adam, and a cosine learning-rate schedule.
//! Everything is deterministic given a seed.

pub mod layer;
pub mod loss;
pub mod metrics;
pub mod model;
pub mod tensor;
pub mod train;

pub use layer::{layer_forward_backward, LayerKind, LayerParams};
pub use loss::{cross_entropy_loss, softmax_cross_entropy};
pub use metrics::{confusion_matrix, evaluate, metrics_from_confusion, EvalReport};
pub use model::{
    forward_csi, forward_iq, predict, read_parameters, write_parameters, InputKind, ModelManifest,
    ModelSpec, ParameterStore,
};
pub use tensor::Tensor;
pub use train::{
    aux_task_gradients, cosine_lr, main_task_gradients, train_dual, train_single, EpochStats,
    LrSchedule, TrainConfig, TrainOutcome, TrainSet,
};
