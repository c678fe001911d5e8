//! Triplet-loss training of the grounding model.

mod backward;
mod optim;
mod trainer;
mod triplet;

pub use backward::GradientSet;
pub use optim::{sgd_step, Adam};
pub use trainer::{
    evaluate_retrieval, train, OptimizerKind, TraceRow, TrainConfig, TrainFailure, TrainOutcome, DEFAULT_CLIP_NORM,
    DEFAULT_LEARNING_RATE, DEFAULT_MARGIN,
};
pub use triplet::{
    batch_gradients, mine_semi_hard, retrieval_top1, similarity_matrix, triplet_loss,
    BatchOutcome, TripletBatch,
};
