//! Model representation, local training, loss evaluation, and weighted
//! federated aggregation.
//!
//! The model is a multinomial logistic regression (single linear layer with
//! softmax): convex, self-contained, and cheap enough to verify against
//! brute-force references. Parameters live in a flat [`ParameterVector`]
//! with class-major weights followed by one bias per class, so for
//! `f` features and `C` classes the dimension is `C*f + C`.

mod aggregate;
mod data;
mod model;
mod params;
mod train;
mod update;

pub use aggregate::fed_avg;
pub use data::{ClientId, LocalDataset};
pub use model::{client_loss, cross_entropy_gradient, evaluate, global_loss};
pub use params::ParameterVector;
pub use train::{local_train, TrainingConfig};
pub use update::{AcceptanceState, ClientUpdate};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FlError {
    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: String },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("non-finite value in {context}")]
    NonFinite { context: String },
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("empty update list")]
    EmptyUpdateList,
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("invalid update: {0}")]
    InvalidUpdate(String),
}
