//! Two parallel 1-D CNNs (embeddings, POS one-hots) feeding a (bi)LSTM,
//! additive attention, a dense head that also sees the targeted features,
//! and a sigmoid output trained with class-weighted cross-entropy.

mod config;
mod forward;
mod io;
mod loss;
mod params;
mod train;

pub use config::{ModelConfig, Variant};
pub use forward::{
    build_graph, forward, instance_gradients, instance_loss, loss_node, ForwardOutput, Graph, Mode, NamedGrads,
};
pub use io::{from_bytes, load, save, to_bytes, FORMAT_VERSION, MAGIC};
pub use loss::{compute_class_weights, weighted_bce, ClassWeights, BCE_EPS};
pub use params::ModelParams;
pub use train::{classify, fit, mean_loss, predict, training_weights, EpochRecord, TrainingLog};

use std::path::PathBuf;

use thiserror::Error;

use crate::tensor::TensorError;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("class weights need both classes present (AD {n_ad}, CT {n_ct})")]
    ZeroClass { n_ad: usize, n_ct: usize },
    #[error("training diverged (non-finite loss) in epoch {epoch}")]
    Diverged { epoch: usize },
    #[error("training and validation sets must be non-empty")]
    EmptyData,
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
    #[error("parameter {0} missing for this config")]
    MissingParameter(String),
    #[error("model file version {found}, expected {expected}")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("corrupt model file: {0}")]
    CorruptFile(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
