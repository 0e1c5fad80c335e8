//! Transcript-based dementia classification.
//!
//! Pipeline: CHAT transcripts ([`chat`]) are reduced to participant speech,
//! tokenized and POS-tagged ([`text`]), encoded with word embeddings and
//! targeted lexical/demographic features ([`features`], [`encode`]), and
//! classified by a CNN → (bi)LSTM → attention → dense network ([`model`])
//! built on a small reverse-mode autodiff engine ([`tensor`]). The
//! [`eval`] module implements splitting, metrics, the six-variant
//! comparison and the feature ablation; [`synth`] generates labeled
//! synthetic corpora.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the 64-bit instantiation used by the command-line tool.

pub mod chat;
pub mod encode;
pub mod eval;
pub mod features;
pub mod model;
pub mod scalar;
pub mod synth;
pub mod tensor;
pub mod text;

pub use chat::{Corpus, Demographics, Gender, Label, SpeakerCode, TranscriptRecord, Utterance};
pub use scalar::Scalar;

pub type Tensor64 = tensor::Tensor<f64>;
pub type Tensor32 = tensor::Tensor<f32>;
pub type Tape64 = tensor::Tape<f64>;
pub type ModelParams64 = model::ModelParams<f64>;
pub type ModelParams32 = model::ModelParams<f32>;
pub type EncodedInstance64 = encode::EncodedInstance<f64>;
pub type EncodedInstance32 = encode::EncodedInstance<f32>;
pub type EmbeddingTable64 = features::EmbeddingTable<f64>;
pub type Encoder64 = encode::Encoder<f64>;
