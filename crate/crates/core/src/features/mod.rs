//! Word embeddings, scalar lexicons and the 7-slot targeted feature vector
//! (4 psycholinguistic means, sentiment mean, age, gender).

mod embeddings;
mod lexicon;

pub use embeddings::{embed, load_embeddings, parse_embeddings, EmbeddingTable};
pub use lexicon::{
    build_feature_vector, coverage_report, mean_lexicon_score, scaled_feature_vector, CoverageReport, FeatureGroup,
    Lexicon, LexiconKind, LexiconSet, TargetedFeatureVector, FEATURE_DIM,
};

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("embedding line {line}: expected {expected} values, found {found}")]
    DimensionMismatch { line: usize, expected: usize, found: usize },
    #[error("embedding line {line}: {reason}")]
    BadEmbedding { line: usize, reason: String },
    #[error("empty embedding file")]
    EmptyFile,
    #[error("lexicon {name} line {line}: {reason}")]
    BadLexicon { name: String, line: usize, reason: String },
    #[error("missing lexicon for {0:?}")]
    MissingLexicon(LexiconKind),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
