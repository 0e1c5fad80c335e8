use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use super::FeatureError;
use crate::scalar::Scalar;
use crate::tensor::Tensor;
use crate::text::{TokenSequence, PAD_TOKEN};

/// Pre-trained vectors keyed by lowercase word. Missing words and the pad
/// token map to the zero vector.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable<T> {
    dim: usize,
    entries: HashMap<String, Vec<T>>,
}

impl<T: Scalar> EmbeddingTable<T> {
    pub fn new(dim: usize) -> Self {
        EmbeddingTable {
            dim,
            entries: HashMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Inserts unless the word is already present (first occurrence wins).
    pub fn insert(&mut self, word: &str, vector: Vec<T>) -> bool {
        assert_eq!(vector.len(), self.dim, "vector width must match table");
        if word == PAD_TOKEN || self.entries.contains_key(word) {
            return false;
        }
        self.entries.insert(word.to_string(), vector);
        true
    }

    pub fn get(&self, word: &str) -> Option<&[T]> {
        self.entries.get(word).map(Vec::as_slice)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains_key(word)
    }

    pub fn lookup(&self, word: &str) -> Vec<T> {
        self.get(word).map_or_else(|| vec![T::zero(); self.dim], <[T]>::to_vec)
    }
}

/// Parses `word v1 … vD` lines; the width comes from the first line.
pub fn parse_embeddings<T: Scalar>(reader: impl BufRead) -> Result<EmbeddingTable<T>, FeatureError> {
    let mut table: Option<EmbeddingTable<T>> = None;
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| FeatureError::BadEmbedding {
            line: i + 1,
            reason: e.to_string(),
        })?;
        let mut parts = line.split_whitespace();
        let Some(word) = parts.next() else { continue };
        let values = parts
            .map(|v| v.parse::<f64>().map(T::lit))
            .collect::<Result<Vec<T>, _>>()
            .map_err(|e| FeatureError::BadEmbedding {
                line: i + 1,
                reason: e.to_string(),
            })?;
        let t = table.get_or_insert_with(|| EmbeddingTable::new(values.len()));
        if values.len() != t.dim || values.is_empty() {
            return Err(FeatureError::DimensionMismatch {
                line: i + 1,
                expected: t.dim,
                found: values.len(),
            });
        }
        t.insert(word, values);
    }
    table.ok_or(FeatureError::EmptyFile)
}

pub fn load_embeddings<T: Scalar>(path: &Path) -> Result<EmbeddingTable<T>, FeatureError> {
    let file = File::open(path).map_err(|source| FeatureError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_embeddings(BufReader::new(file))
}

/// `[len × dim]` matrix whose row `t` is the vector of token `t`.
pub fn embed<T: Scalar>(seq: &TokenSequence, table: &EmbeddingTable<T>) -> Tensor<T> {
    let mut data = Vec::with_capacity(seq.len() * table.dim);
    for tok in &seq.tokens {
        match table.get(tok) {
            Some(v) => data.extend_from_slice(v),
            None => data.extend(std::iter::repeat_n(T::zero(), table.dim)),
        }
    }
    Tensor::new(vec![seq.len(), table.dim], data).expect("non-empty sequence and positive width")
}
