//! Turns transcript records into fixed-shape model inputs.

use rayon::prelude::*;
use thiserror::Error;

use crate::chat::{Demographics, Label, TranscriptRecord};
use crate::features::{embed, scaled_feature_vector, EmbeddingTable, FeatureError, LexiconSet, FEATURE_DIM};
use crate::scalar::Scalar;
use crate::tensor::Tensor;
use crate::text::{fix_length, one_hot, tokenize, PerceptronTagger, PosTagSequence, TagSet, TextError, SEQ_LEN};

#[derive(Debug, Error)]
pub enum EncodeError {
    #[error("transcript {id}: {source}")]
    Text {
        id: String,
        #[source]
        source: TextError,
    },
    #[error("transcript {id}: {source}")]
    Feature {
        id: String,
        #[source]
        source: FeatureError,
    },
}

/// One model input.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedInstance<T> {
    pub transcript_id: String,
    pub participant_id: String,
    /// `[seq_len × embed_dim]`
    pub embedding: Tensor<T>,
    /// `[seq_len × tagset size]`, one-hot rows.
    pub pos: Tensor<T>,
    /// All 7 targeted features, lexicon slots scaled to [0, 1]; slot
    /// selection happens in the model.
    pub features: Vec<T>,
    /// `true` at real tokens.
    pub mask: Vec<bool>,
    pub label: Label,
}

impl<T: Scalar> EncodedInstance<T> {
    pub fn seq_len(&self) -> usize {
        self.mask.len()
    }
}

/// Bundles the resources needed to encode text.
#[derive(Debug, Clone)]
pub struct Encoder<T> {
    pub seq_len: usize,
    pub embeddings: EmbeddingTable<T>,
    pub lexicons: LexiconSet,
    pub tagger: PerceptronTagger,
}

impl<T: Scalar> Encoder<T> {
    pub fn new(embeddings: EmbeddingTable<T>, lexicons: LexiconSet, tagger: PerceptronTagger) -> Self {
        Encoder {
            seq_len: SEQ_LEN,
            embeddings,
            lexicons,
            tagger,
        }
    }

    pub fn with_seq_len(mut self, seq_len: usize) -> Self {
        assert!(seq_len >= 1);
        self.seq_len = seq_len;
        self
    }

    pub fn embed_dim(&self) -> usize {
        self.embeddings.dim()
    }

    pub fn pos_dim(&self) -> usize {
        TagSet::penn().len()
    }

    /// Encodes raw participant text.
    pub fn encode_text(
        &self,
        text: &str,
        demographics: &Demographics,
        label: Label,
        transcript_id: &str,
        participant_id: &str,
    ) -> Result<EncodedInstance<T>, EncodeError> {
        let text_err = |source| EncodeError::Text {
            id: transcript_id.to_string(),
            source,
        };
        let seq = fix_length(&tokenize(text).map_err(text_err)?, self.seq_len);
        let tags = self.tagger.tag(&seq);
        self.assemble(&seq, &tags, demographics, label, transcript_id, participant_id)
    }

    /// Encodes with caller-supplied tags, bypassing the tagger. `tags` must
    /// align with the fixed-length token sequence.
    pub fn encode_tagged(
        &self,
        tokens: &[String],
        tags: &PosTagSequence,
        demographics: &Demographics,
        label: Label,
        transcript_id: &str,
    ) -> Result<EncodedInstance<T>, EncodeError> {
        let seq = fix_length(
            &crate::text::TokenSequence {
                tokens: tokens.to_vec(),
                original_length: tokens.len(),
            },
            self.seq_len,
        );
        let mut fixed = tags.tags.clone();
        fixed.resize(self.seq_len, crate::text::Tag::PAD);
        self.assemble(
            &seq,
            &PosTagSequence { tags: fixed },
            demographics,
            label,
            transcript_id,
            transcript_id,
        )
    }

    fn assemble(
        &self,
        seq: &crate::text::TokenSequence,
        tags: &PosTagSequence,
        demographics: &Demographics,
        label: Label,
        transcript_id: &str,
        participant_id: &str,
    ) -> Result<EncodedInstance<T>, EncodeError> {
        let pos = one_hot(tags, TagSet::penn()).map_err(|source| EncodeError::Text {
            id: transcript_id.to_string(),
            source,
        })?;
        let feats =
            scaled_feature_vector(seq, &self.lexicons, demographics).map_err(|source| EncodeError::Feature {
                id: transcript_id.to_string(),
                source,
            })?;
        debug_assert_eq!(feats.values.len(), FEATURE_DIM);
        Ok(EncodedInstance {
            transcript_id: transcript_id.to_string(),
            participant_id: participant_id.to_string(),
            embedding: embed(seq, &self.embeddings),
            pos,
            features: feats.values.iter().map(|&v| T::lit(v)).collect(),
            mask: seq.mask(),
            label,
        })
    }

    pub fn encode_record(&self, record: &TranscriptRecord) -> Result<EncodedInstance<T>, EncodeError> {
        self.encode_text(
            &record.participant_text(),
            &record.demographics,
            record.label,
            &record.transcript_id,
            &record.participant_id,
        )
    }

    /// Encodes every record in parallel, preserving order.
    pub fn encode_all(&self, records: &[TranscriptRecord]) -> Result<Vec<EncodedInstance<T>>, EncodeError> {
        records.par_iter().map(|r| self.encode_record(r)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chat::Gender;
    use crate::features::parse_embeddings;

    fn encoder() -> Encoder<f64> {
        let table = parse_embeddings("boy 1 0\nfell 0 1\n".as_bytes()).unwrap();
        Encoder::new(table, LexiconSet::packaged(), PerceptronTagger::packaged())
    }

    #[test]
    fn shapes_and_mask() {
        let demo = Demographics {
            age: Some(70),
            gender: Gender::Male,
        };
        let inst = encoder()
            .encode_text("the boy fell .", &demo, Label::Ad, "t1", "p1")
            .unwrap();
        assert_eq!(inst.embedding.shape(), &[SEQ_LEN, 2]);
        assert_eq!(inst.pos.shape(), &[SEQ_LEN, 37]);
        assert_eq!(inst.features.len(), FEATURE_DIM);
        assert_eq!(inst.mask.iter().filter(|&&m| m).count(), 3);
        assert_eq!(inst.embedding.row(1), &[1.0, 0.0]);
        for t in 0..SEQ_LEN {
            assert_eq!(inst.pos.row(t).iter().sum::<f64>(), 1.0);
        }
        assert_eq!(inst.pos.at2(5, 0), 1.0);
        assert_eq!(inst.features[5], 0.7);
    }

    #[test]
    fn empty_text_fails() {
        assert!(matches!(
            encoder().encode_text(" . ", &Demographics::default(), Label::Ct, "t", "p"),
            Err(EncodeError::Text { .. })
        ));
    }

    #[test]
    fn short_seq_len() {
        let inst = encoder()
            .with_seq_len(5)
            .encode_text("the boy fell", &Demographics::default(), Label::Ct, "t", "p")
            .unwrap();
        assert_eq!(inst.seq_len(), 5);
        assert_eq!(inst.mask, vec![true, true, true, false, false]);
    }
}
