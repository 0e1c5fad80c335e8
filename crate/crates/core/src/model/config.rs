use std::fmt;

use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::features::{FeatureGroup, FEATURE_DIM};
use crate::tensor::OptimizerKind;
use crate::text::SEQ_LEN;

/// Hyperparameters and architecture switches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub seq_len: usize,
    pub embed_dim: usize,
    pub pos_dim: usize,
    pub conv_filters: usize,
    pub conv_kernel: usize,
    /// Per direction.
    pub lstm_hidden: usize,
    pub attention_dim: usize,
    pub dense_units: usize,
    pub dropout_rate: f64,
    pub bidirectional: bool,
    pub use_attention: bool,
    pub use_targeted_features: bool,
    pub use_class_weights: bool,
    /// Feature groups removed from the targeted vector.
    pub feature_mask: Vec<FeatureGroup>,
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            seq_len: SEQ_LEN,
            embed_dim: 300,
            pos_dim: 37,
            conv_filters: 100,
            conv_kernel: 3,
            lstm_hidden: 128,
            attention_dim: 128,
            dense_units: 64,
            dropout_rate: 0.5,
            bidirectional: true,
            use_attention: true,
            use_targeted_features: true,
            use_class_weights: true,
            feature_mask: Vec::new(),
            optimizer: OptimizerKind::Adam,
            learning_rate: 1e-3,
            batch_size: 32,
            max_epochs: 50,
            patience: 5,
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: &str| Err(ModelError::InvalidConfig(m.to_string()));
        for (name, v) in [
            ("seq_len", self.seq_len),
            ("embed_dim", self.embed_dim),
            ("pos_dim", self.pos_dim),
            ("conv_filters", self.conv_filters),
            ("lstm_hidden", self.lstm_hidden),
            ("attention_dim", self.attention_dim),
            ("dense_units", self.dense_units),
            ("batch_size", self.batch_size),
            ("max_epochs", self.max_epochs),
        ] {
            if v == 0 {
                return bad(&format!("{name} must be at least 1"));
            }
        }
        if self.conv_kernel.is_multiple_of(2) {
            return bad("conv_kernel must be odd");
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return bad("dropout_rate must be in [0, 1)");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        Ok(())
    }

    /// Width of the sequence summary fed to the dense head.
    pub fn summary_dim(&self) -> usize {
        self.lstm_hidden * if self.bidirectional { 2 } else { 1 }
    }

    /// Indices of targeted-feature slots that reach the dense layer.
    pub fn active_feature_slots(&self) -> Vec<usize> {
        if !self.use_targeted_features {
            return Vec::new();
        }
        (0..FEATURE_DIM)
            .filter(|&s| !self.feature_mask.iter().any(|g| g.slots().contains(&s)))
            .collect()
    }

    pub fn with_variant(mut self, v: Variant) -> Self {
        let (bi, att, feats, weights) = v.flags();
        self.bidirectional = bi;
        self.use_attention = att;
        self.use_targeted_features = feats;
        self.use_class_weights = weights;
        self
    }

    /// The variant whose flags match, if any.
    pub fn variant(&self) -> Option<Variant> {
        let flags = (
            self.bidirectional,
            self.use_attention,
            self.use_targeted_features,
            self.use_class_weights,
        );
        Variant::ALL.into_iter().find(|v| v.flags() == flags)
    }
}

/// The six compared architectures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    CLstm,
    CLstmAtt,
    CLstmAttW,
    Ours,
    OursAtt,
    OursAttW,
}

impl Variant {
    pub const ALL: [Variant; 6] = [
        Variant::CLstm,
        Variant::CLstmAtt,
        Variant::CLstmAttW,
        Variant::Ours,
        Variant::OursAtt,
        Variant::OursAttW,
    ];

    /// (bidirectional, attention, targeted features, class weights)
    pub fn flags(self) -> (bool, bool, bool, bool) {
        match self {
            Variant::CLstm => (false, false, false, false),
            Variant::CLstmAtt => (true, true, false, false),
            Variant::CLstmAttW => (true, true, false, true),
            Variant::Ours => (false, false, true, false),
            Variant::OursAtt => (true, true, true, false),
            Variant::OursAttW => (true, true, true, true),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::CLstm => "C-LSTM",
            Variant::CLstmAtt => "C-LSTM-Att",
            Variant::CLstmAttW => "C-LSTM-Att-w",
            Variant::Ours => "OURS",
            Variant::OursAtt => "OURS-Att",
            Variant::OursAttW => "OURS-Att-w",
        }
    }

    pub fn from_name(name: &str) -> Option<Variant> {
        Variant::ALL.into_iter().find(|v| v.name().eq_ignore_ascii_case(name))
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ablation_dims() {
        let base = ModelConfig::default();
        assert_eq!(base.active_feature_slots().len(), 7);
        let dims: Vec<usize> = FeatureGroup::ALL
            .iter()
            .map(|&g| {
                ModelConfig {
                    feature_mask: vec![g],
                    ..base.clone()
                }
                .active_feature_slots()
                .len()
            })
            .collect();
        assert_eq!(dims, vec![3, 6, 5]);
        let all = ModelConfig {
            feature_mask: FeatureGroup::ALL.to_vec(),
            ..base.clone()
        };
        assert!(all.active_feature_slots().is_empty());
        let off = base.with_variant(Variant::CLstmAttW);
        assert!(off.active_feature_slots().is_empty());
    }

    #[test]
    fn variants_roundtrip() {
        for v in Variant::ALL {
            assert_eq!(ModelConfig::default().with_variant(v).variant(), Some(v));
            assert_eq!(Variant::from_name(v.name()), Some(v));
        }
        assert_eq!(ModelConfig::default().variant(), Some(Variant::OursAttW));
    }

    #[test]
    fn validation() {
        assert!(ModelConfig::default().validate().is_ok());
        let even = ModelConfig {
            conv_kernel: 4,
            ..Default::default()
        };
        assert!(even.validate().is_err());
        let drop = ModelConfig {
            dropout_rate: 1.0,
            ..Default::default()
        };
        assert!(drop.validate().is_err());
    }

    #[test]
    fn serde_rejects_unknown_keys() {
        assert!(serde_json::from_str::<ModelConfig>(r#"{"conv_filterz": 3}"#).is_err());
        let c: ModelConfig = serde_json::from_str(r#"{"conv_filters": 3, "feature_mask": ["sent"]}"#).unwrap();
        assert_eq!(c.conv_filters, 3);
        assert_eq!(c.feature_mask, vec![FeatureGroup::Sent]);
    }
}
