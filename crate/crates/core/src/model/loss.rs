use super::ModelError;
use crate::chat::Label;

/// Clamp applied to probabilities before taking logs.
pub const BCE_EPS: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassWeights {
    pub w_ad: f64,
    pub w_ct: f64,
}

impl ClassWeights {
    pub const UNIT: ClassWeights = ClassWeights { w_ad: 1.0, w_ct: 1.0 };

    pub fn for_label(&self, label: Label) -> f64 {
        match label {
            Label::Ad => self.w_ad,
            Label::Ct => self.w_ct,
        }
    }
}

/// Balanced weighting `w_c = (n_ad + n_ct) / (2 n_c)`.
pub fn compute_class_weights(n_ad: usize, n_ct: usize) -> Result<ClassWeights, ModelError> {
    if n_ad == 0 || n_ct == 0 {
        return Err(ModelError::ZeroClass { n_ad, n_ct });
    }
    let total = (n_ad + n_ct) as f64;
    Ok(ClassWeights {
        w_ad: total / (2.0 * n_ad as f64),
        w_ct: total / (2.0 * n_ct as f64),
    })
}

pub fn weighted_bce(p: f64, label: Label, weights: &ClassWeights) -> f64 {
    let p = p.clamp(BCE_EPS, 1.0 - BCE_EPS);
    match label {
        Label::Ad => -weights.w_ad * p.ln(),
        Label::Ct => -weights.w_ct * (1.0 - p).ln(),
    }
}
