use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ModelConfig;
use crate::scalar::Scalar;
use crate::tensor::{ParamStore, Tensor};

/// Learned weights, keyed by layer-qualified names such as `lstm_fwd.w_x`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<T> {
    pub store: ParamStore<T>,
}

fn glorot<T: Scalar>(rng: &mut ChaCha8Rng, shape: &[usize], fan_in: usize, fan_out: usize) -> Tensor<T> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let n = shape.iter().product();
    let data = (0..n).map(|_| T::lit(rng.random_range(-limit..limit))).collect();
    Tensor::new(shape.to_vec(), data).expect("positive dims")
}

impl<T: Scalar> ModelParams<T> {
    /// Seeded Glorot-uniform weights, zero biases, forget-gate bias 1.
    pub fn init(config: &ModelConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut store = ParamStore::new();
        let (f, w, h) = (config.conv_filters, config.conv_kernel, config.lstm_hidden);
        for (branch, chans) in [("conv_emb", config.embed_dim), ("conv_pos", config.pos_dim)] {
            store.insert(
                format!("{branch}.kernel"),
                glorot(&mut rng, &[f, w, chans], w * chans, w * f),
            );
            store.insert(format!("{branch}.bias"), Tensor::zeros(&[f]));
        }
        let dirs: &[&str] = if config.bidirectional {
            &["lstm_fwd", "lstm_bwd"]
        } else {
            &["lstm_fwd"]
        };
        for dir in dirs {
            store.insert(format!("{dir}.w_x"), glorot(&mut rng, &[2 * f, 4 * h], 2 * f, 4 * h));
            store.insert(format!("{dir}.w_h"), glorot(&mut rng, &[h, 4 * h], h, 4 * h));
            let mut bias = Tensor::zeros(&[4 * h]);
            bias.data_mut()[h..2 * h].fill(T::one());
            store.insert(format!("{dir}.bias"), bias);
        }
        let d = config.summary_dim();
        let a = config.attention_dim;
        store.insert("attention.w", glorot(&mut rng, &[d, a], d, a));
        store.insert("attention.b", Tensor::zeros(&[a]));
        store.insert("attention.u", glorot(&mut rng, &[a, 1], a, 1));
        let k = config.active_feature_slots().len();
        let u = config.dense_units;
        store.insert("dense.w", glorot(&mut rng, &[d + k, u], d + k, u));
        store.insert("dense.b", Tensor::zeros(&[u]));
        store.insert("out.w", glorot(&mut rng, &[u, 1], u, 1));
        store.insert("out.b", Tensor::zeros(&[1]));
        ModelParams { store }
    }

    pub fn get(&self, name: &str) -> Option<&Tensor<T>> {
        self.store.by_name(name).map(|p| &p.value)
    }

    pub fn num_scalars(&self) -> usize {
        self.store.num_scalars()
    }

    pub fn names(&self) -> Vec<&str> {
        self.store.iter().map(|p| p.name.as_str()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Variant;

    #[test]
    fn shapes_follow_config() {
        let c = ModelConfig {
            embed_dim: 6,
            conv_filters: 4,
            lstm_hidden: 3,
            attention_dim: 5,
            dense_units: 2,
            ..Default::default()
        };
        let p: ModelParams<f64> = ModelParams::init(&c);
        assert_eq!(p.get("conv_emb.kernel").unwrap().shape(), &[4, 3, 6]);
        assert_eq!(p.get("conv_pos.kernel").unwrap().shape(), &[4, 3, 37]);
        assert_eq!(p.get("lstm_bwd.w_x").unwrap().shape(), &[8, 12]);
        assert_eq!(p.get("attention.w").unwrap().shape(), &[6, 5]);
        assert_eq!(p.get("dense.w").unwrap().shape(), &[6 + 7, 2]);
        assert_eq!(&p.get("lstm_fwd.bias").unwrap().data()[3..6], &[1.0; 3]);
        let base: ModelParams<f64> = ModelParams::init(&c.clone().with_variant(Variant::CLstm));
        assert!(base.get("lstm_bwd.w_x").is_none());
        assert_eq!(base.get("dense.w").unwrap().shape(), &[3, 2]);
    }

    #[test]
    fn seeded() {
        let c = ModelConfig {
            embed_dim: 4,
            conv_filters: 2,
            lstm_hidden: 2,
            attention_dim: 2,
            dense_units: 2,
            ..Default::default()
        };
        let a: ModelParams<f64> = ModelParams::init(&c);
        assert_eq!(a, ModelParams::init(&c));
        let other: ModelParams<f64> = ModelParams::init(&ModelConfig { seed: 1, ..c });
        assert_ne!(a, other);
    }
}
