use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::forward::{build_graph, forward, loss_node, Mode};
use super::loss::{compute_class_weights, weighted_bce, ClassWeights};
use super::{ModelConfig, ModelError, ModelParams};
use crate::encode::EncodedInstance;
use crate::scalar::Scalar;
use crate::tensor::{Adam, Optimizer, OptimizerKind, Sgd, Tape, TensorError};
use crate::Label;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    /// `None` when the validation set holds a single class.
    pub val_auc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingLog {
    pub epochs: Vec<EpochRecord>,
    /// 1-based epoch whose parameters were returned.
    pub best_epoch: usize,
    pub class_weights: Option<ClassWeights>,
}

impl TrainingLog {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,train_loss,val_loss,val_auc\n");
        for e in &self.epochs {
            let auc = e.val_auc.map(|a| format!("{a:.6}")).unwrap_or_default();
            writeln!(s, "{},{:.6},{:.6},{auc}", e.epoch, e.train_loss, e.val_loss).unwrap();
        }
        s
    }
}

/// Deterministic 64-bit mix used to derive per-epoch and per-instance seeds.
pub(crate) fn mix_seed(parts: &[u64]) -> u64 {
    let mut z = 0x9E37_79B9_7F4A_7C15u64;
    for &p in parts {
        z ^= p
            .wrapping_add(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(z << 6)
            .wrapping_add(z >> 2);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
    }
    z
}

fn diverged(epoch: usize) -> impl Fn(ModelError) -> ModelError {
    move |e| match e {
        ModelError::Tensor(TensorError::NonFiniteValue { .. }) => ModelError::Diverged { epoch },
        other => other,
    }
}

/// Class weights for a training set under `config`.
pub fn training_weights<T: Scalar>(
    config: &ModelConfig,
    train: &[EncodedInstance<T>],
) -> Result<ClassWeights, ModelError> {
    if !config.use_class_weights {
        return Ok(ClassWeights::UNIT);
    }
    let n_ad = train.iter().filter(|i| i.label == Label::Ad).count();
    compute_class_weights(n_ad, train.len() - n_ad)
}

/// Mean weighted loss over `data` in evaluation mode.
pub fn mean_loss<T: Scalar>(
    params: &ModelParams<T>,
    config: &ModelConfig,
    data: &[EncodedInstance<T>],
    weights: &ClassWeights,
) -> Result<f64, ModelError> {
    let probs = predict(params, config, data)?;
    let total: f64 = probs
        .iter()
        .zip(data)
        .map(|(p, i)| weighted_bce(p.as_f64(), i.label, weights))
        .sum();
    Ok(total / data.len() as f64)
}

/// Mini-batch training with early stopping on validation loss. Stops once
/// the number of consecutive non-improving epochs exceeds `patience` and
/// returns the parameters of the best epoch.
pub fn fit<T: Scalar>(
    config: &ModelConfig,
    train: &[EncodedInstance<T>],
    val: &[EncodedInstance<T>],
) -> Result<(ModelParams<T>, TrainingLog), ModelError> {
    config.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(ModelError::EmptyData);
    }
    let weights = training_weights(config, train)?;
    let mut params = ModelParams::init(config);
    let mut opt: Box<dyn Optimizer<T>> = match config.optimizer {
        OptimizerKind::Adam => Box::new(Adam::new(T::lit(config.learning_rate))),
        OptimizerKind::Sgd => Box::new(Sgd {
            lr: T::lit(config.learning_rate),
        }),
    };
    let mut log = TrainingLog {
        class_weights: config.use_class_weights.then_some(weights),
        ..Default::default()
    };
    let mut best: Option<(f64, ModelParams<T>)> = None;
    let mut stale = 0usize;
    let mut order: Vec<usize> = (0..train.len()).collect();
    for epoch in 1..=config.max_epochs {
        let on_err = diverged(epoch);
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(mix_seed(&[config.seed, epoch as u64])));
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            params.store.zero_grad();
            let scale = 1.0 / batch.len() as f64;
            for &idx in batch {
                let inst = &train[idx];
                let mode = Mode::Train {
                    dropout_seed: mix_seed(&[config.seed, epoch as u64, idx as u64]),
                };
                let mut tape = Tape::new();
                let g = build_graph(&mut tape, &params, config, inst, mode).map_err(&on_err)?;
                let loss = loss_node(&mut tape, g.probability, inst.label, &weights, scale).map_err(&on_err)?;
                let grads = tape.backward(loss).map_err(|e| on_err(e.into()))?;
                grads.accumulate_into(&mut params.store);
                epoch_loss += tape.value(loss).item().as_f64() / scale;
            }
            opt.step(&mut params.store);
        }
        let train_loss = epoch_loss / train.len() as f64;
        if !train_loss.is_finite() || params.store.iter().any(|p| !p.value.is_finite()) {
            return Err(ModelError::Diverged { epoch });
        }
        let val_probs = predict(&params, config, val).map_err(&on_err)?;
        let val_loss = val_probs
            .iter()
            .zip(val)
            .map(|(p, i)| weighted_bce(p.as_f64(), i.label, &weights))
            .sum::<f64>()
            / val.len() as f64;
        let scores: Vec<f64> = val_probs.iter().map(|p| p.as_f64()).collect();
        let labels: Vec<Label> = val.iter().map(|i| i.label).collect();
        let val_auc = crate::eval::auc_pairs(&scores, &labels).ok().flatten();
        log.epochs.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
            val_auc,
        });
        if best.as_ref().is_none_or(|(b, _)| val_loss < *b) {
            best = Some((val_loss, params.clone()));
            log.best_epoch = epoch;
            stale = 0;
        } else {
            stale += 1;
            if stale > config.patience {
                break;
            }
        }
    }
    let (_, best) = best.expect("at least one epoch ran");
    Ok((best, log))
}

/// Probabilities in evaluation mode, computed in parallel; order follows
/// `instances`.
pub fn predict<T: Scalar>(
    params: &ModelParams<T>,
    config: &ModelConfig,
    instances: &[EncodedInstance<T>],
) -> Result<Vec<T>, ModelError> {
    instances
        .par_iter()
        .map(|i| forward(params, config, i, Mode::Eval).map(|o| o.probability))
        .collect()
}

/// AD iff `p ≥ 0.5`.
pub fn classify<T: Scalar>(p: T) -> Label {
    if p >= T::lit(0.5) {
        Label::Ad
    } else {
        Label::Ct
    }
}
