use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::loss::{ClassWeights, BCE_EPS};
use super::{ModelConfig, ModelError, ModelParams};
use crate::encode::EncodedInstance;
use crate::scalar::Scalar;
use crate::tensor::{mismatch, Tape, Tensor, Var};
use crate::Label;

/// Dropout is active only in `Train`, with masks drawn from the given seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Eval,
    Train { dropout_seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardOutput<T> {
    pub probability: T,
    /// Attention weights per timestep, when attention is enabled.
    pub attention: Option<Vec<T>>,
}

/// Nodes of interest in a recorded forward pass.
#[derive(Debug, Clone, Copy)]
pub struct Graph {
    pub probability: Var,
    pub attention: Option<Var>,
}

fn check_shapes<T: Scalar>(config: &ModelConfig, inst: &EncodedInstance<T>) -> Result<(), ModelError> {
    let want_e = [config.seq_len, config.embed_dim];
    let want_p = [config.seq_len, config.pos_dim];
    if inst.embedding.shape() != want_e {
        return Err(mismatch(
            "forward",
            format!("embedding {:?}, expected {want_e:?}", inst.embedding.shape()),
        )
        .into());
    }
    if inst.pos.shape() != want_p {
        return Err(mismatch("forward", format!("pos {:?}, expected {want_p:?}", inst.pos.shape())).into());
    }
    if inst.mask.len() != config.seq_len {
        return Err(mismatch("forward", format!("mask of {}", inst.mask.len())).into());
    }
    if inst.features.len() != crate::features::FEATURE_DIM {
        return Err(mismatch("forward", format!("{} targeted features", inst.features.len())).into());
    }
    Ok(())
}

struct Lstm {
    w_x: Var,
    w_h: Var,
    bias: Var,
}

/// Runs one direction over `xs [T×C]`, returning hidden states `[T×H]`
/// in input order.
fn lstm_pass<T: Scalar>(tape: &mut Tape<T>, cell: &Lstm, xs: Var, reverse: bool) -> Result<Var, ModelError> {
    let xw = tape.matmul(xs, cell.w_x)?;
    let xw = tape.add_row(xw, cell.bias)?;
    Ok(tape.lstm(xw, cell.w_h, reverse)?)
}

/// Records the full network on `tape` and returns the output node.
pub fn build_graph<T: Scalar>(
    tape: &mut Tape<T>,
    params: &ModelParams<T>,
    config: &ModelConfig,
    inst: &EncodedInstance<T>,
    mode: Mode,
) -> Result<Graph, ModelError> {
    check_shapes(config, inst)?;
    let store = &params.store;
    let p = |tape: &mut Tape<T>, name: &str| -> Result<Var, ModelError> {
        let id = store
            .id(name)
            .ok_or_else(|| ModelError::MissingParameter(name.to_string()))?;
        Ok(tape.param(store, id))
    };

    let mut branches = Vec::with_capacity(2);
    for (name, input) in [("conv_emb", &inst.embedding), ("conv_pos", &inst.pos)] {
        let x = tape.constant(input.clone());
        let k = p(tape, &format!("{name}.kernel"))?;
        let b = p(tape, &format!("{name}.bias"))?;
        let y = tape.conv1d(x, k)?;
        let y = tape.add_row(y, b)?;
        branches.push(tape.relu(y)?);
    }
    let seq = tape.concat(&branches, 1)?;

    let cell = |tape: &mut Tape<T>, dir: &str| -> Result<Lstm, ModelError> {
        Ok(Lstm {
            w_x: p(tape, &format!("{dir}.w_x"))?,
            w_h: p(tape, &format!("{dir}.w_h"))?,
            bias: p(tape, &format!("{dir}.bias"))?,
        })
    };
    let fwd_cell = cell(tape, "lstm_fwd")?;
    let fwd = lstm_pass(tape, &fwd_cell, seq, false)?;
    let hs = if config.bidirectional {
        let bwd_cell = cell(tape, "lstm_bwd")?;
        let bwd = lstm_pass(tape, &bwd_cell, seq, true)?;
        tape.concat(&[fwd, bwd], 1)?
    } else {
        fwd
    };

    let steps = config.seq_len;
    let (summary, attention) = if config.use_attention {
        let w = p(tape, "attention.w")?;
        let b = p(tape, "attention.b")?;
        let u = p(tape, "attention.u")?;
        let proj = tape.matmul(hs, w)?;
        let proj = tape.add_row(proj, b)?;
        let proj = tape.tanh(proj)?;
        let scores = tape.matmul(proj, u)?;
        let alpha = tape.softmax(scores, 0, Some(&inst.mask))?;
        let alpha_t = tape.transpose(alpha)?;
        (tape.matmul(alpha_t, hs)?, Some(alpha))
    } else {
        // Forward direction at the last real token, backward at the first.
        let h = config.lstm_hidden;
        let last = inst.mask.iter().rposition(|&m| m).unwrap_or(steps - 1);
        let fwd_last = tape.slice(fwd, 0, last, 1)?;
        let summary = if config.bidirectional {
            let row0 = tape.slice(hs, 0, 0, 1)?;
            let bwd_first = tape.slice(row0, 1, h, h)?;
            tape.concat(&[fwd_last, bwd_first], 1)?
        } else {
            fwd_last
        };
        (summary, None)
    };

    let slots = config.active_feature_slots();
    let head_in = if slots.is_empty() {
        summary
    } else {
        let f: Vec<T> = slots.iter().map(|&s| inst.features[s]).collect();
        let f = tape.constant(Tensor::new(vec![1, slots.len()], f)?);
        tape.concat(&[summary, f], 1)?
    };
    let dw = p(tape, "dense.w")?;
    let db = p(tape, "dense.b")?;
    let dense = tape.matmul(head_in, dw)?;
    let dense = tape.add_row(dense, db)?;
    let mut dense = tape.relu(dense)?;
    if let Mode::Train { dropout_seed } = mode {
        if config.dropout_rate > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(dropout_seed);
            let keep = 1.0 - config.dropout_rate;
            let scale = T::lit(1.0 / keep);
            let m: Vec<T> = (0..config.dense_units)
                .map(|_| if rng.random::<f64>() < keep { scale } else { T::zero() })
                .collect();
            let m = tape.constant(Tensor::new(vec![1, config.dense_units], m)?);
            dense = tape.mul(dense, m)?;
        }
    }
    let ow = p(tape, "out.w")?;
    let ob = p(tape, "out.b")?;
    let logit = tape.matmul(dense, ow)?;
    let logit = tape.add_row(logit, ob)?;
    let probability = tape.sigmoid(logit)?;
    Ok(Graph { probability, attention })
}

/// Appends the weighted cross-entropy of `prob` against `label`, scaled by
/// `scale` (used to average over a batch).
pub fn loss_node<T: Scalar>(
    tape: &mut Tape<T>,
    prob: Var,
    label: Label,
    weights: &ClassWeights,
    scale: f64,
) -> Result<Var, ModelError> {
    let pc = tape.clamp(prob, T::lit(BCE_EPS), T::lit(1.0 - BCE_EPS))?;
    let target = match label {
        Label::Ad => pc,
        Label::Ct => tape.affine(pc, -T::one(), T::one())?,
    };
    let lg = tape.log(target)?;
    let l = tape.scale(lg, T::lit(-weights.for_label(label) * scale))?;
    Ok(tape.sum(l)?)
}

pub fn forward<T: Scalar>(
    params: &ModelParams<T>,
    config: &ModelConfig,
    inst: &EncodedInstance<T>,
    mode: Mode,
) -> Result<ForwardOutput<T>, ModelError> {
    let mut tape = Tape::new();
    let g = build_graph(&mut tape, params, config, inst, mode)?;
    Ok(ForwardOutput {
        probability: tape.value(g.probability).item(),
        attention: g.attention.map(|a| tape.value(a).data().to_vec()),
    })
}

/// Gradient per named parameter.
pub type NamedGrads<T> = Vec<(String, Tensor<T>)>;

/// Loss of one instance and its gradient for every named parameter.
/// Parameters the loss does not reach get a zero tensor.
pub fn instance_gradients<T: Scalar>(
    params: &ModelParams<T>,
    config: &ModelConfig,
    inst: &EncodedInstance<T>,
    weights: &ClassWeights,
    mode: Mode,
) -> Result<(T, NamedGrads<T>), ModelError> {
    let mut tape = Tape::new();
    let g = build_graph(&mut tape, params, config, inst, mode)?;
    let loss = loss_node(&mut tape, g.probability, inst.label, weights, 1.0)?;
    let grads = tape.backward(loss)?;
    let mut store = params.store.clone();
    store.zero_grad();
    grads.accumulate_into(&mut store);
    let out = store.iter().map(|p| (p.name.clone(), p.grad.clone())).collect();
    Ok((tape.value(loss).item(), out))
}

/// Scalar loss of one instance; the finite-difference oracle evaluates this.
pub fn instance_loss<T: Scalar>(
    params: &ModelParams<T>,
    config: &ModelConfig,
    inst: &EncodedInstance<T>,
    weights: &ClassWeights,
) -> Result<T, ModelError> {
    let mut tape = Tape::new();
    let g = build_graph(&mut tape, params, config, inst, Mode::Eval)?;
    let loss = loss_node(&mut tape, g.probability, inst.label, weights, 1.0)?;
    Ok(tape.value(loss).item())
}
