//! Finite-difference checks of the full network for every variant, in both
//! modes, plus f32/f64 agreement.

use adnet::encode::EncodedInstance;
use adnet::features::FEATURE_DIM;
use adnet::model::{build_graph, instance_gradients, loss_node, ClassWeights, Mode, ModelConfig, ModelParams, Variant};
use adnet::tensor::{Tape, Tensor};
use adnet::Label;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn tiny(v: Variant) -> ModelConfig {
    ModelConfig {
        seq_len: 6,
        embed_dim: 3,
        pos_dim: 4,
        conv_filters: 2,
        lstm_hidden: 3,
        attention_dim: 2,
        dense_units: 4,
        dropout_rate: 0.3,
        ..Default::default()
    }
    .with_variant(v)
}

fn instance(cfg: &ModelConfig, rng: &mut ChaCha8Rng, real: usize) -> EncodedInstance<f64> {
    let (t, e, k) = (cfg.seq_len, cfg.embed_dim, cfg.pos_dim);
    let mut pos = Tensor::zeros(&[t, k]);
    for i in 0..t {
        let tag = if i < real { rng.random_range(1..k) } else { 0 };
        pos.data_mut()[i * k + tag] = 1.0;
    }
    let emb: Vec<f64> = (0..t * e)
        .map(|j| if j / e < real { rng.random_range(-1.0..1.0) } else { 0.0 })
        .collect();
    EncodedInstance {
        transcript_id: "x".into(),
        participant_id: "x".into(),
        embedding: Tensor::new(vec![t, e], emb).unwrap(),
        pos,
        features: (0..FEATURE_DIM).map(|_| rng.random()).collect(),
        mask: (0..t).map(|i| i < real).collect(),
        label: if rng.random_bool(0.5) { Label::Ad } else { Label::Ct },
    }
}

fn loss(p: &ModelParams<f64>, cfg: &ModelConfig, inst: &EncodedInstance<f64>, w: &ClassWeights, mode: Mode) -> f64 {
    let mut tape = Tape::new();
    let g = build_graph(&mut tape, p, cfg, inst, mode).unwrap();
    let l = loss_node(&mut tape, g.probability, inst.label, w, 1.0).unwrap();
    tape.value(l).item()
}

/// Worst per-tensor relative error between backprop and central differences.
fn worst_error(cfg: &ModelConfig, seed: u64, mode: Mode) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = ModelParams::<f64>::init(cfg);
    for p in params.store.iter_mut() {
        for v in p.value.data_mut() {
            *v = rng.random_range(-0.7..0.7);
        }
    }
    let real = rng.random_range(2..=cfg.seq_len);
    let inst = instance(cfg, &mut rng, real);
    let w = ClassWeights { w_ad: 0.7, w_ct: 1.9 };
    let (_, grads) = instance_gradients(&params, cfg, &inst, &w, mode).unwrap();
    let mut worst = 0.0f64;
    for (name, g) in grads {
        let id = params.store.id(&name).unwrap();
        let mut p = params.clone();
        let (mut num2, mut diff2, mut ana2) = (0.0, 0.0, 0.0);
        for j in 0..g.len() {
            let orig = p.store.get(id).value.data()[j];
            p.store.get_mut(id).value.data_mut()[j] = orig + 1e-5;
            let up = loss(&p, cfg, &inst, &w, mode);
            p.store.get_mut(id).value.data_mut()[j] = orig - 1e-5;
            let down = loss(&p, cfg, &inst, &w, mode);
            p.store.get_mut(id).value.data_mut()[j] = orig;
            let n = (up - down) / 2e-5;
            num2 += n * n;
            ana2 += g.data()[j] * g.data()[j];
            diff2 += (n - g.data()[j]).powi(2);
        }
        let scale = f64::max(num2, ana2).sqrt().max(1e-8);
        worst = worst.max(diff2.sqrt() / scale);
    }
    worst
}

#[test]
fn every_variant_eval_mode() {
    for v in Variant::ALL {
        for seed in 0..8 {
            let e = worst_error(&tiny(v), seed, Mode::Eval);
            assert!(e < 1e-4, "{v} seed {seed}: {e:e}");
        }
    }
}

#[test]
fn train_mode_with_fixed_dropout_mask() {
    for v in [Variant::Ours, Variant::OursAttW] {
        for seed in 0..8 {
            let e = worst_error(
                &tiny(v),
                seed,
                Mode::Train {
                    dropout_seed: seed * 7 + 1,
                },
            );
            assert!(e < 1e-4, "{v} seed {seed}: {e:e}");
        }
    }
}

#[test]
fn ablated_feature_groups() {
    use adnet::features::FeatureGroup;
    for g in FeatureGroup::ALL {
        let cfg = ModelConfig {
            feature_mask: vec![g],
            ..tiny(Variant::OursAttW)
        };
        for seed in 0..4 {
            let e = worst_error(&cfg, seed, Mode::Eval);
            assert!(e < 1e-4, "{g:?} seed {seed}: {e:e}");
        }
    }
}

#[test]
fn f32_forward_tracks_f64() {
    let cfg = tiny(Variant::OursAttW);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let p64 = ModelParams::<f64>::init(&cfg);
    let mut p32 = ModelParams::<f32>::init(&cfg);
    for (a, b) in p32.store.iter_mut().zip(p64.store.iter()) {
        a.value = b.value.cast();
    }
    for _ in 0..20 {
        let inst = instance(&cfg, &mut rng, 4);
        let inst32 = EncodedInstance {
            transcript_id: inst.transcript_id.clone(),
            participant_id: inst.participant_id.clone(),
            embedding: inst.embedding.cast(),
            pos: inst.pos.cast(),
            features: inst.features.iter().map(|&v| v as f32).collect(),
            mask: inst.mask.clone(),
            label: inst.label,
        };
        let a = adnet::model::forward(&p64, &cfg, &inst, Mode::Eval)
            .unwrap()
            .probability;
        let b = adnet::model::forward(&p32, &cfg, &inst32, Mode::Eval)
            .unwrap()
            .probability;
        assert!((a - b as f64).abs() < 1e-5, "{a} vs {b}");
    }
}
