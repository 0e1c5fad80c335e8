//! Training, persistence and prediction on small synthetic data.

use adnet::encode::Encoder;
use adnet::eval::{run_seed, SplitSpec};
use adnet::features::{parse_embeddings, LexiconSet};
use adnet::model::{self, fit, predict, ModelConfig, ModelError, Variant};
use adnet::synth::{embeddings_text, generate, SynthConfig};
use adnet::text::PerceptronTagger;
use adnet::EncodedInstance64;

fn data(n: usize) -> Vec<EncodedInstance64> {
    let cfg = SynthConfig {
        n_participants: n,
        ad_fraction: 0.5,
        ..Default::default()
    };
    let corpus = generate(&cfg).unwrap().corpus;
    let table = parse_embeddings(embeddings_text(&cfg).as_bytes()).unwrap();
    Encoder::new(table, LexiconSet::packaged(), PerceptronTagger::packaged())
        .encode_all(&corpus.records)
        .unwrap()
}

fn config() -> ModelConfig {
    ModelConfig {
        embed_dim: 50,
        conv_filters: 6,
        lstm_hidden: 6,
        attention_dim: 6,
        dense_units: 6,
        max_epochs: 6,
        batch_size: 8,
        learning_rate: 3e-3,
        seed: 5,
        ..Default::default()
    }
}

#[test]
fn training_lowers_loss_and_separates_classes() {
    let d = data(40);
    let (train, val) = d.split_at(60);
    let (params, log) = fit(&config(), train, val).unwrap();
    let first = log.epochs.first().unwrap().train_loss;
    let last = log.epochs.last().unwrap().train_loss;
    assert!(last < first, "{first} -> {last}");
    let probs = predict(&params, &config(), val).unwrap();
    let labels: Vec<_> = val.iter().map(|i| i.label).collect();
    let auc = adnet::eval::auc_pairs(&probs, &labels).unwrap().unwrap();
    assert!(auc > 0.8, "val AUC {auc}");
}

#[test]
fn fit_is_deterministic() {
    let d = data(20);
    let (train, val) = d.split_at(30);
    let (a, la) = fit(&config(), train, val).unwrap();
    let (b, lb) = fit(&config(), train, val).unwrap();
    assert_eq!(la.to_csv(), lb.to_csv());
    for (x, y) in a.store.iter().zip(b.store.iter()) {
        assert_eq!(x.value, y.value, "{}", x.name);
    }
}

#[test]
fn patience_zero_stops_at_first_non_improvement() {
    let d = data(20);
    let (train, val) = d.split_at(30);
    let cfg = ModelConfig {
        patience: 0,
        max_epochs: 20,
        learning_rate: 0.05,
        ..config()
    };
    let (_, log) = fit(&cfg, train, val).unwrap();
    let n = log.epochs.len();
    if n < 20 {
        let last = log.epochs[n - 1].val_loss;
        let best = log.epochs[..n - 1]
            .iter()
            .map(|e| e.val_loss)
            .fold(f64::INFINITY, f64::min);
        assert!(last >= best);
        assert_eq!(log.best_epoch, n - 1);
    }
}

#[test]
fn saved_model_predicts_identically() {
    let d = data(20);
    let cfg = config().with_variant(Variant::OursAtt);
    let (run, params) = run_seed(&d, &cfg, &SplitSpec::default(), 3).unwrap();
    assert_eq!(run.test_scores.len(), run.test_labels.len());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.adnm");
    let saved_cfg = ModelConfig { seed: 3, ..cfg };
    model::save(&params, &saved_cfg, &path).unwrap();
    let (loaded, loaded_cfg) = model::load::<f64>(&path).unwrap();
    assert_eq!(loaded_cfg, saved_cfg);
    let a = predict(&params, &saved_cfg, &d).unwrap();
    let b = predict(&loaded, &loaded_cfg, &d).unwrap();
    assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
}

#[test]
fn truncated_model_file_is_rejected() {
    let cfg = config();
    let bytes = model::to_bytes(&model::ModelParams::<f64>::init(&cfg), &cfg);
    for cut in [3, 10, bytes.len() / 2, bytes.len() - 1] {
        assert!(matches!(
            model::from_bytes::<f64>(&bytes[..cut]),
            Err(ModelError::CorruptFile(_))
        ));
    }
}

#[test]
fn diverging_run_reports_error() {
    let d = data(20);
    let (train, val) = d.split_at(30);
    let cfg = ModelConfig {
        learning_rate: 1e300,
        optimizer: adnet::tensor::OptimizerKind::Sgd,
        ..config()
    };
    assert!(matches!(fit(&cfg, train, val), Err(ModelError::Diverged { .. })));
}
