use rayon::prelude::*;

use super::metrics::{confusion, metrics, MetricsReport};
use super::split::{split, SplitSpec};
use super::EvalError;
use crate::encode::EncodedInstance;
use crate::features::FeatureGroup;
use crate::model::{classify, fit, predict, ModelConfig, ModelParams, TrainingLog, Variant};
use crate::scalar::Scalar;
use crate::Label;

/// One seed's split → fit → test evaluation.
#[derive(Debug, Clone)]
pub struct SeedRun {
    pub seed: u64,
    pub report: MetricsReport,
    pub test_scores: Vec<f64>,
    pub test_labels: Vec<Label>,
    pub log: TrainingLog,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub name: String,
    /// Targeted-feature slots reaching the dense layer.
    pub feature_dim: usize,
    pub runs: Vec<SeedRun>,
    pub mean: MetricsReport,
}

impl ExperimentResult {
    pub fn per_seed(&self) -> impl Iterator<Item = (u64, &MetricsReport)> {
        self.runs.iter().map(|r| (r.seed, &r.report))
    }
}

fn subset<T: Clone>(items: &[T], idx: &[usize]) -> Vec<T> {
    idx.iter().map(|&i| items[i].clone()).collect()
}

/// Trains and tests one seed; the seed drives both the split and the model.
pub fn run_seed<T: Scalar>(
    instances: &[EncodedInstance<T>],
    config: &ModelConfig,
    split_spec: &SplitSpec,
    seed: u64,
) -> Result<(SeedRun, ModelParams<T>), EvalError> {
    let ids: Vec<&str> = instances.iter().map(|i| i.participant_id.as_str()).collect();
    let parts = split(&ids, &SplitSpec { seed, ..*split_spec })?;
    let cfg = ModelConfig { seed, ..config.clone() };
    let train = subset(instances, &parts.train);
    let val = subset(instances, &parts.val);
    let test = subset(instances, &parts.test);
    let (params, log) = fit(&cfg, &train, &val)?;
    let probs = predict(&params, &cfg, &test)?;
    let labels: Vec<Label> = test.iter().map(|i| i.label).collect();
    let preds: Vec<Label> = probs.iter().map(|&p| classify(p)).collect();
    let scores: Vec<f64> = probs.iter().map(|p| p.as_f64()).collect();
    let report = metrics(confusion(&labels, &preds)?, &scores, &labels)?;
    Ok((
        SeedRun {
            seed,
            report,
            test_scores: scores,
            test_labels: labels,
            log,
        },
        params,
    ))
}

/// Runs every seed (in parallel) and averages metric by metric.
pub fn run_experiment<T: Scalar>(
    name: &str,
    instances: &[EncodedInstance<T>],
    config: &ModelConfig,
    split_spec: &SplitSpec,
    seeds: &[u64],
) -> Result<ExperimentResult, EvalError> {
    if seeds.is_empty() {
        return Err(EvalError::NoSeeds);
    }
    let runs: Vec<SeedRun> = seeds
        .par_iter()
        .map(|&s| run_seed(instances, config, split_spec, s).map(|(r, _)| r))
        .collect::<Result<_, _>>()?;
    let reports: Vec<MetricsReport> = runs.iter().map(|r| r.report).collect();
    Ok(ExperimentResult {
        name: name.to_string(),
        feature_dim: config.active_feature_slots().len(),
        mean: MetricsReport::mean(&reports),
        runs,
    })
}

/// The six architecture variants, in fixed order.
pub fn compare_variants<T: Scalar>(
    instances: &[EncodedInstance<T>],
    base: &ModelConfig,
    split_spec: &SplitSpec,
    seeds: &[u64],
) -> Result<Vec<ExperimentResult>, EvalError> {
    Variant::ALL
        .iter()
        .map(|&v| run_experiment(v.name(), instances, &base.clone().with_variant(v), split_spec, seeds))
        .collect()
}

/// Row label for an ablation that removes `groups`, e.g. `No Psych.`.
pub fn ablation_name(groups: &[FeatureGroup]) -> String {
    let parts: Vec<&str> = groups.iter().map(|g| g.label()).collect();
    format!("No {}", parts.join("+"))
}

/// Reruns the full model (OURS-Att-w) once per entry of `groups`, with that
/// set of feature groups removed.
pub fn ablate<T: Scalar>(
    instances: &[EncodedInstance<T>],
    base: &ModelConfig,
    split_spec: &SplitSpec,
    seeds: &[u64],
    groups: &[Vec<FeatureGroup>],
) -> Result<Vec<ExperimentResult>, EvalError> {
    if groups.is_empty() || groups.iter().any(Vec::is_empty) {
        return Err(EvalError::EmptyGroups);
    }
    groups
        .iter()
        .map(|g| {
            let cfg = ModelConfig {
                feature_mask: g.clone(),
                ..base.clone().with_variant(Variant::OursAttW)
            };
            run_experiment(&ablation_name(g), instances, &cfg, split_spec, seeds)
        })
        .collect()
}

/// One group per row: `[[psych], [sent], [demo]]`.
pub fn single_group_ablations() -> Vec<Vec<FeatureGroup>> {
    FeatureGroup::ALL.iter().map(|&g| vec![g]).collect()
}
