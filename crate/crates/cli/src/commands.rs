use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use adnet::chat::{corpus_stats, load_corpus_dir, parse_chat_body, write_manifest, ChatError, Corpus, StatsReport};
use adnet::encode::{EncodeError, Encoder};
use adnet::eval::{
    ablate, ablation_csv, compare_variants, confusion, metrics, per_seed_csv, results_csv, results_table, roc_csv,
    roc_curve, run_experiment, single_group_ablations, split, EvalError, ExperimentResult,
};
use adnet::features::{load_embeddings, FeatureError, LexiconSet};
use adnet::model::{self, classify, fit, forward, predict, Mode, ModelConfig, ModelError, Variant};
use adnet::synth::{self, SynthError};
use adnet::text::{PerceptronTagger, TagSet, TextError};
use adnet::{EncodedInstance64, Encoder64, Label};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::config::{output_dir, RunConfig};
use crate::CliError;

/// Bumped whenever a CSV column changes.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(
    name = "adnet",
    version,
    about = "Dementia detection from picture-description transcripts"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Output directory (overrides the config and $ADNET_OUTPUT_DIR).
    #[arg(long, value_name = "DIR")]
    output_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RunFlags {
    /// Config file (TOML).
    config: PathBuf,
    #[command(flatten)]
    common: Common,
    /// Seed for the split and model init; for compare/ablate, runs only this seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override [model] max_epochs.
    #[arg(long, value_name = "N")]
    max_epochs: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse a corpus directory and write its manifest.
    Ingest {
        dir: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Generate the synthetic corpus described by [synth] into [corpus] dir.
    Synth {
        /// Config file (TOML).
        config: PathBuf,
        /// Override [synth] seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train one model and save it.
    Train(RunFlags),
    /// Evaluate a saved model on the test split.
    Eval {
        #[command(flatten)]
        run: RunFlags,
        /// Model file written by `train`.
        #[arg(long)]
        model: PathBuf,
    },
    /// Run the six architecture variants over every seed.
    Compare(RunFlags),
    /// Rerun the full model with each feature group removed.
    Ablate(RunFlags),
    /// Score one transcript with a saved model.
    Predict {
        #[command(flatten)]
        run: RunFlags,
        /// Model file written by `train`.
        #[arg(long)]
        model: PathBuf,
        /// CHAT transcript.
        transcript: PathBuf,
    },
    /// Print corpus statistics.
    Stats {
        dir: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Ingest { dir, common } => ingest(&dir, &common),
        Command::Synth { config, seed } => synth_cmd(&config, seed),
        Command::Train(f) => train(&f),
        Command::Eval { run, model } => eval(&run, &model),
        Command::Compare(f) => compare(&f),
        Command::Ablate(f) => ablate_cmd(&f),
        Command::Predict { run, model, transcript } => predict_cmd(&run, &model, &transcript),
        Command::Stats { dir, common } => stats(&dir, &common),
    }
}

// --- error conversion ---

impl From<ChatError> for CliError {
    fn from(e: ChatError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<FeatureError> for CliError {
    fn from(e: FeatureError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<TextError> for CliError {
    fn from(e: TextError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<EncodeError> for CliError {
    fn from(e: EncodeError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::InvalidConfig(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Diverged { .. } => CliError::Diverged(e.to_string()),
            ModelError::InvalidConfig(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Model(m) => m.into(),
            EvalError::InvalidSplit(_) | EvalError::NoSeeds | EvalError::EmptyGroups => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

// --- shared plumbing ---

fn write_file(dir: &Path, name: &str, contents: &[u8]) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Data(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

#[derive(Serialize)]
struct RunRecord<'a> {
    schema_version: u32,
    command: &'a str,
    seeds: &'a [u64],
    split: &'a adnet::eval::SplitSpec,
    model: &'a ModelConfig,
}

fn write_run_record(dir: &Path, command: &str, job: &Job) -> Result<(), CliError> {
    let rec = RunRecord {
        schema_version: REPORT_SCHEMA_VERSION,
        command,
        seeds: &job.seeds,
        split: &job.cfg.split,
        model: &job.cfg.model,
    };
    let json = serde_json::to_string_pretty(&rec).map_err(|e| CliError::Data(e.to_string()))?;
    write_file(dir, "run.json", format!("{json}\n").as_bytes())?;
    Ok(())
}

/// Config with flag overrides applied, plus the resolved output dir.
struct Job {
    cfg: RunConfig,
    seeds: Vec<u64>,
    out: PathBuf,
}

fn job(flags: &RunFlags) -> Result<Job, CliError> {
    let mut cfg = RunConfig::load(&flags.config)?;
    let mut seeds = cfg.experiment.seeds.clone();
    if let Some(s) = flags.seed {
        cfg.model.seed = s;
        cfg.split.seed = s;
        seeds = vec![s];
    }
    if let Some(n) = flags.max_epochs {
        cfg.model.max_epochs = n;
    }
    cfg.split.validate()?;
    let out = output_dir(flags.common.output_dir.as_deref(), cfg.output_dir.as_deref());
    Ok(Job { cfg, seeds, out })
}

fn encoder(cfg: &RunConfig, seq_len: usize) -> Result<Encoder64, CliError> {
    let embeddings = load_embeddings(&cfg.embeddings_path()?)?;
    let lexicons = match &cfg.resources.lexicons_dir {
        Some(dir) => LexiconSet::load_dir(dir)?,
        None => LexiconSet::packaged(),
    };
    let tagger = match &cfg.resources.tagger_model {
        Some(p) => {
            let text =
                fs::read_to_string(p).map_err(|e| CliError::Data(format!("cannot read {}: {e}", p.display())))?;
            PerceptronTagger::from_text(&text)?
        }
        None => PerceptronTagger::packaged(),
    };
    Ok(Encoder::new(embeddings, lexicons, tagger).with_seq_len(seq_len))
}

/// Loads resources and corpus, validates the model config and encodes
/// every transcript. `embed_dim` and `pos_dim` come from the resources.
fn prepare(job: &mut Job) -> Result<Vec<EncodedInstance64>, CliError> {
    job.cfg.check_inputs(true)?;
    job.cfg.model.pos_dim = TagSet::penn().len();
    job.cfg.model.embed_dim = 1;
    job.cfg.model.validate()?;
    let enc = encoder(&job.cfg, job.cfg.model.seq_len)?;
    job.cfg.model.embed_dim = enc.embed_dim();
    let corpus = load_corpus_dir(job.cfg.corpus_dir()?)?;
    Ok(enc.encode_all(&corpus.records)?)
}

fn subset(all: &[EncodedInstance64], idx: &[usize]) -> Vec<EncodedInstance64> {
    idx.iter().map(|&i| all[i].clone()).collect()
}

fn single_result(name: &str, config: &ModelConfig, report: adnet::eval::MetricsReport) -> ExperimentResult {
    ExperimentResult {
        name: name.to_string(),
        feature_dim: config.active_feature_slots().len(),
        runs: Vec::new(),
        mean: report,
    }
}

fn model_name(config: &ModelConfig) -> &'static str {
    config.variant().map_or("custom", Variant::name)
}

// --- commands ---

fn stats_table(s: &StatsReport) -> String {
    let med = |m: Option<usize>| m.map_or("-".to_string(), |v| v.to_string());
    let mut t = format!("{:<14} {:>8} {:>8} {:>8}\n", "", "AD", "CT", "Total");
    writeln!(
        t,
        "{:<14} {:>8} {:>8} {:>8}",
        "Participants", s.participants_ad, s.participants_ct, s.participants
    )
    .unwrap();
    writeln!(
        t,
        "{:<14} {:>8} {:>8} {:>8}",
        "Transcripts", s.transcripts_ad, s.transcripts_ct, s.transcripts
    )
    .unwrap();
    writeln!(
        t,
        "{:<14} {:>8} {:>8} {:>8}",
        "Median words",
        med(s.median_words_ad),
        med(s.median_words_ct),
        s.median_words
    )
    .unwrap();
    t
}

fn stats_csv(s: &StatsReport) -> String {
    let med = |m: Option<usize>| m.map_or(String::new(), |v| v.to_string());
    format!(
        "group,participants,transcripts,median_words\nAD,{},{},{}\nCT,{},{},{}\ntotal,{},{},{}\n",
        s.participants_ad,
        s.transcripts_ad,
        med(s.median_words_ad),
        s.participants_ct,
        s.transcripts_ct,
        med(s.median_words_ct),
        s.participants,
        s.transcripts,
        s.median_words
    )
}

fn load_dir(dir: &Path) -> Result<Corpus, CliError> {
    if !dir.is_dir() {
        return Err(CliError::Data(format!("corpus dir not found: {}", dir.display())));
    }
    Ok(load_corpus_dir(dir)?)
}

fn ingest(dir: &Path, common: &Common) -> Result<(), CliError> {
    let corpus = load_dir(dir)?;
    let mut buf = Vec::new();
    write_manifest(&corpus, &mut buf).map_err(|e| CliError::Data(e.to_string()))?;
    let out = output_dir(common.output_dir.as_deref(), None);
    let path = write_file(&out, "manifest.jsonl", &buf)?;
    print!("{}", stats_table(&corpus_stats(&corpus)?));
    println!("manifest: {}", path.display());
    Ok(())
}

fn stats(dir: &Path, common: &Common) -> Result<(), CliError> {
    let s = corpus_stats(&load_dir(dir)?)?;
    let out = output_dir(common.output_dir.as_deref(), None);
    write_file(&out, "stats.csv", stats_csv(&s).as_bytes())?;
    print!("{}", stats_table(&s));
    Ok(())
}

fn synth_cmd(config: &Path, seed: Option<u64>) -> Result<(), CliError> {
    let cfg = RunConfig::load(config)?;
    let dir = cfg.corpus_dir()?.to_path_buf();
    let mut sc = cfg.synth.clone();
    if let Some(s) = seed {
        sc.seed = s;
    }
    let generated = synth::generate(&sc)?;
    generated.write_to(&dir)?;
    print!("{}", stats_table(&corpus_stats(&generated.corpus)?));
    println!("corpus: {}", dir.display());
    Ok(())
}

fn train(flags: &RunFlags) -> Result<(), CliError> {
    let mut job = job(flags)?;
    let instances = prepare(&mut job)?;
    let cfg = &job.cfg.model;
    let ids: Vec<&str> = instances.iter().map(|i| i.participant_id.as_str()).collect();
    let parts = split(&ids, &job.cfg.split)?;
    let train_set = subset(&instances, &parts.train);
    let val = subset(&instances, &parts.val);
    let (params, log) = fit(cfg, &train_set, &val)?;

    let probs = predict(&params, cfg, &val)?;
    let labels: Vec<Label> = val.iter().map(|i| i.label).collect();
    let preds: Vec<Label> = probs.iter().map(|&p| classify(p)).collect();
    let report = metrics(confusion(&labels, &preds)?, &probs, &labels)?;

    let model_path = job.out.join("model.adnm");
    fs::create_dir_all(&job.out).map_err(|e| CliError::Data(format!("cannot create {}: {e}", job.out.display())))?;
    model::save(&params, cfg, &model_path)?;
    write_file(&job.out, "training_log.csv", log.to_csv().as_bytes())?;
    write_run_record(&job.out, "train", &job)?;
    println!(
        "trained {} for {} epochs (best {}); validation metrics:",
        model_name(cfg),
        log.epochs.len(),
        log.best_epoch
    );
    print!("{}", results_table(&[single_result(model_name(cfg), cfg, report)]));
    println!("model: {}", model_path.display());
    Ok(())
}

fn load_model(path: &Path) -> Result<(adnet::ModelParams64, ModelConfig), CliError> {
    if !path.is_file() {
        return Err(CliError::Data(format!("model file not found: {}", path.display())));
    }
    Ok(model::load(path)?)
}

fn check_model_inputs(model_cfg: &ModelConfig, enc: &Encoder64) -> Result<(), CliError> {
    if enc.embed_dim() != model_cfg.embed_dim {
        return Err(CliError::Data(format!(
            "embeddings have dimension {}, model expects {}",
            enc.embed_dim(),
            model_cfg.embed_dim
        )));
    }
    Ok(())
}

fn eval(flags: &RunFlags, model_path: &Path) -> Result<(), CliError> {
    let job = job(flags)?;
    job.cfg.check_inputs(true)?;
    let (params, mcfg) = load_model(model_path)?;
    let enc = encoder(&job.cfg, mcfg.seq_len)?;
    check_model_inputs(&mcfg, &enc)?;
    let corpus = load_corpus_dir(job.cfg.corpus_dir()?)?;
    let instances = enc.encode_all(&corpus.records)?;
    let ids: Vec<&str> = instances.iter().map(|i| i.participant_id.as_str()).collect();
    let parts = split(&ids, &job.cfg.split)?;
    let test = subset(&instances, &parts.test);
    let probs = predict(&params, &mcfg, &test)?;
    let labels: Vec<Label> = test.iter().map(|i| i.label).collect();
    let preds: Vec<Label> = probs.iter().map(|&p| classify(p)).collect();
    let report = metrics(confusion(&labels, &preds)?, &probs, &labels)?;

    let mut rows = String::from("transcript_id,label,probability,predicted\n");
    for ((inst, p), pred) in test.iter().zip(&probs).zip(&preds) {
        writeln!(
            rows,
            "{},{},{p:.6},{}",
            inst.transcript_id,
            label_str(inst.label),
            label_str(*pred)
        )
        .unwrap();
    }
    let result = single_result(model_name(&mcfg), &mcfg, report);
    write_file(
        &job.out,
        "eval.csv",
        results_csv(std::slice::from_ref(&result)).as_bytes(),
    )?;
    write_file(&job.out, "predictions.csv", rows.as_bytes())?;
    write_file(&job.out, "roc.csv", roc_csv(&roc_curve(&probs, &labels)?).as_bytes())?;
    print!("{}", results_table(&[result]));
    Ok(())
}

fn label_str(l: Label) -> &'static str {
    match l {
        Label::Ad => "AD",
        Label::Ct => "CT",
    }
}

fn compare(flags: &RunFlags) -> Result<(), CliError> {
    let mut job = job(flags)?;
    let instances = prepare(&mut job)?;
    let results = compare_variants(&instances, &job.cfg.model, &job.cfg.split, &job.seeds)?;
    write_file(&job.out, "compare.csv", results_csv(&results).as_bytes())?;
    write_file(&job.out, "compare_per_seed.csv", per_seed_csv(&results).as_bytes())?;
    write_run_record(&job.out, "compare", &job)?;
    print!("{}", results_table(&results));
    Ok(())
}

fn ablate_cmd(flags: &RunFlags) -> Result<(), CliError> {
    let mut job = job(flags)?;
    let instances = prepare(&mut job)?;
    let full_cfg = ModelConfig {
        feature_mask: Vec::new(),
        ..job.cfg.model.clone().with_variant(Variant::OursAttW)
    };
    let mut results = vec![run_experiment(
        Variant::OursAttW.name(),
        &instances,
        &full_cfg,
        &job.cfg.split,
        &job.seeds,
    )?];
    results.extend(ablate(
        &instances,
        &job.cfg.model,
        &job.cfg.split,
        &job.seeds,
        &single_group_ablations(),
    )?);
    write_file(&job.out, "ablation.csv", ablation_csv(&results).as_bytes())?;
    write_file(&job.out, "ablation_per_seed.csv", per_seed_csv(&results).as_bytes())?;
    write_run_record(&job.out, "ablate", &job)?;
    print!("{}", results_table(&results));
    Ok(())
}

fn predict_cmd(flags: &RunFlags, model_path: &Path, transcript: &Path) -> Result<(), CliError> {
    let job = job(flags)?;
    job.cfg.check_inputs(false)?;
    let text = fs::read_to_string(transcript)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", transcript.display())))?;
    let (params, mcfg) = load_model(model_path)?;
    let enc = encoder(&job.cfg, mcfg.seq_len)?;
    check_model_inputs(&mcfg, &enc)?;
    let parsed = parse_chat_body(&text).map_err(|e| CliError::Data(format!("{}: {e}", transcript.display())))?;
    let id = transcript
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    // The label is a placeholder; it does not enter the forward pass.
    let inst = enc.encode_text(&parsed.participant_text(), &parsed.demographics, Label::Ct, &id, &id)?;
    let out = forward(&params, &mcfg, &inst, Mode::Eval)?;
    println!("transcript,probability,label");
    println!("{id},{:.6},{}", out.probability, label_str(classify(out.probability)));
    Ok(())
}
