//! TOML run configuration.

use std::path::{Path, PathBuf};

use adnet::eval::SplitSpec;
use adnet::model::ModelConfig;
use adnet::synth::SynthConfig;
use serde::Deserialize;

use crate::CliError;

pub const OUTPUT_DIR_ENV: &str = "ADNET_OUTPUT_DIR";
pub const DEFAULT_OUTPUT_DIR: &str = "adnet-out";

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub output_dir: Option<PathBuf>,
    pub corpus: CorpusSection,
    pub resources: Resources,
    pub model: ModelConfig,
    pub split: SplitSpec,
    pub experiment: ExperimentSection,
    pub synth: SynthConfig,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSection {
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Resources {
    /// Defaults to `<corpus dir>/embeddings.txt`.
    pub embeddings: Option<PathBuf>,
    /// Packaged lexicons when absent.
    pub lexicons_dir: Option<PathBuf>,
    /// Packaged tagger when absent.
    pub tagger_model: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub seeds: Vec<u64>,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        ExperimentSection { seeds: vec![1, 2, 3] }
    }
}

impl RunConfig {
    /// Reads `path`; relative paths inside are resolved against its directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| CliError::Usage(format!("config {}: {}", path.display(), e.message())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut Option<PathBuf>| {
            if let Some(p) = p {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        };
        resolve(&mut cfg.output_dir);
        resolve(&mut cfg.corpus.dir);
        resolve(&mut cfg.resources.embeddings);
        resolve(&mut cfg.resources.lexicons_dir);
        resolve(&mut cfg.resources.tagger_model);
        Ok(cfg)
    }

    pub fn corpus_dir(&self) -> Result<&Path, CliError> {
        self.corpus
            .dir
            .as_deref()
            .ok_or_else(|| CliError::Usage("config is missing [corpus] dir".into()))
    }

    pub fn embeddings_path(&self) -> Result<PathBuf, CliError> {
        match &self.resources.embeddings {
            Some(p) => Ok(p.clone()),
            None => Ok(self.corpus_dir()?.join("embeddings.txt")),
        }
    }

    /// Checks that every input path exists.
    pub fn check_inputs(&self, need_corpus: bool) -> Result<(), CliError> {
        let mut paths = vec![("embeddings file", self.embeddings_path()?)];
        if need_corpus {
            paths.push(("corpus dir", self.corpus_dir()?.to_path_buf()));
        }
        if let Some(p) = &self.resources.lexicons_dir {
            paths.push(("lexicons dir", p.clone()));
        }
        if let Some(p) = &self.resources.tagger_model {
            paths.push(("tagger model", p.clone()));
        }
        for (what, p) in paths {
            if !p.exists() {
                return Err(CliError::Data(format!("{what} not found: {}", p.display())));
            }
        }
        Ok(())
    }
}

/// Flag, then config, then environment, then `adnet-out`.
pub fn output_dir(flag: Option<&Path>, config: Option<&Path>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| config.map(Path::to_path_buf))
        .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
}
