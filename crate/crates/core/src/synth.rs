//! Labeled synthetic Cookie-Theft-style corpora. AD and CT transcripts
//! differ in filler rate, length and age; everything else is shared.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chat::{parse_chat_file, write_manifest, ChatError, Corpus, Demographics, Gender, Label};
use crate::features::{Lexicon, LexiconKind};

/// Filler tokens as they appear in CHAT and after normalization.
pub const FILLERS: [(&str, &str); 3] = [("&uh", "uh"), ("&um", "um"), ("oh", "oh")];

const INTERVIEWER_LINES: [&str; 5] = [
    "what do you see going on in the picture ?",
    "anything else ?",
    "okay .",
    "mhm .",
    "tell me more .",
];

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synth config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Chat(#[from] ChatError),
    #[error("io error on {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_participants: usize,
    pub transcripts_per_participant: usize,
    pub ad_fraction: f64,
    pub filler_rate_ad: f64,
    pub filler_rate_ct: f64,
    pub mean_length_ad: f64,
    pub mean_length_ct: f64,
    /// Standard deviation of transcript length as a fraction of the mean.
    pub length_spread: f64,
    pub mean_age_ad: f64,
    pub mean_age_ct: f64,
    pub age_sd: f64,
    /// Content words; defaults to the packaged lexicon vocabulary.
    pub vocab: Vec<String>,
    /// Width of the generated embedding table.
    pub embedding_dim: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        let mut vocab: Vec<String> = Lexicon::packaged(LexiconKind::Aoa)
            .words()
            .map(|(w, _)| w.to_string())
            .collect();
        vocab.sort();
        SynthConfig {
            n_participants: 300,
            transcripts_per_participant: 2,
            ad_fraction: 1049.0 / 1292.0,
            filler_rate_ad: 0.15,
            filler_rate_ct: 0.02,
            mean_length_ad: 65.0,
            mean_length_ct: 97.0,
            length_spread: 0.15,
            mean_age_ad: 72.0,
            mean_age_ct: 64.0,
            age_sd: 5.0,
            vocab,
            embedding_dim: 50,
            seed: 42,
        }
    }
}

impl SynthConfig {
    /// Both classes drawn from the same distributions (CT settings).
    pub fn null_signal(self) -> Self {
        SynthConfig {
            filler_rate_ad: self.filler_rate_ct,
            mean_length_ad: self.mean_length_ct,
            mean_age_ad: self.mean_age_ct,
            ..self
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::InvalidConfig(m.to_string()));
        if self.n_participants == 0 || self.transcripts_per_participant == 0 {
            return bad("need at least one participant and one transcript each");
        }
        if !(self.ad_fraction > 0.0 && self.ad_fraction < 1.0) {
            return bad("ad_fraction must be in (0, 1)");
        }
        for r in [self.filler_rate_ad, self.filler_rate_ct] {
            if !(0.0..=1.0).contains(&r) {
                return bad("filler rates must be in [0, 1]");
            }
        }
        if self.mean_length_ad < 5.0 || self.mean_length_ct < 5.0 {
            return bad("mean lengths must be at least 5");
        }
        if !(self.length_spread >= 0.0 && self.age_sd >= 0.0) {
            return bad("spreads must be non-negative");
        }
        let fillers: Vec<&str> = FILLERS.iter().map(|f| f.1).collect();
        if self.vocab.is_empty() || self.vocab.iter().all(|w| fillers.contains(&w.as_str())) {
            return bad("vocab must contain a non-filler word");
        }
        if self
            .vocab
            .iter()
            .any(|w| w.is_empty() || !w.chars().all(|c| c.is_ascii_lowercase()))
        {
            return bad("vocab words must be lowercase ASCII letters");
        }
        if self.embedding_dim == 0 {
            return bad("embedding_dim must be at least 1");
        }
        Ok(())
    }
}

/// Generated corpus with each transcript's CHAT text.
#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub corpus: Corpus,
    /// `(transcript_id, CHAT text)` in corpus order.
    pub files: Vec<(String, String)>,
    pub config: SynthConfig,
}

fn transcript_chat(rng: &mut ChaCha8Rng, cfg: &SynthConfig, label: Label, demo: &Demographics) -> String {
    let (rate, mean) = match label {
        Label::Ad => (cfg.filler_rate_ad, cfg.mean_length_ad),
        Label::Ct => (cfg.filler_rate_ct, cfg.mean_length_ct),
    };
    let len_dist = Normal::new(mean, mean * cfg.length_spread).expect("finite spread");
    let n_words = (len_dist.sample(rng).round().max(5.0)) as usize;
    let fillers: Vec<&str> = FILLERS.iter().map(|f| f.1).collect();
    let content: Vec<&str> = cfg
        .vocab
        .iter()
        .map(String::as_str)
        .filter(|w| !fillers.contains(w))
        .collect();
    let words: Vec<&str> = (0..n_words)
        .map(|_| {
            if rng.random::<f64>() < rate {
                FILLERS.choose(rng).expect("non-empty").0
            } else {
                content.choose(rng).expect("validated non-empty")
            }
        })
        .collect();

    let mut body = String::new();
    body.push_str(&format!("*INV:\t{}\n", INTERVIEWER_LINES[0]));
    let mut rest = words.as_slice();
    while !rest.is_empty() {
        let take = rng.random_range(4..=10).min(rest.len());
        let (utt, tail) = rest.split_at(take);
        rest = tail;
        let mut line: Vec<&str> = utt.to_vec();
        if line.len() > 3 && rng.random::<f64>() < 0.2 {
            line.insert(rng.random_range(1..line.len()), "(.)");
        }
        body.push_str(&format!("*PAR:\t{} .\n", line.join(" ")));
        if !rest.is_empty() && rng.random::<f64>() < 0.25 {
            let inv = INTERVIEWER_LINES[1..].choose(rng).expect("non-empty");
            body.push_str(&format!("*INV:\t{inv}\n"));
        }
    }
    let age = demo.age.map(|a| a.to_string()).unwrap_or_default();
    format!(
        "@UTF8\n@Begin\n@Languages:\teng\n@Participants:\tPAR Participant, INV Investigator\n\
         @ID:\teng|Pitt|PAR|{age};|{}||{}|Participant|||\n@ID:\teng|Pitt|INV|||||Investigator|||\n{body}@End\n",
        demo.gender.as_chat(),
        match label {
            Label::Ad => "ProbableAD",
            Label::Ct => "Control",
        }
    )
}

/// Deterministic for a fixed config.
pub fn generate(cfg: &SynthConfig) -> Result<SynthCorpus, SynthError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.n_participants;
    let n_ad = ((cfg.ad_fraction * n as f64).round() as usize).clamp(1, n.saturating_sub(1).max(1));
    let mut labels: Vec<Label> = (0..n).map(|i| if i < n_ad { Label::Ad } else { Label::Ct }).collect();
    labels.shuffle(&mut rng);

    let mut records = Vec::with_capacity(n * cfg.transcripts_per_participant);
    let mut files = Vec::with_capacity(records.capacity());
    for (p, &label) in labels.iter().enumerate() {
        let mean_age = match label {
            Label::Ad => cfg.mean_age_ad,
            Label::Ct => cfg.mean_age_ct,
        };
        let age = Normal::new(mean_age, cfg.age_sd).expect("finite sd").sample(&mut rng);
        let demo = Demographics {
            age: Some(age.round().clamp(40.0, 100.0) as u32),
            gender: if rng.random::<bool>() {
                Gender::Female
            } else {
                Gender::Male
            },
        };
        let pid = format!("S{:03}", p + 1);
        for k in 0..cfg.transcripts_per_participant {
            let tid = format!("{pid}-{}", k + 1);
            let text = transcript_chat(&mut rng, cfg, label, &demo);
            let record = parse_chat_file(&text, label)?.with_ids(tid.clone(), pid.clone());
            records.push(record);
            files.push((tid, text));
        }
    }
    Ok(SynthCorpus {
        corpus: Corpus::new(records, Vec::new())?,
        files,
        config: cfg.clone(),
    })
}

/// `word v1 … vD` lines for the vocabulary and fillers, seeded.
pub fn embeddings_text(cfg: &SynthConfig) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5EED_E3B0);
    let dist = Normal::new(0.0, 0.5).expect("valid");
    let mut words: Vec<&str> = cfg.vocab.iter().map(String::as_str).collect();
    words.extend(FILLERS.iter().map(|f| f.1));
    words.sort_unstable();
    words.dedup();
    let mut out = String::new();
    for w in words {
        out.push_str(w);
        for _ in 0..cfg.embedding_dim {
            out.push_str(&format!(" {:.6}", dist.sample(&mut rng)));
        }
        out.push('\n');
    }
    out
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), SynthError> {
    fs::write(path, contents).map_err(|source| SynthError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn make_dir(path: &Path) -> Result<(), SynthError> {
    fs::create_dir_all(path).map_err(|source| SynthError::Io {
        path: path.to_path_buf(),
        source,
    })
}

impl SynthCorpus {
    /// Writes `ad/*.cha`, `ct/*.cha`, `manifest.jsonl`, `embeddings.txt` and
    /// `lexicons/*.tsv` under `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<(), SynthError> {
        for sub in ["ad", "ct", "lexicons"] {
            make_dir(&dir.join(sub))?;
        }
        for (record, (tid, text)) in self.corpus.records.iter().zip(&self.files) {
            let sub = match record.label {
                Label::Ad => "ad",
                Label::Ct => "ct",
            };
            write_file(&dir.join(sub).join(format!("{tid}.cha")), text.as_bytes())?;
        }
        let manifest_path = dir.join("manifest.jsonl");
        let file = fs::File::create(&manifest_path).map_err(|source| SynthError::Io {
            path: manifest_path.clone(),
            source,
        })?;
        let mut w = BufWriter::new(file);
        write_manifest(&self.corpus, &mut w)
            .and_then(|_| w.flush())
            .map_err(|source| SynthError::Io {
                path: manifest_path,
                source,
            })?;
        write_file(&dir.join("embeddings.txt"), embeddings_text(&self.config).as_bytes())?;
        for kind in LexiconKind::ALL {
            let path = dir.join("lexicons").join(format!("{}.tsv", kind.file_stem()));
            write_file(&path, kind.packaged_source().as_bytes())?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::tokenize;

    fn small() -> SynthConfig {
        SynthConfig {
            n_participants: 20,
            ..Default::default()
        }
    }

    #[test]
    fn deterministic() {
        let a = generate(&small()).unwrap();
        let b = generate(&small()).unwrap();
        assert_eq!(a.files, b.files);
        assert_eq!(a.corpus.records, b.corpus.records);
        let c = generate(&SynthConfig { seed: 7, ..small() }).unwrap();
        assert_ne!(a.files, c.files);
    }

    #[test]
    fn parses_without_warnings_and_keeps_fillers() {
        let s = generate(&small()).unwrap();
        assert_eq!(s.corpus.len(), 40);
        for r in &s.corpus.records {
            assert_eq!(r.warnings, 0);
            assert!(r.demographics.age.is_some());
            let toks = tokenize(&r.participant_text()).unwrap();
            assert!(toks.len() >= 5);
        }
        let ad = s.corpus.records.iter().filter(|r| r.label == Label::Ad).count();
        assert_eq!(ad, 2 * 16);
    }

    #[test]
    fn filler_rate_close_to_config() {
        let cfg = SynthConfig {
            n_participants: 200,
            ad_fraction: 0.5,
            ..Default::default()
        };
        let s = generate(&cfg).unwrap();
        for (label, rate) in [(Label::Ad, cfg.filler_rate_ad), (Label::Ct, cfg.filler_rate_ct)] {
            let (mut f, mut n) = (0usize, 0usize);
            for r in s.corpus.records.iter().filter(|r| r.label == label) {
                for t in tokenize(&r.participant_text()).unwrap().tokens {
                    n += 1;
                    f += FILLERS.iter().any(|x| x.1 == t) as usize;
                }
            }
            assert!(n >= 10_000, "{n} tokens");
            assert!((f as f64 / n as f64 - rate).abs() < 0.02);
        }
    }

    #[test]
    fn rejects_bad_config() {
        assert!(generate(&SynthConfig {
            ad_fraction: 1.0,
            ..small()
        })
        .is_err());
        assert!(generate(&SynthConfig {
            vocab: vec![],
            ..small()
        })
        .is_err());
    }

    #[test]
    fn embeddings_cover_vocab() {
        let cfg = SynthConfig {
            embedding_dim: 3,
            ..small()
        };
        let text = embeddings_text(&cfg);
        let table: crate::features::EmbeddingTable<f64> = crate::features::parse_embeddings(text.as_bytes()).unwrap();
        assert_eq!(table.dim(), 3);
        assert!(table.contains("uh") && table.contains("boy"));
    }
}
