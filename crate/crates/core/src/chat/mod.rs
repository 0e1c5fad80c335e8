//! CHAT-subset transcript ingestion.
//!
//! Main tiers (`*PAR:`, `*INV:`, ...) carry speech, `@` lines carry
//! metadata (only `@ID` is interpreted), `%` dependent tiers are skipped and
//! tab-indented lines continue the previous line.

mod corpus;
mod normalize;
mod parse;

pub use corpus::{
    corpus_stats, load_corpus_dir, participant_word_count, write_manifest, Corpus, ManifestEntry, StatsReport,
};
pub use normalize::{normalize_utterance, normalize_with_warnings};
pub use parse::{parse_chat_body, parse_chat_file, ParsedChat};

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ChatError {
    #[error("no *PAR: tier in transcript")]
    MissingParticipantTier,
    #[error("malformed tier on line {line}: {text:?}")]
    MalformedTier { line: usize, text: String },
    #[error("bad demographics: {0}")]
    BadDemographics(String),
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("duplicate transcript id {0}")]
    DuplicateTranscript(String),
    #[error("bad label manifest line {line}: {reason}")]
    BadManifest { line: usize, reason: String },
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: Box<ChatError>,
    },
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SpeakerCode {
    Participant,
    Interviewer,
    Other(String),
}

impl SpeakerCode {
    /// Maps a tier tag; `None` when the tag is not 1–7 uppercase letters or digits.
    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "PAR" => Some(SpeakerCode::Participant),
            "INV" => Some(SpeakerCode::Interviewer),
            t if (1..=7).contains(&t.len()) && t.chars().all(|c| c.is_ascii_uppercase() || c.is_ascii_digit()) => {
                Some(SpeakerCode::Other(t.to_string()))
            }
            _ => None,
        }
    }

    pub fn tag(&self) -> &str {
        match self {
            SpeakerCode::Participant => "PAR",
            SpeakerCode::Interviewer => "INV",
            SpeakerCode::Other(t) => t,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Utterance {
    pub speaker: SpeakerCode,
    pub raw_text: String,
    pub clean_text: String,
    pub index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gender {
    Female,
    Male,
    Unknown,
}

impl Gender {
    pub fn as_chat(self) -> &'static str {
        match self {
            Gender::Female => "female",
            Gender::Male => "male",
            Gender::Unknown => "",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Demographics {
    /// Years, in `1..=130`; `None` when the `@ID` age field is empty or absent.
    pub age: Option<u32>,
    pub gender: Gender,
}

impl Default for Demographics {
    fn default() -> Self {
        Demographics {
            age: None,
            gender: Gender::Unknown,
        }
    }
}

/// Diagnosis group. AD is the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "AD")]
    Ad,
    #[serde(rename = "CT")]
    Ct,
}

impl Label {
    pub fn is_positive(self) -> bool {
        self == Label::Ad
    }

    pub fn target(self) -> f64 {
        match self {
            Label::Ad => 1.0,
            Label::Ct => 0.0,
        }
    }

    pub fn parse(s: &str) -> Option<Label> {
        match s.trim().to_ascii_uppercase().as_str() {
            "AD" => Some(Label::Ad),
            "CT" => Some(Label::Ct),
            _ => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Ad => "AD",
            Label::Ct => "CT",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranscriptRecord {
    pub transcript_id: String,
    pub participant_id: String,
    pub utterances: Vec<Utterance>,
    pub demographics: Demographics,
    pub label: Label,
    /// Unknown bracket codes dropped during normalization.
    pub warnings: usize,
}

impl TranscriptRecord {
    pub fn with_ids(mut self, transcript_id: impl Into<String>, participant_id: impl Into<String>) -> Self {
        self.transcript_id = transcript_id.into();
        self.participant_id = participant_id.into();
        self
    }

    /// Clean text of participant utterances, in order, single-space joined.
    pub fn participant_text(&self) -> String {
        extract_participant_text(&self.utterances)
    }

    /// Serializes back to the CHAT subset accepted by [`parse_chat_file`].
    pub fn to_chat(&self) -> String {
        to_chat(&self.utterances, &self.demographics)
    }
}

pub fn extract_participant_text(utterances: &[Utterance]) -> String {
    utterances
        .iter()
        .filter(|u| u.speaker == SpeakerCode::Participant && !u.clean_text.is_empty())
        .map(|u| u.clean_text.as_str())
        .collect::<Vec<_>>()
        .join(" ")
}

pub(crate) fn to_chat(utterances: &[Utterance], demo: &Demographics) -> String {
    let mut speakers: Vec<&SpeakerCode> = Vec::new();
    for u in utterances {
        if !speakers.contains(&&u.speaker) {
            speakers.push(&u.speaker);
        }
    }
    let roles: Vec<String> = speakers
        .iter()
        .map(|s| match s {
            SpeakerCode::Participant => "PAR Participant".to_string(),
            SpeakerCode::Interviewer => "INV Investigator".to_string(),
            SpeakerCode::Other(t) => format!("{t} Unidentified"),
        })
        .collect();
    let age = demo.age.map(|a| format!("{a};")).unwrap_or_default();
    let mut out = String::new();
    out.push_str("@UTF8\n@Begin\n@Languages:\teng\n");
    out.push_str(&format!("@Participants:\t{}\n", roles.join(", ")));
    out.push_str(&format!(
        "@ID:\teng|Pitt|PAR|{age}|{}||||Participant|||\n",
        demo.gender.as_chat()
    ));
    for u in utterances {
        out.push_str(&format!("*{}:\t{}\n", u.speaker.tag(), u.raw_text));
    }
    out.push_str("@End\n");
    out
}
