use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::FeatureError;
use crate::chat::{Demographics, Gender};
use crate::text::TokenSequence;

pub const FEATURE_DIM: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LexiconKind {
    Aoa,
    Concreteness,
    Familiarity,
    Imageability,
    Sentiment,
}

impl LexiconKind {
    pub const ALL: [LexiconKind; 5] = [
        LexiconKind::Aoa,
        LexiconKind::Concreteness,
        LexiconKind::Familiarity,
        LexiconKind::Imageability,
        LexiconKind::Sentiment,
    ];

    /// Position in the targeted feature vector.
    pub fn slot(self) -> usize {
        self as usize
    }

    pub fn file_stem(self) -> &'static str {
        match self {
            LexiconKind::Aoa => "aoa",
            LexiconKind::Concreteness => "concreteness",
            LexiconKind::Familiarity => "familiarity",
            LexiconKind::Imageability => "imageability",
            LexiconKind::Sentiment => "sentiment",
        }
    }

    /// Text of the packaged fixture lexicon.
    pub fn packaged_source(self) -> &'static str {
        match self {
            LexiconKind::Aoa => include_str!("../../fixtures/lexicons/aoa.tsv"),
            LexiconKind::Concreteness => include_str!("../../fixtures/lexicons/concreteness.tsv"),
            LexiconKind::Familiarity => include_str!("../../fixtures/lexicons/familiarity.tsv"),
            LexiconKind::Imageability => include_str!("../../fixtures/lexicons/imageability.tsv"),
            LexiconKind::Sentiment => include_str!("../../fixtures/lexicons/sentiment.tsv"),
        }
    }
}

/// Word → score table with a self-declared score range.
#[derive(Debug, Clone, PartialEq)]
pub struct Lexicon {
    pub kind: LexiconKind,
    pub range: (f64, f64),
    entries: HashMap<String, f64>,
}

impl Lexicon {
    /// Parses `# range lo hi` followed by `word<TAB>score` lines.
    pub fn parse(kind: LexiconKind, text: &str) -> Result<Self, FeatureError> {
        let bad = |line: usize, reason: &str| FeatureError::BadLexicon {
            name: kind.file_stem().to_string(),
            line,
            reason: reason.to_string(),
        };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| bad(1, "missing `# range lo hi` header"))?;
        let range: Vec<f64> = header
            .strip_prefix("# range")
            .ok_or_else(|| bad(1, "missing `# range lo hi` header"))?
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|_| bad(1, "range bounds must be numbers"))?;
        let &[lo, hi] = range.as_slice() else {
            return Err(bad(1, "range needs exactly two bounds"));
        };
        if lo > hi {
            return Err(bad(1, "range lower bound exceeds upper bound"));
        }
        let mut entries = HashMap::new();
        for (i, line) in lines {
            if line.starts_with('#') {
                continue;
            }
            let (word, score) = line
                .split_once('\t')
                .ok_or_else(|| bad(i + 1, "expected word<TAB>score"))?;
            let score: f64 = score.trim().parse().map_err(|_| bad(i + 1, "score is not a number"))?;
            if !(lo..=hi).contains(&score) {
                return Err(bad(
                    i + 1,
                    &format!("score {score} outside declared range [{lo}, {hi}]"),
                ));
            }
            entries.entry(word.trim().to_lowercase()).or_insert(score);
        }
        Ok(Lexicon {
            kind,
            range: (lo, hi),
            entries,
        })
    }

    pub fn load(kind: LexiconKind, path: &Path) -> Result<Self, FeatureError> {
        let text = fs::read_to_string(path).map_err(|source| FeatureError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(kind, &text)
    }

    pub fn packaged(kind: LexiconKind) -> Self {
        Self::parse(kind, kind.packaged_source()).expect("packaged lexicon is well formed")
    }

    pub fn get(&self, word: &str) -> Option<f64> {
        self.entries.get(word).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn words(&self) -> impl Iterator<Item = (&str, f64)> {
        self.entries.iter().map(|(w, &s)| (w.as_str(), s))
    }
}

/// Mean score over non-pad tokens found in the lexicon, and the fraction of
/// non-pad tokens found. Zero coverage gives `(0.0, 0.0)`.
pub fn mean_lexicon_score(seq: &TokenSequence, lex: &Lexicon) -> (f64, f64) {
    let mut total = 0.0;
    let mut found = 0usize;
    let mut seen = 0usize;
    for tok in seq.real_tokens() {
        seen += 1;
        if let Some(s) = lex.get(tok) {
            total += s;
            found += 1;
        }
    }
    if found == 0 {
        return (0.0, 0.0);
    }
    (total / found as f64, found as f64 / seen as f64)
}

/// One optional lexicon per slot.
#[derive(Debug, Clone, Default)]
pub struct LexiconSet {
    slots: [Option<Lexicon>; 5],
}

impl LexiconSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn packaged() -> Self {
        let mut set = Self::new();
        for kind in LexiconKind::ALL {
            set.insert(Lexicon::packaged(kind));
        }
        set
    }

    /// Loads `<stem>.tsv` for every kind from `dir`.
    pub fn load_dir(dir: &Path) -> Result<Self, FeatureError> {
        let mut set = Self::new();
        for kind in LexiconKind::ALL {
            set.insert(Lexicon::load(kind, &dir.join(format!("{}.tsv", kind.file_stem())))?);
        }
        Ok(set)
    }

    pub fn insert(&mut self, lex: Lexicon) {
        let slot = lex.kind.slot();
        self.slots[slot] = Some(lex);
    }

    pub fn get(&self, kind: LexiconKind) -> Option<&Lexicon> {
        self.slots[kind.slot()].as_ref()
    }
}

/// Targeted feature groups that can be ablated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureGroup {
    Psych,
    Sent,
    Demo,
}

impl FeatureGroup {
    pub const ALL: [FeatureGroup; 3] = [FeatureGroup::Psych, FeatureGroup::Sent, FeatureGroup::Demo];

    /// Slots of the feature vector owned by the group.
    pub fn slots(self) -> std::ops::Range<usize> {
        match self {
            FeatureGroup::Psych => 0..4,
            FeatureGroup::Sent => 4..5,
            FeatureGroup::Demo => 5..7,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            FeatureGroup::Psych => "Psych.",
            FeatureGroup::Sent => "Sent.",
            FeatureGroup::Demo => "Demo.",
        }
    }
}

/// `[aoa, concreteness, familiarity, imageability, sentiment, age/100, gender]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetedFeatureVector {
    pub values: [f64; FEATURE_DIM],
}

impl TargetedFeatureVector {
    pub fn aoa(&self) -> f64 {
        self.values[0]
    }
    pub fn concreteness(&self) -> f64 {
        self.values[1]
    }
    pub fn familiarity(&self) -> f64 {
        self.values[2]
    }
    pub fn imageability(&self) -> f64 {
        self.values[3]
    }
    pub fn sentiment(&self) -> f64 {
        self.values[4]
    }
    pub fn age(&self) -> f64 {
        self.values[5]
    }
    pub fn gender(&self) -> f64 {
        self.values[6]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageReport {
    /// Per lexicon, in [`LexiconKind::ALL`] order.
    pub fractions: [f64; 5],
}

pub fn coverage_report(seq: &TokenSequence, lexicons: &LexiconSet) -> Result<CoverageReport, FeatureError> {
    let mut fractions = [0.0; 5];
    for kind in LexiconKind::ALL {
        let lex = lexicons.get(kind).ok_or(FeatureError::MissingLexicon(kind))?;
        fractions[kind.slot()] = mean_lexicon_score(seq, lex).1;
    }
    Ok(CoverageReport { fractions })
}

/// Builds the 7-slot vector. Age is scaled by 1/100 (0 when absent);
/// gender codes Female 1, Male 0, Unknown 0.5.
pub fn build_feature_vector(
    seq: &TokenSequence,
    lexicons: &LexiconSet,
    demo: &Demographics,
) -> Result<TargetedFeatureVector, FeatureError> {
    let mut values = [0.0; FEATURE_DIM];
    for kind in LexiconKind::ALL {
        let lex = lexicons.get(kind).ok_or(FeatureError::MissingLexicon(kind))?;
        values[kind.slot()] = mean_lexicon_score(seq, lex).0;
    }
    values[5] = demo.age.map_or(0.0, |a| a as f64 / 100.0);
    values[6] = match demo.gender {
        Gender::Female => 1.0,
        Gender::Male => 0.0,
        Gender::Unknown => 0.5,
    };
    Ok(TargetedFeatureVector { values })
}

/// Model-input version of [`build_feature_vector`]: each lexicon mean is
/// rescaled to `[0, 1]` by its lexicon's declared range (zero coverage stays
/// 0); age and gender pass through.
pub fn scaled_feature_vector(
    seq: &TokenSequence,
    lexicons: &LexiconSet,
    demo: &Demographics,
) -> Result<TargetedFeatureVector, FeatureError> {
    let mut v = build_feature_vector(seq, lexicons, demo)?;
    for kind in LexiconKind::ALL {
        let lex = lexicons.get(kind).ok_or(FeatureError::MissingLexicon(kind))?;
        let (lo, hi) = lex.range;
        let slot = kind.slot();
        let covered = mean_lexicon_score(seq, lex).1 > 0.0;
        v.values[slot] = if covered && hi > lo {
            (v.values[slot] - lo) / (hi - lo)
        } else {
            0.0
        };
    }
    Ok(v)
}
