use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{parse_chat_file, ChatError, Gender, Label, TranscriptRecord};

/// Optional label manifest in a corpus root: `relative/path.cha<TAB>AD|CT[<TAB>participant_id]`.
pub const LABEL_MANIFEST: &str = "labels.tsv";

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Corpus {
    pub records: Vec<TranscriptRecord>,
    pub source_manifest: Vec<(PathBuf, String)>,
}

impl Corpus {
    /// Builds a corpus, rejecting duplicate transcript ids.
    pub fn new(records: Vec<TranscriptRecord>, source_manifest: Vec<(PathBuf, String)>) -> Result<Self, ChatError> {
        let mut seen = HashSet::new();
        for r in &records {
            if !seen.insert(r.transcript_id.as_str()) {
                return Err(ChatError::DuplicateTranscript(r.transcript_id.clone()));
            }
        }
        Ok(Corpus {
            records,
            source_manifest,
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// DementiaBank-style ids: `001-2.cha` is visit 2 of participant `001`.
fn ids_from_path(path: &Path) -> (String, String) {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let participant = stem.split('-').next().unwrap_or(&stem).to_string();
    (stem, participant)
}

fn chat_files(dir: &Path) -> Result<Vec<PathBuf>, ChatError> {
    let mut files = Vec::new();
    let entries = fs::read_dir(dir).map_err(|source| ChatError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    for entry in entries {
        let entry = entry.map_err(|source| ChatError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let p = entry.path();
        if p.is_file() && p.extension().is_some_and(|e| e == "cha") {
            files.push(p);
        }
    }
    files.sort();
    Ok(files)
}

fn find_subdir(root: &Path, name: &str) -> Option<PathBuf> {
    [name.to_string(), name.to_ascii_uppercase()]
        .into_iter()
        .map(|n| root.join(n))
        .find(|p| p.is_dir())
}

fn read_label_manifest(root: &Path) -> Result<Vec<(PathBuf, Label, Option<String>)>, ChatError> {
    let path = root.join(LABEL_MANIFEST);
    if !path.is_file() {
        return Ok(Vec::new());
    }
    let text = fs::read_to_string(&path).map_err(|source| ChatError::Io {
        path: path.clone(),
        source,
    })?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let bad = |reason: &str| ChatError::BadManifest {
            line: i + 1,
            reason: reason.to_string(),
        };
        if fields.len() < 2 {
            return Err(bad("expected path<TAB>label"));
        }
        let label = Label::parse(fields[1]).ok_or_else(|| bad("label must be AD or CT"))?;
        out.push((root.join(fields[0]), label, fields.get(2).map(|s| s.to_string())));
    }
    Ok(out)
}

/// Loads `ad/*.cha` and `ct/*.cha` under `root`, plus any files listed in
/// the optional `labels.tsv` manifest. Files are parsed in parallel; record
/// order follows sorted paths (directory files first, then manifest order).
pub fn load_corpus_dir(root: &Path) -> Result<Corpus, ChatError> {
    let mut jobs: Vec<(PathBuf, Label, Option<String>)> = Vec::new();
    for (name, label) in [("ad", Label::Ad), ("ct", Label::Ct)] {
        if let Some(dir) = find_subdir(root, name) {
            jobs.extend(chat_files(&dir)?.into_iter().map(|p| (p, label, None)));
        }
    }
    jobs.extend(read_label_manifest(root)?);
    if jobs.is_empty() {
        return Err(ChatError::EmptyCorpus);
    }

    let records: Vec<TranscriptRecord> = jobs
        .par_iter()
        .map(|(path, label, pid)| {
            let text = fs::read_to_string(path).map_err(|source| ChatError::Io {
                path: path.clone(),
                source,
            })?;
            let (tid, default_pid) = ids_from_path(path);
            let rec = parse_chat_file(&text, *label).map_err(|e| ChatError::File {
                path: path.clone(),
                source: Box::new(e),
            })?;
            Ok(rec.with_ids(tid, pid.clone().unwrap_or(default_pid)))
        })
        .collect::<Result<_, ChatError>>()?;
    let manifest = jobs
        .iter()
        .zip(&records)
        .map(|((p, _, _), r)| (p.clone(), r.transcript_id.clone()))
        .collect();
    Corpus::new(records, manifest)
}

/// Words spoken by the participant (terminal punctuation excluded).
pub fn participant_word_count(record: &TranscriptRecord) -> usize {
    crate::text::tokenize(&record.participant_text())
        .map(|s| s.original_length)
        .unwrap_or(0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsReport {
    pub participants: usize,
    pub participants_ad: usize,
    pub participants_ct: usize,
    pub transcripts: usize,
    pub transcripts_ad: usize,
    pub transcripts_ct: usize,
    pub median_words: usize,
    pub median_words_ad: Option<usize>,
    pub median_words_ct: Option<usize>,
}

/// Lower median: element `(n - 1) / 2` of the sorted list.
pub(crate) fn lower_median(mut xs: Vec<usize>) -> Option<usize> {
    if xs.is_empty() {
        return None;
    }
    xs.sort_unstable();
    Some(xs[(xs.len() - 1) / 2])
}

pub fn corpus_stats(corpus: &Corpus) -> Result<StatsReport, ChatError> {
    if corpus.is_empty() {
        return Err(ChatError::EmptyCorpus);
    }
    let mut counts: BTreeMap<Label, Vec<usize>> = BTreeMap::new();
    let mut people: BTreeMap<Label, BTreeSet<&str>> = BTreeMap::new();
    let mut all_people = BTreeSet::new();
    for r in &corpus.records {
        counts.entry(r.label).or_default().push(participant_word_count(r));
        people.entry(r.label).or_default().insert(&r.participant_id);
        all_people.insert(r.participant_id.as_str());
    }
    let n = |l: Label| counts.get(&l).map_or(0, Vec::len);
    let p = |l: Label| people.get(&l).map_or(0, BTreeSet::len);
    let med = |l: Label| counts.get(&l).and_then(|v| lower_median(v.clone()));
    Ok(StatsReport {
        participants: all_people.len(),
        participants_ad: p(Label::Ad),
        participants_ct: p(Label::Ct),
        transcripts: corpus.len(),
        transcripts_ad: n(Label::Ad),
        transcripts_ct: n(Label::Ct),
        median_words: lower_median(counts.values().flatten().copied().collect()).unwrap_or(0),
        median_words_ad: med(Label::Ad),
        median_words_ct: med(Label::Ct),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub transcript_id: String,
    pub participant_id: String,
    pub label: Label,
    pub age: Option<u32>,
    pub gender: Gender,
    pub word_count: usize,
}

impl ManifestEntry {
    pub fn from_record(r: &TranscriptRecord) -> Self {
        ManifestEntry {
            transcript_id: r.transcript_id.clone(),
            participant_id: r.participant_id.clone(),
            label: r.label,
            age: r.demographics.age,
            gender: r.demographics.gender,
            word_count: participant_word_count(r),
        }
    }
}

/// Writes one JSON object per record.
pub fn write_manifest(corpus: &Corpus, mut out: impl Write) -> std::io::Result<()> {
    for r in &corpus.records {
        let line = serde_json::to_string(&ManifestEntry::from_record(r)).map_err(std::io::Error::other)?;
        writeln!(out, "{line}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chat::Demographics;

    fn record(id: &str, pid: &str, label: Label, words: usize) -> TranscriptRecord {
        let text = format!("*PAR:\t{} .\n", vec!["word"; words.max(1)].join(" "));
        let mut r = parse_chat_file(&text, label).unwrap().with_ids(id, pid);
        if words == 0 {
            r.utterances[0].clean_text = ".".into();
        }
        r
    }

    #[test]
    fn median_odd() {
        assert_eq!(lower_median(vec![97, 65, 73]), Some(73));
    }

    #[test]
    fn median_even_takes_lower() {
        assert_eq!(lower_median(vec![20, 10]), Some(10));
    }

    #[test]
    fn stats_counts() {
        let corpus = Corpus::new(
            vec![
                record("001-0", "001", Label::Ad, 65),
                record("001-1", "001", Label::Ad, 60),
                record("002-0", "002", Label::Ct, 97),
            ],
            vec![],
        )
        .unwrap();
        let s = corpus_stats(&corpus).unwrap();
        assert_eq!(s.participants, 2);
        assert_eq!(s.transcripts_ad, 2);
        assert_eq!(s.transcripts_ct, 1);
        assert_eq!(s.median_words, 65);
        assert_eq!(s.median_words_ad, Some(60));
        assert_eq!(s.median_words_ct, Some(97));
    }

    #[test]
    fn stats_median_73() {
        let corpus = Corpus::new(
            vec![
                record("a", "a", Label::Ad, 65),
                record("b", "b", Label::Ad, 73),
                record("c", "c", Label::Ct, 97),
            ],
            vec![],
        )
        .unwrap();
        assert_eq!(corpus_stats(&corpus).unwrap().median_words, 73);
    }

    #[test]
    fn stats_empty() {
        assert!(matches!(corpus_stats(&Corpus::default()), Err(ChatError::EmptyCorpus)));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let r = record("x", "x", Label::Ad, 3);
        assert!(matches!(
            Corpus::new(vec![r.clone(), r], vec![]),
            Err(ChatError::DuplicateTranscript(_))
        ));
    }

    #[test]
    fn manifest_line_shape() {
        let mut r = record("001-0", "001", Label::Ad, 3);
        r.demographics = Demographics {
            age: Some(74),
            gender: Gender::Female,
        };
        let corpus = Corpus::new(vec![r], vec![]).unwrap();
        let mut buf = Vec::new();
        write_manifest(&corpus, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "{\"transcript_id\":\"001-0\",\"participant_id\":\"001\",\"label\":\"AD\",\"age\":74,\"gender\":\"Female\",\"word_count\":3}\n"
        );
    }

    #[test]
    fn loads_directory_layout_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        fs::create_dir_all(dir.path().join("ad")).unwrap();
        fs::create_dir_all(dir.path().join("ct")).unwrap();
        fs::create_dir_all(dir.path().join("extra")).unwrap();
        fs::write(dir.path().join("ad/001-0.cha"), "*PAR:\tthe boy .\n").unwrap();
        fs::write(dir.path().join("ad/001-1.cha"), "*PAR:\tthe girl .\n").unwrap();
        fs::write(dir.path().join("ct/002-0.cha"), "*PAR:\tthe sink .\n").unwrap();
        fs::write(dir.path().join("extra/s9.cha"), "*PAR:\tmother .\n").unwrap();
        fs::write(dir.path().join("ct/notes.txt"), "ignored").unwrap();
        fs::write(dir.path().join(LABEL_MANIFEST), "extra/s9.cha\tCT\tP9\n").unwrap();
        let c = load_corpus_dir(dir.path()).unwrap();
        let ids: Vec<_> = c
            .records
            .iter()
            .map(|r| (r.transcript_id.as_str(), r.participant_id.as_str(), r.label))
            .collect();
        assert_eq!(
            ids,
            vec![
                ("001-0", "001", Label::Ad),
                ("001-1", "001", Label::Ad),
                ("002-0", "002", Label::Ct),
                ("s9", "P9", Label::Ct),
            ]
        );
        assert_eq!(c.source_manifest.len(), 4);
    }

    #[test]
    fn parse_error_names_file() {
        let dir = tempfile::tempdir().unwrap();
        fs::create_dir_all(dir.path().join("ad")).unwrap();
        fs::write(dir.path().join("ad/bad.cha"), "*INV:\thello .\n").unwrap();
        let err = load_corpus_dir(dir.path()).unwrap_err();
        assert!(err.to_string().contains("bad.cha"));
    }
}
