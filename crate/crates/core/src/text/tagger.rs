//! Greedy averaged-perceptron POS tagger.
//!
//! Feature templates follow the usual left-to-right design: word identity,
//! affixes, surrounding words and the two previously predicted tags.
//! Frequent unambiguous words are resolved through a tag dictionary.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use super::{parse_pretagged, PosTagSequence, Tag, TagSet, TaggedSentence, TextError, TokenSequence, PAD_TOKEN};

const FIXTURE_CORPUS: &str = include_str!("../../fixtures/tagged_corpus.tsv");
const DICT_PREFIX: &str = "dict ";
const DICT_MIN_FREQ: usize = 3;
const DICT_MIN_SHARE: f64 = 0.97;

/// The packaged hand-annotated picture-description sentences.
pub fn fixture_tagged_corpus() -> Vec<TaggedSentence> {
    parse_pretagged(FIXTURE_CORPUS, TagSet::penn()).expect("packaged tagged corpus is well formed")
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PerceptronTagger {
    weights: HashMap<String, Vec<f64>>,
    tag_dict: HashMap<String, Tag>,
}

fn shape_word(w: &str) -> String {
    if w.contains('-') && !w.starts_with('-') {
        "!HYPHEN".into()
    } else if w.len() == 4 && w.chars().all(|c| c.is_ascii_digit()) {
        "!YEAR".into()
    } else if w.starts_with(|c: char| c.is_ascii_digit()) {
        "!DIGITS".into()
    } else {
        w.to_lowercase()
    }
}

fn suffix(w: &str) -> &str {
    let n = w.chars().count();
    let skip = n.saturating_sub(3);
    let start = w.char_indices().nth(skip).map_or(0, |(i, _)| i);
    &w[start..]
}

fn prefix1(w: &str) -> &str {
    w.char_indices().nth(1).map_or(w, |(i, _)| &w[..i])
}

fn features(i: usize, word: &str, ctx: &[String], prev: &str, prev2: &str) -> Vec<String> {
    // ctx is padded with two start and two end markers, so position i of the
    // sentence sits at ctx[i + 2].
    let i = i + 2;
    vec![
        "bias".to_string(),
        format!("i suffix {}", suffix(word)),
        format!("i pref1 {}", prefix1(word)),
        format!("i-1 tag {prev}"),
        format!("i-2 tag {prev2}"),
        format!("i tag+i-2 tag {prev} {prev2}"),
        format!("i word {}", ctx[i]),
        format!("i-1 tag+i word {prev} {}", ctx[i]),
        format!("i-1 word {}", ctx[i - 1]),
        format!("i-1 suffix {}", suffix(&ctx[i - 1])),
        format!("i-2 word {}", ctx[i - 2]),
        format!("i+1 word {}", ctx[i + 1]),
        format!("i+1 suffix {}", suffix(&ctx[i + 1])),
        format!("i+2 word {}", ctx[i + 2]),
    ]
}

fn context(words: &[String]) -> Vec<String> {
    let mut ctx = vec!["-START-".to_string(), "-START2-".to_string()];
    ctx.extend(words.iter().map(|w| shape_word(w)));
    ctx.push("-END-".into());
    ctx.push("-END2-".into());
    ctx
}

struct Trainer {
    weights: HashMap<String, Vec<f64>>,
    totals: HashMap<String, Vec<f64>>,
    stamps: HashMap<String, Vec<u64>>,
    instances: u64,
    ntags: usize,
}

impl Trainer {
    fn update(&mut self, truth: Tag, guess: Tag, feats: &[String]) {
        self.instances += 1;
        if truth == guess {
            return;
        }
        for f in feats {
            let n = self.ntags;
            let w = self.weights.entry(f.clone()).or_insert_with(|| vec![0.0; n]);
            let tot = self.totals.entry(f.clone()).or_insert_with(|| vec![0.0; n]);
            let st = self.stamps.entry(f.clone()).or_insert_with(|| vec![0; n]);
            for (tag, delta) in [(truth, 1.0), (guess, -1.0)] {
                let k = tag.index();
                tot[k] += (self.instances - st[k]) as f64 * w[k];
                st[k] = self.instances;
                w[k] += delta;
            }
        }
    }

    fn averaged(mut self) -> HashMap<String, Vec<f64>> {
        let inst = self.instances.max(1);
        for (f, w) in self.weights.iter_mut() {
            let tot = &self.totals[f];
            let st = &self.stamps[f];
            for k in 0..w.len() {
                let total = tot[k] + (inst - st[k]) as f64 * w[k];
                w[k] = total / inst as f64;
            }
        }
        self.weights.retain(|_, w| w.iter().any(|&v| v != 0.0));
        self.weights
    }
}

impl PerceptronTagger {
    /// A model with no weights; every word is tagged `NN`.
    pub fn untrained() -> Self {
        Self::default()
    }

    /// Trains on the packaged fixture corpus for five epochs.
    pub fn packaged() -> Self {
        Self::train(&fixture_tagged_corpus(), 5).expect("fixture corpus trains")
    }

    pub fn train(corpus: &[TaggedSentence], epochs: usize) -> Result<Self, TextError> {
        if corpus.is_empty() || corpus.iter().all(Vec::is_empty) {
            return Err(TextError::EmptyCorpus);
        }
        if epochs == 0 {
            return Err(TextError::ZeroEpochs);
        }
        let tagset = TagSet::penn();
        let mut model = PerceptronTagger {
            weights: HashMap::new(),
            tag_dict: build_tag_dict(corpus),
        };
        let mut trainer = Trainer {
            weights: HashMap::new(),
            totals: HashMap::new(),
            stamps: HashMap::new(),
            instances: 0,
            ntags: tagset.len(),
        };
        for _ in 0..epochs {
            for sentence in corpus {
                let words: Vec<String> = sentence.iter().map(|(w, _)| w.clone()).collect();
                let ctx = context(&words);
                let (mut prev, mut prev2) = ("-START-".to_string(), "-START2-".to_string());
                for (i, (word, truth)) in sentence.iter().enumerate() {
                    let guess = match model.tag_dict.get(word) {
                        Some(&t) => t,
                        None => {
                            let feats = features(i, word, &ctx, &prev, &prev2);
                            let g = predict_with(&trainer.weights, &feats);
                            trainer.update(*truth, g, &feats);
                            g
                        }
                    };
                    prev2 = prev;
                    prev = tagset.name(guess).to_string();
                }
            }
        }
        model.weights = trainer.averaged();
        Ok(model)
    }

    fn predict(&self, feats: &[String]) -> Tag {
        predict_with(&self.weights, feats)
    }

    /// Tags a token sequence; pad tokens always receive PAD.
    pub fn tag(&self, seq: &TokenSequence) -> PosTagSequence {
        let tagset = TagSet::penn();
        let real: Vec<String> = seq.real_tokens().map(str::to_string).collect();
        let ctx = context(&real);
        let (mut prev, mut prev2) = ("-START-".to_string(), "-START2-".to_string());
        let mut tags = Vec::with_capacity(seq.len());
        let mut i = 0;
        for tok in &seq.tokens {
            if tok == PAD_TOKEN {
                tags.push(Tag::PAD);
                continue;
            }
            let t = match self.tag_dict.get(tok) {
                Some(&t) => t,
                None => self.predict(&features(i, tok, &ctx, &prev, &prev2)),
            };
            prev2 = prev;
            prev = tagset.name(t).to_string();
            tags.push(t);
            i += 1;
        }
        PosTagSequence { tags }
    }

    pub fn tag_words(&self, words: &[&str]) -> Vec<String> {
        let seq = TokenSequence {
            tokens: words.iter().map(|w| w.to_string()).collect(),
            original_length: words.len(),
        };
        self.tag(&seq)
            .tags
            .iter()
            .map(|&t| TagSet::penn().name(t).to_string())
            .collect()
    }

    /// Fraction of tokens whose predicted tag matches the gold tag.
    pub fn accuracy(&self, corpus: &[TaggedSentence]) -> f64 {
        let (mut right, mut total) = (0usize, 0usize);
        for s in corpus {
            let seq = TokenSequence {
                tokens: s.iter().map(|(w, _)| w.clone()).collect(),
                original_length: s.len(),
            };
            let pred = self.tag(&seq);
            right += pred.tags.iter().zip(s).filter(|(p, (_, g))| *p == g).count();
            total += s.len();
        }
        right as f64 / total.max(1) as f64
    }

    /// `PTAG v1` text format: `feature<TAB>tag<TAB>weight` lines, sorted.
    /// Tag-dictionary entries use the feature `dict <word>` with weight 1.
    pub fn to_text(&self) -> String {
        let tagset = TagSet::penn();
        let mut out = String::from("PTAG v1\n");
        let sorted: BTreeMap<_, _> = self.weights.iter().collect();
        for (f, w) in sorted {
            for (k, &v) in w.iter().enumerate() {
                if v != 0.0 {
                    let _ = writeln!(out, "{f}\t{}\t{v}", tagset.name(Tag(k as u8)));
                }
            }
        }
        let dict: BTreeMap<_, _> = self.tag_dict.iter().collect();
        for (word, &t) in dict {
            let _ = writeln!(out, "{DICT_PREFIX}{word}\t{}\t1", tagset.name(t));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, TextError> {
        let tagset = TagSet::penn();
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, "PTAG v1")) => {}
            _ => {
                return Err(TextError::BadModel {
                    line: 1,
                    reason: "expected header `PTAG v1`".into(),
                })
            }
        }
        let mut model = PerceptronTagger::default();
        for (i, line) in lines {
            if line.is_empty() {
                continue;
            }
            let bad = |reason: &str| TextError::BadModel {
                line: i + 1,
                reason: reason.to_string(),
            };
            let mut parts = line.split('\t');
            let (Some(f), Some(t), Some(w), None) = (parts.next(), parts.next(), parts.next(), parts.next()) else {
                return Err(bad("expected feature<TAB>tag<TAB>weight"));
            };
            let tag = tagset.tag(t)?;
            let weight: f64 = w.parse().map_err(|_| bad("weight is not a number"))?;
            if let Some(word) = f.strip_prefix(DICT_PREFIX) {
                model.tag_dict.insert(word.to_string(), tag);
            } else {
                model
                    .weights
                    .entry(f.to_string())
                    .or_insert_with(|| vec![0.0; tagset.len()])[tag.index()] = weight;
            }
        }
        Ok(model)
    }
}

fn predict_with(weights: &HashMap<String, Vec<f64>>, feats: &[String]) -> Tag {
    let tagset = TagSet::penn();
    let mut scores = vec![0.0f64; tagset.len()];
    for f in feats {
        if let Some(w) = weights.get(f) {
            for (s, &v) in scores.iter_mut().zip(w) {
                *s += v;
            }
        }
    }
    let real = &scores[1..];
    if real.iter().all(|&s| s == real[0]) {
        return tagset.get("NN").unwrap();
    }
    // First maximum in tagset order, never PAD.
    let mut best = 1;
    for k in 2..scores.len() {
        if scores[k] > scores[best] {
            best = k;
        }
    }
    Tag(best as u8)
}

fn build_tag_dict(corpus: &[TaggedSentence]) -> HashMap<String, Tag> {
    let mut counts: BTreeMap<&str, BTreeMap<Tag, usize>> = BTreeMap::new();
    for s in corpus {
        for (w, t) in s {
            *counts.entry(w.as_str()).or_default().entry(*t).or_default() += 1;
        }
    }
    counts
        .into_iter()
        .filter_map(|(w, tags)| {
            let n: usize = tags.values().sum();
            let (&tag, &mode) = tags.iter().max_by_key(|(t, c)| (**c, std::cmp::Reverse(**t)))?;
            (n >= DICT_MIN_FREQ && mode as f64 / n as f64 >= DICT_MIN_SHARE).then(|| (w.to_string(), tag))
        })
        .collect()
}

/// Trains from string-tagged sentences, validating every tag name.
pub fn train_tagger(corpus: &[(Vec<String>, Vec<String>)], epochs: usize) -> Result<PerceptronTagger, TextError> {
    if corpus.iter().all(|(w, _)| w.is_empty()) {
        return Err(TextError::EmptyCorpus);
    }
    let tagset = TagSet::penn();
    let sentences = corpus
        .iter()
        .map(|(words, tags)| {
            words
                .iter()
                .zip(tags)
                .map(|(w, t)| Ok((w.to_lowercase(), tagset.tag(t)?)))
                .collect::<Result<TaggedSentence, TextError>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    PerceptronTagger::train(&sentences, epochs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::{fix_length, tokenize};

    fn majority_baseline(corpus: &[TaggedSentence]) -> f64 {
        let mut counts: HashMap<Tag, usize> = HashMap::new();
        let mut total = 0;
        for s in corpus {
            for (_, t) in s {
                *counts.entry(*t).or_default() += 1;
                total += 1;
            }
        }
        *counts.values().max().unwrap() as f64 / total as f64
    }

    #[test]
    fn fixture_training_accuracy() {
        let corpus = fixture_tagged_corpus();
        assert!(corpus.len() >= 50);
        let model = PerceptronTagger::train(&corpus, 5).unwrap();
        let acc = model.accuracy(&corpus);
        assert!(acc >= 0.90, "training accuracy {acc}");
        assert!(acc >= majority_baseline(&corpus));
    }

    #[test]
    fn tags_determiner_noun() {
        let model = PerceptronTagger::packaged();
        assert_eq!(model.tag_words(&["the", "boy"]), vec!["DT", "NN"]);
    }

    #[test]
    fn empty_corpus_error() {
        assert!(matches!(train_tagger(&[], 5), Err(TextError::EmptyCorpus)));
    }

    #[test]
    fn unknown_tag_error() {
        let c = vec![(vec!["boy".to_string()], vec!["NOUN".to_string()])];
        assert!(matches!(train_tagger(&c, 1), Err(TextError::UnknownTag(_))));
    }

    #[test]
    fn memorizes_repeated_sentence() {
        let words: Vec<String> = "the mother is drying a dish".split(' ').map(String::from).collect();
        let tags: Vec<String> = "DT NN VBZ VBG DT NN".split(' ').map(String::from).collect();
        let corpus = vec![(words.clone(), tags.clone()); 10];
        let model = train_tagger(&corpus, 3).unwrap();
        let refs: Vec<&str> = words.iter().map(String::as_str).collect();
        assert_eq!(model.tag_words(&refs), tags);
    }

    #[test]
    fn pads_get_pad() {
        let model = PerceptronTagger::packaged();
        let seq = TokenSequence {
            tokens: vec![PAD_TOKEN.into(), PAD_TOKEN.into()],
            original_length: 1,
        };
        assert_eq!(model.tag(&seq).tags, vec![Tag::PAD, Tag::PAD]);
    }

    #[test]
    fn untrained_defaults_to_nn() {
        assert_eq!(PerceptronTagger::untrained().tag_words(&["zzzz"]), vec!["NN"]);
    }

    #[test]
    fn tagging_is_deterministic_and_aligned() {
        let model = PerceptronTagger::packaged();
        let seq = fix_length(
            &tokenize("uh the boy is on the stool and the water is running").unwrap(),
            20,
        );
        let a = model.tag(&seq);
        assert_eq!(a, model.tag(&seq));
        assert_eq!(a.len(), seq.len());
        assert_eq!(a.tags[12..], [Tag::PAD; 8]);
        assert!(a.tags[..12].iter().all(|&t| t != Tag::PAD));
        assert_eq!(TagSet::penn().name(a.tags[0]), "UH");
    }

    #[test]
    fn text_format_roundtrip() {
        let model = PerceptronTagger::packaged();
        let text = model.to_text();
        assert!(text.starts_with("PTAG v1\n"));
        let back = PerceptronTagger::from_text(&text).unwrap();
        assert_eq!(back, model);
    }

    #[test]
    fn bad_header() {
        assert!(matches!(
            PerceptronTagger::from_text("PTAG v2\n"),
            Err(TextError::BadModel { line: 1, .. })
        ));
    }
}
