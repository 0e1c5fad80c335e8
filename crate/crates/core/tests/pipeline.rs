//! Synthetic corpus on disk → parser → encoder.

use adnet::chat::{corpus_stats, load_corpus_dir, ManifestEntry};
use adnet::encode::Encoder;
use adnet::features::{load_embeddings, LexiconSet};
use adnet::synth::{generate, SynthConfig};
use adnet::text::{PerceptronTagger, SEQ_LEN};
use adnet::Label;

fn small() -> SynthConfig {
    SynthConfig {
        n_participants: 30,
        ..Default::default()
    }
}

#[test]
fn disk_roundtrip_preserves_records() {
    let dir = tempfile::tempdir().unwrap();
    let generated = generate(&small()).unwrap();
    generated.write_to(dir.path()).unwrap();
    let loaded = load_corpus_dir(dir.path()).unwrap();
    assert_eq!(loaded.len(), generated.corpus.len());
    for r in &loaded.records {
        let orig = generated
            .corpus
            .records
            .iter()
            .find(|o| o.transcript_id == r.transcript_id)
            .unwrap();
        assert_eq!(r.label, orig.label);
        assert_eq!(r.participant_id, orig.participant_id);
        assert_eq!(r.demographics, orig.demographics);
        assert_eq!(r.participant_text(), orig.participant_text());
    }
}

#[test]
fn manifest_lists_every_transcript() {
    let dir = tempfile::tempdir().unwrap();
    let generated = generate(&small()).unwrap();
    generated.write_to(dir.path()).unwrap();
    let text = std::fs::read_to_string(dir.path().join("manifest.jsonl")).unwrap();
    let entries: Vec<ManifestEntry> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(entries.len(), 60);
    let ad = entries.iter().filter(|e| e.label == Label::Ad).count();
    assert_eq!(ad, 2 * (30.0 * 1049.0 / 1292.0f64).round() as usize);
}

#[test]
fn stats_follow_generator_settings() {
    let generated = generate(&SynthConfig {
        n_participants: 100,
        ..Default::default()
    })
    .unwrap();
    let s = corpus_stats(&generated.corpus).unwrap();
    assert_eq!(s.participants, 100);
    assert_eq!(s.participants_ad, 81);
    assert_eq!(s.transcripts, 200);
    let (ad, ct) = (s.median_words_ad.unwrap() as f64, s.median_words_ct.unwrap() as f64);
    assert!((ad - 65.0).abs() < 8.0, "AD median {ad}");
    assert!((ct - 97.0).abs() < 12.0, "CT median {ct}");
}

#[test]
fn encoded_instances_have_fixed_shape() {
    let dir = tempfile::tempdir().unwrap();
    generate(&small()).unwrap().write_to(dir.path()).unwrap();
    let corpus = load_corpus_dir(dir.path()).unwrap();
    let table = load_embeddings::<f64>(&dir.path().join("embeddings.txt")).unwrap();
    let lexicons = LexiconSet::load_dir(&dir.path().join("lexicons")).unwrap();
    let enc = Encoder::new(table, lexicons, PerceptronTagger::packaged());
    let instances = enc.encode_all(&corpus.records).unwrap();
    assert_eq!(instances.len(), corpus.len());
    for (inst, rec) in instances.iter().zip(&corpus.records) {
        assert_eq!(inst.transcript_id, rec.transcript_id);
        assert_eq!(inst.embedding.shape(), &[SEQ_LEN, 50]);
        assert_eq!(inst.pos.shape(), &[SEQ_LEN, 37]);
        assert!(inst.features.iter().all(|f| (0.0..=1.0).contains(f)));
        let real = inst.mask.iter().filter(|&&m| m).count();
        assert!((5..=SEQ_LEN).contains(&real));
        // Padding is a suffix.
        assert!(inst.mask.windows(2).all(|w| w[0] || !w[1]));
        for t in real..SEQ_LEN {
            assert!(inst.embedding.row(t).iter().all(|&v| v == 0.0));
        }
    }
}
