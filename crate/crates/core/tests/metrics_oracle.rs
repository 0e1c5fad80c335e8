//! Library metrics against straightforward re-derivations.

use adnet::eval::{auc_pairs, confusion, metrics, roc_curve};
use adnet::Label;
use proptest::prelude::*;

/// Mann-Whitney U with average ranks for ties, normalized.
fn rank_auc(scores: &[f64], labels: &[Label]) -> Option<f64> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());
    let mut ranks = vec![0.0; scores.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    let pos = labels.iter().filter(|&&l| l == Label::Ad).count() as f64;
    let neg = labels.len() as f64 - pos;
    if pos == 0.0 || neg == 0.0 {
        return None;
    }
    let rank_sum: f64 = labels
        .iter()
        .zip(&ranks)
        .filter(|(l, _)| **l == Label::Ad)
        .map(|(_, r)| r)
        .sum();
    Some((rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg))
}

fn labels_strategy(n: usize) -> impl Strategy<Value = Vec<Label>> {
    proptest::collection::vec(prop_oneof![Just(Label::Ad), Just(Label::Ct)], n)
}

proptest! {
    #[test]
    fn auc_matches_rank_statistic(
        (scores, labels) in (2usize..80).prop_flat_map(|n| (proptest::collection::vec(0u8..20, n), labels_strategy(n)))
    ) {
        let scores: Vec<f64> = scores.into_iter().map(|s| s as f64 / 19.0).collect();
        let ours = auc_pairs(&scores, &labels).unwrap();
        let oracle = rank_auc(&scores, &labels);
        match (ours, oracle) {
            (Some(a), Some(b)) => prop_assert!((a - b).abs() < 1e-12, "{} vs {}", a, b),
            (a, b) => prop_assert_eq!(a, b),
        }
    }

    #[test]
    fn threshold_metrics_by_hand(
        (truth, pred) in (1usize..100).prop_flat_map(|n| (labels_strategy(n), labels_strategy(n)))
    ) {
        let c = confusion(&truth, &pred).unwrap();
        let count = |t: Label, p: Label| truth.iter().zip(&pred).filter(|(a, b)| **a == t && **b == p).count() as f64;
        prop_assert_eq!(c.tp, count(Label::Ad, Label::Ad));
        prop_assert_eq!(c.fp, count(Label::Ct, Label::Ad));
        prop_assert_eq!(c.fn_, count(Label::Ad, Label::Ct));
        prop_assert_eq!(c.tn, count(Label::Ct, Label::Ct));
        let scores: Vec<f64> = pred.iter().map(|&p| if p == Label::Ad { 0.9 } else { 0.1 }).collect();
        let m = metrics(c, &scores, &truth).unwrap();
        let n = truth.len() as f64;
        prop_assert!((m.accuracy - (c.tp + c.tn) / n).abs() < 1e-12);
        if c.tp + c.fp > 0.0 && c.tp + c.fn_ > 0.0 && c.tp > 0.0 {
            let p = c.tp / (c.tp + c.fp);
            let r = c.tp / (c.tp + c.fn_);
            prop_assert!((m.f1 - 2.0 * p * r / (p + r)).abs() < 1e-12);
        }
    }

    #[test]
    fn roc_is_monotone_and_anchored(
        (scores, labels) in (2usize..50).prop_flat_map(|n| (proptest::collection::vec(0.0f64..1.0, n), labels_strategy(n)))
    ) {
        prop_assume!(labels.contains(&Label::Ad) && labels.contains(&Label::Ct));
        let roc = roc_curve(&scores, &labels).unwrap();
        let first = roc.first().unwrap();
        let last = roc.last().unwrap();
        prop_assert_eq!((first.fpr, first.tpr), (0.0, 0.0));
        prop_assert_eq!((last.fpr, last.tpr), (1.0, 1.0));
        for w in roc.windows(2) {
            prop_assert!(w[1].fpr >= w[0].fpr && w[1].tpr >= w[0].tpr);
        }
    }
}

#[test]
fn perfect_and_inverted_rankings() {
    let labels = [Label::Ct, Label::Ct, Label::Ad, Label::Ad];
    assert_eq!(auc_pairs(&[0.1, 0.2, 0.8, 0.9], &labels).unwrap(), Some(1.0));
    assert_eq!(auc_pairs(&[0.9, 0.8, 0.2, 0.1], &labels).unwrap(), Some(0.0));
    assert_eq!(auc_pairs(&[0.5; 4], &labels).unwrap(), Some(0.5));
}
