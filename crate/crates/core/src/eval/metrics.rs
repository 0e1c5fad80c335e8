use serde::Serialize;

use super::EvalError;
use crate::Label;

/// Confusion counts; reals so that seed averages fit the same type.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ConfusionCounts {
    pub tn: f64,
    pub fp: f64,
    #[serde(rename = "fn")]
    pub fn_: f64,
    pub tp: f64,
}

impl ConfusionCounts {
    pub fn total(&self) -> f64 {
        self.tn + self.fp + self.fn_ + self.tp
    }
}

/// Set when a metric's denominator was zero and it was reported as 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct UndefinedFlags {
    pub precision: bool,
    pub recall: bool,
    pub f1: bool,
    pub auc: bool,
}

impl UndefinedFlags {
    pub fn any(&self) -> bool {
        self.precision || self.recall || self.f1 || self.auc
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub auc: f64,
    pub counts: ConfusionCounts,
    pub undefined: UndefinedFlags,
}

impl MetricsReport {
    /// Threshold metrics from counts alone; AUC is left 0 and flagged.
    pub fn from_counts(counts: ConfusionCounts) -> Self {
        let ConfusionCounts { tn, fp, fn_, tp } = counts;
        let mut undefined = UndefinedFlags {
            auc: true,
            ..Default::default()
        };
        let ratio = |num: f64, den: f64, flag: &mut bool| {
            if den > 0.0 {
                num / den
            } else {
                *flag = true;
                0.0
            }
        };
        let total = counts.total();
        let accuracy = if total > 0.0 { (tp + tn) / total } else { 0.0 };
        let precision = ratio(tp, tp + fp, &mut undefined.precision);
        let recall = ratio(tp, tp + fn_, &mut undefined.recall);
        let f1 = ratio(2.0 * precision * recall, precision + recall, &mut undefined.f1);
        undefined.f1 |= undefined.precision || undefined.recall;
        MetricsReport {
            accuracy,
            precision,
            recall,
            f1,
            auc: 0.0,
            counts,
            undefined,
        }
    }

    /// Metric-level mean: every field is the arithmetic mean over `reports`.
    pub fn mean(reports: &[MetricsReport]) -> Self {
        assert!(!reports.is_empty(), "mean of no reports");
        let n = reports.len() as f64;
        let avg = |f: &dyn Fn(&MetricsReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
        MetricsReport {
            accuracy: avg(&|r| r.accuracy),
            precision: avg(&|r| r.precision),
            recall: avg(&|r| r.recall),
            f1: avg(&|r| r.f1),
            auc: avg(&|r| r.auc),
            counts: ConfusionCounts {
                tn: avg(&|r| r.counts.tn),
                fp: avg(&|r| r.counts.fp),
                fn_: avg(&|r| r.counts.fn_),
                tp: avg(&|r| r.counts.tp),
            },
            undefined: reports.iter().fold(UndefinedFlags::default(), |a, r| UndefinedFlags {
                precision: a.precision || r.undefined.precision,
                recall: a.recall || r.undefined.recall,
                f1: a.f1 || r.undefined.f1,
                auc: a.auc || r.undefined.auc,
            }),
        }
    }
}

fn same_len(a: usize, b: usize) -> Result<(), EvalError> {
    if a != b {
        return Err(EvalError::LengthMismatch { left: a, right: b });
    }
    Ok(())
}

pub fn confusion(labels: &[Label], predictions: &[Label]) -> Result<ConfusionCounts, EvalError> {
    same_len(labels.len(), predictions.len())?;
    let mut c = ConfusionCounts::default();
    for (&y, &p) in labels.iter().zip(predictions) {
        match (y, p) {
            (Label::Ct, Label::Ct) => c.tn += 1.0,
            (Label::Ct, Label::Ad) => c.fp += 1.0,
            (Label::Ad, Label::Ct) => c.fn_ += 1.0,
            (Label::Ad, Label::Ad) => c.tp += 1.0,
        }
    }
    Ok(c)
}

/// Threshold metrics from `counts` plus AUC from `scores`.
pub fn metrics(counts: ConfusionCounts, scores: &[f64], labels: &[Label]) -> Result<MetricsReport, EvalError> {
    let mut r = MetricsReport::from_counts(counts);
    match auc_pairs(scores, labels)? {
        Some(a) => {
            r.auc = a;
            r.undefined.auc = false;
        }
        None => r.undefined.auc = true,
    }
    Ok(r)
}

/// Probability that a random AD instance outscores a random CT instance,
/// ties counting half, by brute force over all pairs. `None` with a single
/// class.
pub fn auc_pairs(scores: &[f64], labels: &[Label]) -> Result<Option<f64>, EvalError> {
    same_len(scores.len(), labels.len())?;
    let pos: Vec<f64> = scores
        .iter()
        .zip(labels)
        .filter(|(_, l)| l.is_positive())
        .map(|(s, _)| *s)
        .collect();
    let neg: Vec<f64> = scores
        .iter()
        .zip(labels)
        .filter(|(_, l)| !l.is_positive())
        .map(|(s, _)| *s)
        .collect();
    if pos.is_empty() || neg.is_empty() {
        return Ok(None);
    }
    let mut twice: u128 = 0;
    for &p in &pos {
        for &n in &neg {
            if p > n {
                twice += 2;
            } else if p == n {
                twice += 1;
            }
        }
    }
    Ok(Some(twice as f64 / (2 * pos.len() * neg.len()) as f64))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
    tp: u64,
    fp: u64,
}

/// ROC points from the strictest threshold (`+∞`, origin) through each
/// distinct score in descending order; instances with score ≥ threshold
/// are predicted AD.
pub fn roc_curve(scores: &[f64], labels: &[Label]) -> Result<Vec<RocPoint>, EvalError> {
    same_len(scores.len(), labels.len())?;
    let p = labels.iter().filter(|l| l.is_positive()).count() as u64;
    let n = labels.len() as u64 - p;
    let rate = |k: u64, d: u64| if d == 0 { 0.0 } else { k as f64 / d as f64 };
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut out = vec![RocPoint {
        threshold: f64::INFINITY,
        fpr: 0.0,
        tpr: 0.0,
        tp: 0,
        fp: 0,
    }];
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut i = 0;
    while i < idx.len() {
        let s = scores[idx[i]];
        while i < idx.len() && scores[idx[i]] == s {
            if labels[idx[i]].is_positive() {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        out.push(RocPoint {
            threshold: s,
            fpr: rate(fp, n),
            tpr: rate(tp, p),
            tp,
            fp,
        });
    }
    Ok(out)
}

/// Trapezoidal area under [`roc_curve`], accumulated in integer units of
/// `1 / (2PN)` so it agrees exactly with [`auc_pairs`].
pub fn auc_trapezoid(scores: &[f64], labels: &[Label]) -> Result<Option<f64>, EvalError> {
    let pts = roc_curve(scores, labels)?;
    let last = pts.last().expect("origin point always present");
    let (p, n) = (last.tp, last.fp);
    if p == 0 || n == 0 {
        return Ok(None);
    }
    let twice: u128 = pts
        .windows(2)
        .map(|w| (w[1].fp - w[0].fp) as u128 * (w[1].tp + w[0].tp) as u128)
        .sum();
    Ok(Some(twice as f64 / (2 * p * n) as f64))
}

pub fn roc_csv(points: &[RocPoint]) -> String {
    let mut s = String::from("threshold,fpr,tpr\n");
    for pt in points {
        s.push_str(&format!("{},{:.6},{:.6}\n", pt.threshold, pt.fpr, pt.tpr));
    }
    s
}
