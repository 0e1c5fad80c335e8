//! CSV and aligned-text renderings of experiment results.

use std::fmt::Write as _;

use super::experiment::ExperimentResult;
use super::metrics::MetricsReport;

pub const RESULTS_HEADER: &str = "approach,accuracy,precision,recall,f1,auc,tn,fp,fn,tp";

fn metric_cells(r: &MetricsReport) -> String {
    let c = &r.counts;
    format!(
        "{:.4},{:.4},{:.4},{:.4},{:.4},{:.2},{:.2},{:.2},{:.2}",
        r.accuracy, r.precision, r.recall, r.f1, r.auc, c.tn, c.fp, c.fn_, c.tp
    )
}

/// One row per experiment with seed-averaged metrics.
pub fn results_csv(results: &[ExperimentResult]) -> String {
    let mut s = format!("{RESULTS_HEADER}\n");
    for r in results {
        writeln!(s, "{},{}", r.name, metric_cells(&r.mean)).unwrap();
    }
    s
}

/// Ablation rows carry the number of targeted features kept.
pub fn ablation_csv(results: &[ExperimentResult]) -> String {
    let mut s = String::from("approach,feature_dim,accuracy,precision,recall,f1,auc,tn,fp,fn,tp\n");
    for r in results {
        writeln!(s, "{},{},{}", r.name, r.feature_dim, metric_cells(&r.mean)).unwrap();
    }
    s
}

/// One row per (experiment, seed).
pub fn per_seed_csv(results: &[ExperimentResult]) -> String {
    let mut s = String::from("approach,seed,accuracy,precision,recall,f1,auc,tn,fp,fn,tp,undefined\n");
    for r in results {
        for (seed, m) in r.per_seed() {
            let u = &m.undefined;
            let flags: Vec<&str> = [
                (u.precision, "precision"),
                (u.recall, "recall"),
                (u.f1, "f1"),
                (u.auc, "auc"),
            ]
            .into_iter()
            .filter(|(b, _)| *b)
            .map(|(_, n)| n)
            .collect();
            writeln!(s, "{},{seed},{},{}", r.name, metric_cells(m), flags.join("|")).unwrap();
        }
    }
    s
}

/// Human-readable aligned table.
pub fn results_table(results: &[ExperimentResult]) -> String {
    let width = results.iter().map(|r| r.name.len()).max().unwrap_or(8).max(8);
    let mut s = format!(
        "{:<width$}  {:>8} {:>9} {:>8} {:>8} {:>8} {:>7} {:>7} {:>7} {:>7}\n",
        "Approach", "Accuracy", "Precision", "Recall", "F1", "AUC", "TN", "FP", "FN", "TP"
    );
    for r in results {
        let m = &r.mean;
        let c = &m.counts;
        writeln!(
            s,
            "{:<width$}  {:>8.4} {:>9.4} {:>8.4} {:>8.4} {:>8.4} {:>7.2} {:>7.2} {:>7.2} {:>7.2}",
            r.name, m.accuracy, m.precision, m.recall, m.f1, m.auc, c.tn, c.fp, c.fn_, c.tp
        )
        .unwrap();
    }
    s
}
