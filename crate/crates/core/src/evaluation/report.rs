//! CSV and aligned-text renderings of evaluation and ablation reports.

use std::fmt::Write as _;

use super::{AblationReport, EvaluationReport};
use crate::forest::ForestConfig;

const TOTAL_ROW: &str = "avg / total";

fn config_line(cfg: &ForestConfig) -> String {
    let depth = cfg.max_depth.map_or("none".to_string(), |d| d.to_string());
    format!(
        "trees={} max_depth={} min_samples_split={} features_per_split={} seed={}",
        cfg.n_trees, depth, cfg.min_samples_split, cfg.features_per_split, cfg.seed
    )
}

fn channel_list(report: &EvaluationReport) -> String {
    report
        .channel_selection
        .iter()
        .map(|k| k.name())
        .collect::<Vec<_>>()
        .join(",")
}

/// Per-class table with a support-weighted `avg / total` row.
pub fn evaluation_text(report: &EvaluationReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# leave-one-case-out, {} folds; metrics pooled from the summed confusion matrix",
        report.folds.len()
    );
    let _ = writeln!(out, "# channels={} features={}", channel_list(report), report.n_features);
    let _ = writeln!(out, "# {}", config_line(&report.config));
    let width = report
        .metrics
        .per_class
        .iter()
        .map(|c| c.label.len())
        .chain([TOTAL_ROW.len()])
        .max()
        .unwrap_or(0);
    let _ = writeln!(
        out,
        "{:<width$}  {:>9}  {:>6}  {:>7}  {:>12}",
        "", "Precision", "Recall", "F-value", "Num. of data"
    );
    for c in &report.metrics.per_class {
        let _ = writeln!(
            out,
            "{:<width$}  {:>9.3}  {:>6.3}  {:>7.3}  {:>12}",
            c.label, c.precision, c.recall, c.f_value, c.support
        );
    }
    let w = &report.metrics.weighted;
    let _ = writeln!(
        out,
        "{:<width$}  {:>9.3}  {:>6.3}  {:>7.3}  {:>12}",
        TOTAL_ROW, w.precision, w.recall, w.f_value, w.support
    );
    for f in report.folds.iter().filter(|f| !f.untrainable.is_empty()) {
        let _ = writeln!(
            out,
            "# fold {}: untrainable classes {}",
            f.held_out_case,
            f.untrainable.join(",")
        );
    }
    out
}

/// `label,precision,recall,f_value,support`, one row per class plus the
/// weighted row.
pub fn evaluation_csv(report: &EvaluationReport) -> String {
    let mut out = String::from("label,precision,recall,f_value,support\n");
    for c in &report.metrics.per_class {
        let _ = writeln!(
            out,
            "{},{:.6},{:.6},{:.6},{}",
            c.label, c.precision, c.recall, c.f_value, c.support
        );
    }
    let w = &report.metrics.weighted;
    let _ = writeln!(
        out,
        "{TOTAL_ROW},{:.6},{:.6},{:.6},{}",
        w.precision, w.recall, w.f_value, w.support
    );
    out
}

/// Per-fold confusion matrices in long form:
/// `held_out_case,truth,predicted,count` (nonzero cells only).
pub fn folds_csv(report: &EvaluationReport) -> String {
    let mut out = String::from("held_out_case,truth,predicted,count\n");
    for f in &report.folds {
        let labels = &f.confusion.class_labels;
        for (t, row) in f.confusion.counts.iter().enumerate() {
            for (p, &n) in row.iter().enumerate() {
                if n > 0 {
                    let _ = writeln!(out, "{},{},{},{}", f.held_out_case, labels[t], labels[p], n);
                }
            }
        }
    }
    out
}

/// Best and worst subset per size, largest size first.
pub fn ablation_text(report: &AblationReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# {} subsets of {} elements; pooled leave-one-case-out F-value",
        report.per_subset.len(),
        report.channels.len()
    );
    let _ = writeln!(out, "# {}", config_line(&report.config));
    let _ = writeln!(
        out,
        "{:<12}  {:<5}  {:<13}  {:>9}  {:>6}  {:>7}",
        "Num. of EHs", "", "Combination", "Precision", "Recall", "F-value"
    );
    let n = report.channels.len();
    for ext in report.best_worst_by_size.iter().rev() {
        if ext.size == n {
            let s = &ext.best;
            let _ = writeln!(
                out,
                "{:<12}  {:<5}  {:<13}  {:>9.3}  {:>6.3}  {:>7.3}",
                format!("All ({n})"),
                "",
                s.tag(),
                s.weighted.precision,
                s.weighted.recall,
                s.weighted.f_value
            );
            continue;
        }
        for (kind, s) in [("Best", &ext.best), ("Worst", &ext.worst)] {
            let _ = writeln!(
                out,
                "{:<12}  {:<5}  {:<13}  {:>9.3}  {:>6.3}  {:>7.3}",
                format!("{} types", ext.size),
                kind,
                s.tag(),
                s.weighted.precision,
                s.weighted.recall,
                s.weighted.f_value
            );
        }
    }
    out
}

/// `channels,size,precision,recall,f_value`, channels `;`-separated.
pub fn ablation_csv(report: &AblationReport) -> String {
    let mut out = String::from("channels,size,precision,recall,f_value\n");
    for s in &report.per_subset {
        let names: Vec<&str> = s.channels.iter().map(|k| k.name()).collect();
        let _ = writeln!(
            out,
            "{},{},{:.6},{:.6},{:.6}",
            names.join(";"),
            s.channels.len(),
            s.weighted.precision,
            s.weighted.recall,
            s.weighted.f_value
        );
    }
    out
}
