//! Leave-one-case-out evaluation, classification metrics and
//! element-subset ablation.

mod ablation;
mod cv;
pub mod report;

use crate::error::{Error, Result};

pub use ablation::{ablate, ablate_channels, subsets, AblationReport, SizeExtremes, SubsetScore};
pub use cv::{loco_cv, EvaluationReport, FoldResult};

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub class_labels: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(class_labels: Vec<String>) -> Self {
        let k = class_labels.len();
        ConfusionMatrix {
            class_labels,
            counts: vec![vec![0; k]; k],
        }
    }

    pub fn from_counts(class_labels: Vec<String>, counts: Vec<Vec<u64>>) -> Result<Self> {
        let k = class_labels.len();
        if counts.len() != k || counts.iter().any(|r| r.len() != k) {
            return Err(Error::Validation(format!("confusion matrix must be {k}x{k}")));
        }
        Ok(ConfusionMatrix { class_labels, counts })
    }

    pub fn record(&mut self, truth: usize, predicted: usize) {
        self.counts[truth][predicted] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..self.counts.len()).map(|i| self.counts[i][i]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        self.correct() as f64 / self.total() as f64
    }

    /// Element-wise sum; both matrices must share the class list.
    pub fn add(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if self.class_labels != other.class_labels {
            return Err(Error::Validation("confusion matrices have different classes".into()));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassMetrics {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f_value: f64,
    pub support: u64,
}

/// Support-weighted averages (the "avg / total" row).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f_value: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub per_class: Vec<ClassMetrics>,
    pub weighted: WeightedMetrics,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Per-class precision, recall and F-value plus support-weighted averages.
///
/// A class never predicted gets precision 0; a class with no support gets
/// recall 0 and carries no weight in the averages.
pub fn metrics(cm: &ConfusionMatrix) -> Result<Metrics> {
    let k = cm.class_labels.len();
    if k == 0 {
        return Err(Error::Empty("confusion matrix"));
    }
    let total = cm.total();
    if total == 0 {
        return Err(Error::Validation("confusion matrix has no entries".into()));
    }
    let mut per_class = Vec::with_capacity(k);
    let (mut wp, mut wr, mut wf) = (0.0, 0.0, 0.0);
    for c in 0..k {
        let tp = cm.counts[c][c];
        let support: u64 = cm.counts[c].iter().sum();
        let predicted: u64 = cm.counts.iter().map(|r| r[c]).sum();
        let precision = ratio(tp, predicted);
        let recall = ratio(tp, support);
        let f_value = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        let w = support as f64;
        wp += w * precision;
        wr += w * recall;
        wf += w * f_value;
        per_class.push(ClassMetrics {
            label: cm.class_labels[c].clone(),
            precision,
            recall,
            f_value,
            support,
        });
    }
    let n = total as f64;
    Ok(Metrics {
        per_class,
        weighted: WeightedMetrics {
            precision: wp / n,
            recall: wr / n,
            f_value: wf / n,
            support: total,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn diagonal_is_perfect() {
        let cm = ConfusionMatrix::from_counts(labels(&["A", "B", "C"]), vec![vec![3, 0, 0], vec![0, 5, 0], vec![0, 0, 1]]).unwrap();
        let m = metrics(&cm).unwrap();
        for c in &m.per_class {
            assert_eq!((c.precision, c.recall, c.f_value), (1.0, 1.0, 1.0));
        }
        assert_eq!(m.weighted.f_value, 1.0);
        assert_eq!(m.weighted.support, 9);
    }

    #[test]
    fn all_predicted_as_one_class() {
        let cm = ConfusionMatrix::from_counts(labels(&["A", "B"]), vec![vec![10, 0], vec![10, 0]]).unwrap();
        let m = metrics(&cm).unwrap();
        let a = &m.per_class[0];
        assert_eq!((a.precision, a.recall), (0.5, 1.0));
        assert!((a.f_value - 2.0 / 3.0).abs() < 1e-15);
        let b = &m.per_class[1];
        assert_eq!((b.precision, b.recall, b.f_value), (0.0, 0.0, 0.0));
        assert!((m.weighted.f_value - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn weighted_row_follows_support() {
        // Rebuild the all-elements result table's avg row from its own
        // per-class rows: support-weighted F over 12792 windows.
        let rows = [
            (0.957, 7899.0),
            (0.725, 1767.0),
            (0.777, 945.0),
            (0.612, 464.0),
            (0.884, 434.0),
            (0.683, 427.0),
            (0.809, 350.0),
            (0.909, 345.0),
            (0.805, 161.0),
        ];
        let total: f64 = rows.iter().map(|r| r.1).sum();
        assert_eq!(total, 12792.0);
        let f: f64 = rows.iter().map(|(f, n)| f * n).sum::<f64>() / total;
        assert!((f - 0.88).abs() < 0.005, "{f}");
    }

    #[test]
    fn zero_support_class_has_no_weight() {
        let cm = ConfusionMatrix::from_counts(labels(&["A", "B", "C"]), vec![vec![4, 1, 0], vec![0, 5, 0], vec![0, 0, 0]]).unwrap();
        let m = metrics(&cm).unwrap();
        assert_eq!(m.per_class[2].support, 0);
        assert_eq!(m.per_class[2].recall, 0.0);
        let expected = (5.0 * m.per_class[0].f_value + 5.0 * m.per_class[1].f_value) / 10.0;
        assert!((m.weighted.f_value - expected).abs() < 1e-12);
    }

    #[test]
    fn empty_matrix_errors() {
        assert!(metrics(&ConfusionMatrix::new(labels(&["A", "B"]))).is_err());
        assert!(metrics(&ConfusionMatrix::new(vec![])).is_err());
        assert!(ConfusionMatrix::from_counts(labels(&["A"]), vec![vec![1, 2]]).is_err());
    }

    #[test]
    fn label_permutation_equivariance() {
        let cm = ConfusionMatrix::from_counts(
            labels(&["A", "B", "C"]),
            vec![vec![7, 2, 1], vec![3, 5, 0], vec![1, 4, 9]],
        )
        .unwrap();
        let perm = [2usize, 0, 1];
        let permuted = ConfusionMatrix::from_counts(
            perm.iter().map(|&i| cm.class_labels[i].clone()).collect(),
            perm.iter().map(|&i| perm.iter().map(|&j| cm.counts[i][j]).collect()).collect(),
        )
        .unwrap();
        let a = metrics(&cm).unwrap();
        let b = metrics(&permuted).unwrap();
        for (new, &old) in perm.iter().enumerate() {
            assert_eq!(b.per_class[new], a.per_class[old]);
        }
        assert!((a.weighted.f_value - b.weighted.f_value).abs() < 1e-15);
    }
}
