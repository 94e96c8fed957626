use rayon::prelude::*;

use super::{metrics, ConfusionMatrix, Metrics};
use crate::element::ElementKind;
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::forest::{train_rows, ForestConfig};
use crate::seed::derive_seed;

#[derive(Debug, Clone, PartialEq)]
pub struct FoldResult {
    pub held_out_case: String,
    /// Row indices of the held-out case, in matrix order.
    pub test_rows: Vec<usize>,
    /// Distinct case ids the fold's model was trained on.
    pub train_cases: Vec<String>,
    pub train_row_count: usize,
    /// Classes present in the test case but absent from training.
    pub untrainable: Vec<String>,
    pub seed: u64,
    pub confusion: ConfusionMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub channel_selection: Vec<ElementKind>,
    pub n_features: usize,
    pub config: ForestConfig,
    /// Sum of the fold matrices; `metrics` is computed from it.
    pub pooled: ConfusionMatrix,
    pub metrics: Metrics,
    pub folds: Vec<FoldResult>,
}

/// Leave-one-case-out cross-validation.
///
/// Folds follow the order in which case ids first appear. Fold `i` trains a
/// forest on every other case with seed `derive_seed(cfg.seed, i)` and
/// predicts the held-out rows. Metrics come from the summed confusion matrix.
pub fn loco_cv(matrix: &FeatureMatrix, cfg: &ForestConfig) -> Result<EvaluationReport> {
    cfg.validate()?;
    matrix.validate()?;
    let cases = matrix.case_ids();
    if cases.len() < 2 {
        return Err(Error::Validation(format!(
            "leave-one-case-out needs at least 2 cases, found {}",
            cases.len()
        )));
    }
    let labels = matrix.labels();
    if labels.len() < 2 {
        return Err(Error::Validation("evaluation needs at least 2 classes".into()));
    }

    let folds = cases
        .par_iter()
        .enumerate()
        .map(|(i, case)| run_fold(matrix, &labels, &cases, i, case, cfg))
        .collect::<Result<Vec<_>>>()?;

    let mut pooled = ConfusionMatrix::new(labels);
    for f in &folds {
        pooled.add(&f.confusion)?;
    }
    let metrics = metrics(&pooled)?;
    Ok(EvaluationReport {
        channel_selection: matrix.channel_selection.clone(),
        n_features: matrix.n_features(),
        config: cfg.clone(),
        pooled,
        metrics,
        folds,
    })
}

fn run_fold(
    matrix: &FeatureMatrix,
    labels: &[String],
    cases: &[String],
    index: usize,
    case: &str,
    cfg: &ForestConfig,
) -> Result<FoldResult> {
    let (test_rows, train_rows_idx): (Vec<usize>, Vec<usize>) =
        (0..matrix.len()).partition(|&r| matrix.rows[r].case_id == case);
    let seed = derive_seed(cfg.seed, index as u64);
    let fold_cfg = ForestConfig { seed, ..cfg.clone() };
    let model = train_rows(matrix, &train_rows_idx, &fold_cfg)?;

    // Model classes are a sorted subset of the global sorted labels.
    let to_global: Vec<usize> = model
        .class_labels
        .iter()
        .map(|l| labels.binary_search(l).expect("training labels are global labels"))
        .collect();
    let mut confusion = ConfusionMatrix::new(labels.to_vec());
    for &r in &test_rows {
        let row = &matrix.rows[r];
        let truth = labels.binary_search(&row.label).expect("row label is global");
        let predicted = to_global[model.predict_index(&row.values)?];
        confusion.record(truth, predicted);
    }

    let mut untrainable: Vec<String> = test_rows
        .iter()
        .map(|&r| &matrix.rows[r].label)
        .filter(|l| model.class_labels.binary_search(l).is_err())
        .cloned()
        .collect();
    untrainable.sort();
    untrainable.dedup();

    Ok(FoldResult {
        held_out_case: case.to_string(),
        test_rows,
        train_cases: cases.iter().filter(|c| c.as_str() != case).cloned().collect(),
        train_row_count: train_rows_idx.len(),
        untrainable,
        seed,
        confusion,
    })
}
