use super::{loco_cv, WeightedMetrics};
use crate::element::ElementKind;
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::forest::ForestConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct SubsetScore {
    pub channels: Vec<ElementKind>,
    pub weighted: WeightedMetrics,
}

impl SubsetScore {
    /// Compact combination tag, e.g. `1,2,p`.
    pub fn tag(&self) -> String {
        self.channels.iter().map(|k| k.short_tag()).collect::<Vec<_>>().join(",")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SizeExtremes {
    pub size: usize,
    pub best: SubsetScore,
    pub worst: SubsetScore,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationReport {
    pub channels: Vec<ElementKind>,
    pub config: ForestConfig,
    /// Every non-empty subset, in [`subsets`] order.
    pub per_subset: Vec<SubsetScore>,
    /// One entry per subset size, ascending.
    pub best_worst_by_size: Vec<SizeExtremes>,
}

impl AblationReport {
    pub fn score(&self, channels: &[ElementKind]) -> Option<&SubsetScore> {
        self.per_subset.iter().find(|s| s.channels == channels)
    }
}

/// All non-empty subsets of `channels`: by size, then lexicographically in
/// the given order.
pub fn subsets(channels: &[ElementKind]) -> Vec<Vec<ElementKind>> {
    let n = channels.len();
    let mut out = Vec::with_capacity((1usize << n) - 1);
    for size in 1..=n {
        let mut idx: Vec<usize> = (0..size).collect();
        loop {
            out.push(idx.iter().map(|&i| channels[i]).collect());
            // Advance to the next combination.
            let Some(pos) = (0..size).rev().find(|&i| idx[i] != i + n - size) else {
                break;
            };
            idx[pos] += 1;
            for j in pos + 1..size {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }
    out
}

/// Evaluates every non-empty subset of `channels` with leave-one-case-out
/// cross-validation on the matching columns of `matrix`.
pub fn ablate_channels(matrix: &FeatureMatrix, channels: &[ElementKind], cfg: &ForestConfig) -> Result<AblationReport> {
    let mut channels = channels.to_vec();
    channels.sort();
    channels.dedup();
    if channels.is_empty() {
        return Err(Error::Validation("ablation needs at least one channel".into()));
    }
    if let Some(missing) = channels.iter().find(|k| !matrix.channel_selection.contains(k)) {
        return Err(Error::MissingChannel(*missing));
    }

    let mut per_subset = Vec::new();
    for subset in subsets(&channels) {
        let view = matrix.select_channels(&subset)?;
        let report = loco_cv(&view, cfg)?;
        per_subset.push(SubsetScore {
            channels: subset,
            weighted: report.metrics.weighted,
        });
    }

    let mut best_worst_by_size = Vec::new();
    for size in 1..=channels.len() {
        let mut best: Option<&SubsetScore> = None;
        let mut worst: Option<&SubsetScore> = None;
        for s in per_subset.iter().filter(|s| s.channels.len() == size) {
            if best.is_none_or(|b| s.weighted.f_value > b.weighted.f_value) {
                best = Some(s);
            }
            if worst.is_none_or(|w| s.weighted.f_value < w.weighted.f_value) {
                worst = Some(s);
            }
        }
        best_worst_by_size.push(SizeExtremes {
            size,
            best: best.expect("every size has a subset").clone(),
            worst: worst.expect("every size has a subset").clone(),
        });
    }

    Ok(AblationReport {
        channels,
        config: cfg.clone(),
        per_subset,
        best_worst_by_size,
    })
}

/// Ablation over every channel present in the matrix.
pub fn ablate(matrix: &FeatureMatrix, cfg: &ForestConfig) -> Result<AblationReport> {
    ablate_channels(matrix, &matrix.channel_selection.clone(), cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subset_counts() {
        assert_eq!(subsets(&ElementKind::BOARD).len(), 63);
        assert_eq!(subsets(&ElementKind::ALL).len(), 127);
        let three = subsets(&ElementKind::BOARD[..3]);
        let tags: Vec<String> = three
            .iter()
            .map(|s| s.iter().map(|k| k.short_tag()).collect::<String>())
            .collect();
        assert_eq!(tags, ["1", "2", "3", "12", "13", "23", "123"]);
    }

    #[test]
    fn subsets_are_unique() {
        let mut all = subsets(&ElementKind::BOARD);
        all.sort();
        all.dedup();
        assert_eq!(all.len(), 63);
    }

    #[test]
    fn missing_channel_errors() {
        let m = FeatureMatrix::new(vec![ElementKind::SC1]);
        assert!(matches!(
            ablate_channels(&m, &[ElementKind::SC1, ElementKind::SC2], &ForestConfig::default()),
            Err(Error::MissingChannel(ElementKind::SC2))
        ));
    }
}
