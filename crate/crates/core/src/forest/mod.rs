//! Random forest: bootstrap-bagged CART trees with per-split feature
//! subsampling and majority-vote prediction.

mod model_file;
mod tree;

use std::fmt;

use rand::Rng;
use rayon::prelude::*;

use crate::element::ElementKind;
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::seed::substream;

pub use model_file::{load_model, read_model, save_model, write_model, MODEL_FORMAT_VERSION};
pub use tree::{gini, gini_decrease, midpoint, DecisionTree, Node, TrainingSet, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeaturesPerSplit {
    /// `floor(sqrt(n_features))`, at least one.
    Sqrt,
    Count(usize),
}

impl FeaturesPerSplit {
    pub fn resolve(self, n_features: usize) -> Result<usize> {
        let m = match self {
            FeaturesPerSplit::Sqrt => ((n_features as f64).sqrt().floor() as usize).max(1),
            FeaturesPerSplit::Count(m) => m,
        };
        if m == 0 || m > n_features {
            return Err(Error::Config(format!(
                "features_per_split {m} outside 1..={n_features}"
            )));
        }
        Ok(m)
    }
}

impl fmt::Display for FeaturesPerSplit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeaturesPerSplit::Sqrt => f.write_str("sqrt"),
            FeaturesPerSplit::Count(m) => write!(f, "{m}"),
        }
    }
}

impl std::str::FromStr for FeaturesPerSplit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("sqrt") {
            return Ok(FeaturesPerSplit::Sqrt);
        }
        s.parse::<usize>()
            .map(FeaturesPerSplit::Count)
            .map_err(|_| Error::Config(format!("features_per_split must be 'sqrt' or a count, got '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub features_per_split: FeaturesPerSplit,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 100,
            max_depth: None,
            min_samples_split: 2,
            features_per_split: FeaturesPerSplit::Sqrt,
            seed: 0,
        }
    }
}

impl ForestConfig {
    pub fn with_seed(seed: u64) -> Self {
        ForestConfig {
            seed,
            ..ForestConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::Config("n_trees must be >= 1".into()));
        }
        if self.min_samples_split < 2 {
            return Err(Error::Config("min_samples_split must be >= 2".into()));
        }
        Ok(())
    }

    fn tree_params(&self, n_features: usize) -> Result<TreeParams> {
        Ok(TreeParams {
            max_depth: self.max_depth,
            min_samples_split: self.min_samples_split,
            features_per_split: self.features_per_split.resolve(n_features)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    pub trees: Vec<DecisionTree>,
    pub config: ForestConfig,
    pub channel_selection: Vec<ElementKind>,
    /// Sorted; leaf class indices refer to this list.
    pub class_labels: Vec<String>,
    pub feature_names: Vec<String>,
}

/// Bootstrap multiplicities: `n_rows` draws with replacement.
pub fn bootstrap_counts<R: Rng + ?Sized>(rng: &mut R, n_rows: usize) -> Vec<u32> {
    let mut counts = vec![0u32; n_rows];
    for _ in 0..n_rows {
        counts[rng.random_range(0..n_rows)] += 1;
    }
    counts
}

/// Trains a forest. Tree `t` uses random stream `t` of `cfg.seed` for both
/// its bootstrap draw and its feature sampling, so the result does not depend
/// on how many threads run.
pub fn train(matrix: &FeatureMatrix, cfg: &ForestConfig) -> Result<ForestModel> {
    matrix.validate()?;
    let all: Vec<usize> = (0..matrix.len()).collect();
    train_rows(matrix, &all, cfg)
}

/// Trains on the listed rows of `matrix` only. The matrix is assumed valid.
pub fn train_rows(matrix: &FeatureMatrix, row_indices: &[usize], cfg: &ForestConfig) -> Result<ForestModel> {
    cfg.validate()?;
    if row_indices.is_empty() {
        return Err(Error::Empty("feature matrix"));
    }
    let mut class_labels: Vec<String> = row_indices.iter().map(|&i| matrix.rows[i].label.clone()).collect();
    class_labels.sort();
    class_labels.dedup();
    let classes: Vec<u32> = row_indices
        .iter()
        .map(|&i| class_labels.binary_search(&matrix.rows[i].label).expect("label collected above") as u32)
        .collect();
    let rows: Vec<&[f64]> = row_indices.iter().map(|&i| matrix.rows[i].values.as_slice()).collect();
    let data = TrainingSet::from_rows(&rows, classes, class_labels.len())?;
    let params = cfg.tree_params(data.n_features())?;

    let trees = (0..cfg.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = substream(cfg.seed, t as u64);
            let weights = bootstrap_counts(&mut rng, data.n_rows());
            DecisionTree::fit(&data, &weights, &params, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(ForestModel {
        trees,
        config: cfg.clone(),
        channel_selection: matrix.channel_selection.clone(),
        class_labels,
        feature_names: matrix.feature_names.clone(),
    })
}

/// Index of the most-voted class; ties go to the lower index.
pub fn modal_vote(votes: &[u32]) -> usize {
    let mut best = 0;
    for (i, &v) in votes.iter().enumerate() {
        if v > votes[best] {
            best = i;
        }
    }
    best
}

impl ForestModel {
    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// Per-class vote counts for one row.
    pub fn votes(&self, row: &[f64]) -> Result<Vec<u32>> {
        if row.len() != self.n_features() {
            return Err(Error::LengthMismatch {
                expected: self.n_features(),
                got: row.len(),
            });
        }
        let mut votes = vec![0u32; self.class_labels.len()];
        for tree in &self.trees {
            votes[tree.predict_class(row)] += 1;
        }
        Ok(votes)
    }

    pub fn predict_index(&self, row: &[f64]) -> Result<usize> {
        Ok(modal_vote(&self.votes(row)?))
    }

    pub fn predict(&self, row: &[f64]) -> Result<&str> {
        Ok(&self.class_labels[self.predict_index(row)?])
    }

    pub fn validate(&self) -> Result<()> {
        if self.trees.is_empty() {
            return Err(Error::Validation("model has no trees".into()));
        }
        if self.class_labels.is_empty() {
            return Err(Error::Validation("model has no classes".into()));
        }
        let k = self.class_labels.len();
        for (t, tree) in self.trees.iter().enumerate() {
            if tree.max_feature().is_some_and(|f| f >= self.n_features()) {
                return Err(Error::Validation(format!("tree {t} uses a feature outside the model")));
            }
            for node in tree.nodes() {
                if let Node::Leaf { class, counts } = node {
                    if *class >= k || counts.len() != k {
                        return Err(Error::Validation(format!("tree {t} has a leaf outside the class list")));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Convenience: predict every row of a matrix, using the model's class list.
pub fn predict(model: &ForestModel, row: &[f64]) -> Result<String> {
    model.predict(row).map(str::to_string)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureVector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn matrix(rows: Vec<(Vec<f64>, &str)>) -> FeatureMatrix {
        let width = rows[0].0.len();
        let channels = width / 7;
        let mut m = FeatureMatrix::new(ElementKind::BOARD[..channels].to_vec());
        for (values, label) in rows {
            m.rows.push(FeatureVector {
                values,
                label: label.into(),
                case_id: "c".into(),
            });
        }
        m
    }

    fn padded(x: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let mut v = vec![x];
        v.extend((0..6).map(|_| rng.random_range(0.0..1.0)));
        v
    }

    fn separable(seed: u64) -> FeatureMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows = (0..80)
            .map(|i| {
                let (x, l) = if i % 2 == 0 {
                    (-1.0 - rng.random_range(0.0..5.0), "A")
                } else {
                    (1.0 + rng.random_range(0.0..5.0), "B")
                };
                (padded(x, &mut rng), l)
            })
            .collect();
        matrix(rows)
    }

    #[test]
    fn separable_training_accuracy() {
        let m = separable(3);
        let model = train(&m, &ForestConfig { n_trees: 25, ..ForestConfig::with_seed(9) }).unwrap();
        for r in &m.rows {
            assert_eq!(model.predict(&r.values).unwrap(), r.label);
        }
    }

    #[test]
    fn training_is_deterministic() {
        let m = separable(4);
        let cfg = ForestConfig { n_trees: 10, ..ForestConfig::with_seed(77) };
        assert_eq!(train(&m, &cfg).unwrap(), train(&m, &cfg).unwrap());
        let other = train(&m, &ForestConfig { seed: 78, ..cfg }).unwrap();
        assert_ne!(other.trees, train(&m, &ForestConfig { n_trees: 10, ..ForestConfig::with_seed(77) }).unwrap().trees);
    }

    #[test]
    fn thread_count_does_not_change_the_forest() {
        let m = separable(5);
        let cfg = ForestConfig { n_trees: 12, ..ForestConfig::with_seed(1) };
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| train(&m, &cfg)).unwrap();
        let b = four.install(|| train(&m, &cfg)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_class_gives_constant_model() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let m = matrix((0..10).map(|i| (padded(i as f64, &mut rng), "A")).collect());
        let model = train(&m, &ForestConfig { n_trees: 3, ..ForestConfig::default() }).unwrap();
        assert!(model.trees.iter().all(|t| t.nodes().len() == 1));
        assert_eq!(model.predict(&[1e9; 7]).unwrap(), "A");
    }

    #[test]
    fn empty_matrix_and_bad_config() {
        let m = FeatureMatrix::new(vec![ElementKind::SC1]);
        assert!(matches!(train(&m, &ForestConfig::default()), Err(Error::Empty(_))));
        let m = separable(1);
        assert!(train(&m, &ForestConfig { n_trees: 0, ..ForestConfig::default() }).is_err());
        assert!(train(&m, &ForestConfig { min_samples_split: 1, ..ForestConfig::default() }).is_err());
        assert!(train(&m, &ForestConfig { features_per_split: FeaturesPerSplit::Count(8), ..ForestConfig::default() }).is_err());
    }

    #[test]
    fn vote_majority_and_tie() {
        assert_eq!(modal_vote(&[2, 1]), 0);
        assert_eq!(modal_vote(&[1, 2]), 1);
        assert_eq!(modal_vote(&[1, 1]), 0);
        assert_eq!(modal_vote(&[0, 3, 3]), 1);
    }

    #[test]
    fn forest_of_three_votes() {
        // Hand-built stumps: two vote A (class 0) and one votes B.
        let leaf = |c: usize| Node::Leaf { class: c, counts: if c == 0 { vec![1, 0] } else { vec![0, 1] } };
        let model = ForestModel {
            trees: vec![
                DecisionTree::from_preorder(vec![leaf(0)]).unwrap(),
                DecisionTree::from_preorder(vec![leaf(0)]).unwrap(),
                DecisionTree::from_preorder(vec![leaf(1)]).unwrap(),
            ],
            config: ForestConfig::default(),
            channel_selection: vec![ElementKind::SC1],
            class_labels: vec!["A".into(), "B".into()],
            feature_names: crate::features::feature_names(&[ElementKind::SC1]),
        };
        assert_eq!(model.predict(&[0.0; 7]).unwrap(), "A");
        let tie = ForestModel { trees: vec![model.trees[2].clone(), model.trees[0].clone()], ..model.clone() };
        assert_eq!(tie.predict(&[0.0; 7]).unwrap(), "A");
        assert!(matches!(model.predict(&[0.0; 6]), Err(Error::LengthMismatch { expected: 7, got: 6 })));
    }

    #[test]
    fn sqrt_resolution() {
        assert_eq!(FeaturesPerSplit::Sqrt.resolve(42).unwrap(), 6);
        assert_eq!(FeaturesPerSplit::Sqrt.resolve(7).unwrap(), 2);
        assert_eq!(FeaturesPerSplit::Sqrt.resolve(1).unwrap(), 1);
        assert!(FeaturesPerSplit::Count(0).resolve(3).is_err());
        assert_eq!("SQRT".parse::<FeaturesPerSplit>().unwrap(), FeaturesPerSplit::Sqrt);
        assert_eq!("4".parse::<FeaturesPerSplit>().unwrap(), FeaturesPerSplit::Count(4));
    }
}
