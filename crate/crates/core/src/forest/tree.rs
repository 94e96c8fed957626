//! CART classification tree grown on Gini impurity.

use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};

/// Column-major training data with class indices.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    columns: Vec<Vec<f64>>,
    classes: Vec<u32>,
    n_classes: usize,
}

impl TrainingSet {
    /// `rows[i]` has label `classes[i]`, an index below `n_classes`.
    pub fn from_rows(rows: &[&[f64]], classes: Vec<u32>, n_classes: usize) -> Result<Self> {
        if rows.len() != classes.len() {
            return Err(Error::Validation("row and class counts differ".into()));
        }
        if rows.is_empty() {
            return Err(Error::Empty("training rows"));
        }
        let width = rows[0].len();
        if width == 0 {
            return Err(Error::Validation("training rows have no features".into()));
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != width) {
            return Err(Error::LengthMismatch {
                expected: width,
                got: bad.len(),
            });
        }
        if classes.iter().any(|&c| c as usize >= n_classes) {
            return Err(Error::Validation("class index out of range".into()));
        }
        let columns = (0..width).map(|f| rows.iter().map(|r| r[f]).collect()).collect();
        Ok(TrainingSet {
            columns,
            classes,
            n_classes,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.classes.len()
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn value(&self, row: usize, feature: usize) -> f64 {
        self.columns[feature][row]
    }

    pub fn class(&self, row: usize) -> u32 {
        self.classes[row]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeParams {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    /// Features examined per split, already resolved to `1..=n_features`.
    pub features_per_split: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    /// Rows with `value <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        impurity_decrease: f64,
        left: usize,
        right: usize,
    },
    Leaf { class: usize, counts: Vec<u32> },
}

/// Nodes are stored in pre-order; the root is `nodes[0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

/// Gini impurity `1 - Σ (cᵢ/n)²` of a class histogram.
pub fn gini(counts: &[u64]) -> Result<f64> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::Validation("gini of an empty histogram".into()));
    }
    Ok(gini_of(&counts.iter().map(|&c| c as f64).collect::<Vec<_>>()))
}

fn gini_of(counts: &[f64]) -> f64 {
    let n: f64 = counts.iter().sum();
    1.0 - counts.iter().map(|&c| (c / n) * (c / n)).sum::<f64>()
}

/// Impurity decrease of splitting `parent` into `left` and `right`:
/// `G(parent) - nL/n · G(left) - nR/n · G(right)`.
pub fn gini_decrease(left: &[f64], right: &[f64]) -> f64 {
    let nl: f64 = left.iter().sum();
    let nr: f64 = right.iter().sum();
    let n = nl + nr;
    let parent: Vec<f64> = left.iter().zip(right).map(|(a, b)| a + b).collect();
    gini_of(&parent) - (nl / n) * gini_of(left) - (nr / n) * gini_of(right)
}

/// Midpoint between consecutive distinct values `lo < hi`, kept strictly
/// below `hi` so that `hi` routes right.
pub fn midpoint(lo: f64, hi: f64) -> f64 {
    let m = lo + (hi - lo) / 2.0;
    if m < hi {
        m
    } else {
        lo
    }
}

fn majority(counts: &[u32]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

struct Task {
    start: usize,
    end: usize,
    depth: usize,
    parent: Option<(usize, bool)>,
}

struct BestSplit {
    score: f64,
    feature: usize,
    threshold: f64,
}

impl DecisionTree {
    /// Grows a tree on the rows with nonzero `weights` (bootstrap
    /// multiplicities). Candidate features at each node are drawn from `rng`
    /// and scanned in ascending index order; among equal scores the first
    /// candidate wins.
    pub fn fit<R: Rng + ?Sized>(
        data: &TrainingSet,
        weights: &[u32],
        params: &TreeParams,
        rng: &mut R,
    ) -> Result<DecisionTree> {
        if weights.len() != data.n_rows() {
            return Err(Error::Validation("weight vector does not match row count".into()));
        }
        let n_features = data.n_features();
        if params.features_per_split == 0 || params.features_per_split > n_features {
            return Err(Error::Config(format!(
                "features_per_split {} outside 1..={n_features}",
                params.features_per_split
            )));
        }
        let mut rows: Vec<u32> = (0..data.n_rows() as u32).filter(|&r| weights[r as usize] > 0).collect();
        if rows.is_empty() {
            return Err(Error::Empty("training rows"));
        }

        let k = data.n_classes();
        let mut nodes: Vec<Node> = Vec::new();
        let mut stack = vec![Task {
            start: 0,
            end: rows.len(),
            depth: 0,
            parent: None,
        }];
        let mut buf: Vec<(f64, u32, u32)> = Vec::with_capacity(rows.len());
        let mut counts = vec![0u32; k];
        let mut left = vec![0f64; k];
        let mut right = vec![0f64; k];

        while let Some(task) = stack.pop() {
            let id = nodes.len();
            if let Some((parent, is_left)) = task.parent {
                if let Node::Split { left, right, .. } = &mut nodes[parent] {
                    if is_left {
                        *left = id;
                    } else {
                        *right = id;
                    }
                }
            }
            let slice = &mut rows[task.start..task.end];
            counts.iter_mut().for_each(|c| *c = 0);
            for &r in slice.iter() {
                counts[data.class(r as usize) as usize] += weights[r as usize];
            }
            let total: u32 = counts.iter().sum();
            let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
            let depth_capped = params.max_depth.is_some_and(|d| task.depth >= d);
            if pure || depth_capped || (total as usize) < params.min_samples_split {
                nodes.push(Node::Leaf {
                    class: majority(&counts),
                    counts: counts.clone(),
                });
                continue;
            }

            let mut features = index::sample(rng, n_features, params.features_per_split).into_vec();
            features.sort_unstable();

            let n = total as f64;
            let parent_sq: f64 = counts.iter().map(|&c| (c as f64) * (c as f64)).sum();
            let parent_score = parent_sq / n;
            let mut best: Option<BestSplit> = None;
            let mut best_score = parent_score + parent_score * 1e-12;

            for &f in &features {
                buf.clear();
                buf.extend(slice.iter().map(|&r| {
                    let r = r as usize;
                    (data.value(r, f), data.class(r), weights[r])
                }));
                buf.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
                if buf[0].0 == buf[buf.len() - 1].0 {
                    continue;
                }
                left.iter_mut().for_each(|c| *c = 0.0);
                for (r, &c) in right.iter_mut().zip(&counts) {
                    *r = c as f64;
                }
                let (mut sq_l, mut sq_r) = (0.0, parent_sq);
                let (mut n_l, mut n_r) = (0.0, n);
                for i in 0..buf.len() - 1 {
                    let (v, c, w) = buf[i];
                    let (c, w) = (c as usize, w as f64);
                    sq_l += w * (2.0 * left[c] + w);
                    sq_r -= w * (2.0 * right[c] - w);
                    left[c] += w;
                    right[c] -= w;
                    n_l += w;
                    n_r -= w;
                    let next = buf[i + 1].0;
                    if v < next {
                        let score = sq_l / n_l + sq_r / n_r;
                        if score > best_score {
                            best_score = score;
                            best = Some(BestSplit {
                                score,
                                feature: f,
                                threshold: midpoint(v, next),
                            });
                        }
                    }
                }
            }

            let Some(split) = best else {
                nodes.push(Node::Leaf {
                    class: majority(&counts),
                    counts: counts.clone(),
                });
                continue;
            };
            debug_assert!(split.score > parent_score);

            // Partition rows: left block keeps value <= threshold.
            let mut mid = 0;
            for i in 0..slice.len() {
                if data.value(slice[i] as usize, split.feature) <= split.threshold {
                    slice.swap(i, mid);
                    mid += 1;
                }
            }
            left.iter_mut().for_each(|c| *c = 0.0);
            right.iter_mut().for_each(|c| *c = 0.0);
            for (i, &r) in slice.iter().enumerate() {
                let r = r as usize;
                let side = if i < mid { &mut left } else { &mut right };
                side[data.class(r) as usize] += weights[r] as f64;
            }
            let impurity_decrease = gini_decrease(&left, &right);

            nodes.push(Node::Split {
                feature: split.feature,
                threshold: split.threshold,
                impurity_decrease,
                left: usize::MAX,
                right: usize::MAX,
            });
            let split_at = task.start + mid;
            stack.push(Task {
                start: split_at,
                end: task.end,
                depth: task.depth + 1,
                parent: Some((id, false)),
            });
            stack.push(Task {
                start: task.start,
                end: split_at,
                depth: task.depth + 1,
                parent: Some((id, true)),
            });
        }
        Ok(DecisionTree { nodes })
    }

    /// Rebuilds child links from a pre-order node listing whose links are
    /// ignored. Fails if the listing is not exactly one complete tree.
    pub fn from_preorder(mut nodes: Vec<Node>) -> std::result::Result<DecisionTree, String> {
        if nodes.is_empty() {
            return Err("tree has no nodes".into());
        }
        // Each open entry is a split still waiting for its left or right child.
        let mut open: Vec<(usize, bool)> = Vec::new();
        for id in 0..nodes.len() {
            if id > 0 {
                let Some((parent, filled_left)) = open.pop() else {
                    return Err(format!("node {id} is outside the tree"));
                };
                if let Node::Split { left, right, .. } = &mut nodes[parent] {
                    if filled_left {
                        *right = id;
                    } else {
                        *left = id;
                        open.push((parent, true));
                    }
                }
            }
            if matches!(nodes[id], Node::Split { .. }) {
                open.push((id, false));
            }
        }
        if !open.is_empty() {
            return Err("tree listing ends before every split has two children".into());
        }
        Ok(DecisionTree { nodes })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn root(&self) -> &Node {
        &self.nodes[0]
    }

    /// Index of the leaf a row lands in.
    pub fn leaf_index(&self, row: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { .. } => return i,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    i = if row[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn predict_class(&self, row: &[f64]) -> usize {
        match &self.nodes[self.leaf_index(row)] {
            Node::Leaf { class, .. } => *class,
            Node::Split { .. } => unreachable!("leaf_index returns leaves"),
        }
    }

    /// Longest root-to-leaf path, in edges.
    pub fn depth(&self) -> usize {
        let mut max = 0;
        let mut stack = vec![(0usize, 0usize)];
        while let Some((i, d)) = stack.pop() {
            max = max.max(d);
            if let Node::Split { left, right, .. } = &self.nodes[i] {
                stack.push((*left, d + 1));
                stack.push((*right, d + 1));
            }
        }
        max
    }

    /// Largest feature index used by any split.
    pub fn max_feature(&self) -> Option<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { feature, .. } => Some(*feature),
                Node::Leaf { .. } => None,
            })
            .max()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn set(rows: &[Vec<f64>], classes: &[u32], k: usize) -> TrainingSet {
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        TrainingSet::from_rows(&refs, classes.to_vec(), k).unwrap()
    }

    fn params(depth: Option<usize>, m: usize) -> TreeParams {
        TreeParams {
            max_depth: depth,
            min_samples_split: 2,
            features_per_split: m,
        }
    }

    #[test]
    fn gini_examples() {
        assert_eq!(gini(&[10]).unwrap(), 0.0);
        assert_eq!(gini(&[5, 5]).unwrap(), 0.5);
        assert!((gini(&[1, 2, 3]).unwrap() - 11.0 / 18.0).abs() < 1e-15);
        assert!(gini(&[0, 0]).is_err());
    }

    #[test]
    fn midpoint_stays_below_upper() {
        assert_eq!(midpoint(1.0, 3.0), 2.0);
        let a = 1.0f64;
        let b = f64::from_bits(a.to_bits() + 1);
        assert!(midpoint(a, b) < b);
    }

    #[test]
    fn separable_1d_fits_perfectly() {
        let rows: Vec<Vec<f64>> = (-20..=20).filter(|&x| x != 0).map(|x| vec![x as f64]).collect();
        let classes: Vec<u32> = rows.iter().map(|r| u32::from(r[0] > 0.0)).collect();
        let data = set(&rows, &classes, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let tree = DecisionTree::fit(&data, &vec![1; rows.len()], &params(None, 1), &mut rng).unwrap();
        assert_eq!(tree.depth(), 1);
        match tree.root() {
            Node::Split { threshold, impurity_decrease, .. } => {
                assert_eq!(*threshold, 0.0);
                assert_eq!(*impurity_decrease, 0.5);
            }
            _ => panic!("expected a split"),
        }
        for (r, &c) in rows.iter().zip(&classes) {
            assert_eq!(tree.predict_class(r), c as usize);
        }
    }

    #[test]
    fn depth_cap_and_leaf_histograms() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rows: Vec<Vec<f64>> = (0..300).map(|_| (0..4).map(|_| rng.random_range(0.0..10.0)).collect()).collect();
        let classes: Vec<u32> = (0..300).map(|_| rng.random_range(0..3)).collect();
        let weights: Vec<u32> = (0..300).map(|_| rng.random_range(0..3)).collect();
        let data = set(&rows, &classes, 3);
        for depth in [Some(1), Some(3), Some(6), None] {
            let tree = DecisionTree::fit(&data, &weights, &params(depth, 2), &mut rng).unwrap();
            if let Some(d) = depth {
                assert!(tree.depth() <= d);
            }
            let mut routed = vec![vec![0u32; 3]; tree.nodes().len()];
            for (i, r) in rows.iter().enumerate() {
                routed[tree.leaf_index(r)][classes[i] as usize] += weights[i];
            }
            for (i, node) in tree.nodes().iter().enumerate() {
                if let Node::Leaf { counts, .. } = node {
                    assert_eq!(counts, &routed[i]);
                }
            }
        }
    }

    #[test]
    fn constant_features_make_a_leaf() {
        let rows = vec![vec![1.0, 2.0]; 6];
        let data = set(&rows, &[0, 1, 0, 1, 1, 1], 2);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let tree = DecisionTree::fit(&data, &[1; 6], &params(None, 2), &mut rng).unwrap();
        assert_eq!(tree.nodes(), &[Node::Leaf { class: 1, counts: vec![2, 4] }]);
    }

    #[test]
    fn leaf_tie_picks_first_class() {
        let rows = vec![vec![1.0]; 4];
        let data = set(&rows, &[1, 0, 1, 0], 2);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let tree = DecisionTree::fit(&data, &[1; 4], &params(None, 1), &mut rng).unwrap();
        assert_eq!(tree.predict_class(&[1.0]), 0);
    }

    #[test]
    fn preorder_rebuild() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rows: Vec<Vec<f64>> = (0..100).map(|_| vec![rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)]).collect();
        let classes: Vec<u32> = rows.iter().map(|r| u32::from(r[0] + r[1] > 1.0)).collect();
        let data = set(&rows, &classes, 2);
        let tree = DecisionTree::fit(&data, &[1; 100], &params(None, 2), &mut rng).unwrap();
        let stripped: Vec<Node> = tree
            .nodes()
            .iter()
            .cloned()
            .map(|n| match n {
                Node::Split { feature, threshold, impurity_decrease, .. } => Node::Split {
                    feature,
                    threshold,
                    impurity_decrease,
                    left: 0,
                    right: 0,
                },
                leaf => leaf,
            })
            .collect();
        assert_eq!(DecisionTree::from_preorder(stripped.clone()).unwrap(), tree);
        assert!(DecisionTree::from_preorder(stripped[..stripped.len() - 1].to_vec()).is_err());
        let mut extra = stripped;
        extra.push(Node::Leaf { class: 0, counts: vec![1, 0] });
        assert!(DecisionTree::from_preorder(extra).is_err());
    }

    #[test]
    fn rejects_bad_params() {
        let data = set(&[vec![1.0], vec![2.0]], &[0, 1], 2);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(DecisionTree::fit(&data, &[1, 1], &params(None, 2), &mut rng).is_err());
        assert!(DecisionTree::fit(&data, &[1, 1], &params(None, 0), &mut rng).is_err());
        assert!(DecisionTree::fit(&data, &[0, 0], &params(None, 1), &mut rng).is_err());
    }
}
