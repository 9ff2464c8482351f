//! CART classification tree with Gini impurity.

use serde::{Deserialize, Serialize};

use super::{FeatureMatrix, MlError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        counts: Vec<usize>,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        counts: Vec<usize>,
    },
}

impl TreeNode {
    fn counts(&self) -> &[usize] {
        match self {
            TreeNode::Leaf { counts } | TreeNode::Split { counts, .. } => counts,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    /// Sorted distinct training labels; `counts` vectors index into this.
    pub classes: Vec<usize>,
    /// Arena of nodes, root at index 0. Rows with `x[feature] <= threshold` go left.
    pub nodes: Vec<TreeNode>,
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
}

fn gini(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / t).powi(2)).sum::<f64>()
}

struct Candidate {
    feature: usize,
    threshold: f64,
    decrease: f64,
}

/// Fits a CART tree. `max_depth = None` grows until leaves are pure or unsplittable.
///
/// Candidate thresholds are midpoints between consecutive distinct values; the split
/// with the largest Gini decrease wins, ties going to the lowest feature index and then
/// the lowest threshold. Leaves predict the majority class, ties to the lowest class id.
pub fn tree_fit(x: &FeatureMatrix, max_depth: Option<usize>, min_leaf: usize) -> Result<DecisionTree, MlError> {
    if x.rows() == 0 {
        return Err(MlError::InvalidInput("cannot fit a tree on an empty matrix".into()));
    }
    let labels = x.require_labels()?;
    let mut classes: Vec<usize> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let class_idx: Vec<usize> = labels.iter().map(|l| classes.binary_search(l).expect("present")).collect();
    let mut tree = DecisionTree { classes, nodes: Vec::new(), max_depth, min_leaf: min_leaf.max(1) };
    let all: Vec<usize> = (0..x.rows()).collect();
    tree.grow(x, &class_idx, all, 0);
    Ok(tree)
}

impl DecisionTree {
    fn grow(&mut self, x: &FeatureMatrix, y: &[usize], idx: Vec<usize>, depth: usize) -> usize {
        let k = self.classes.len();
        let mut counts = vec![0; k];
        idx.iter().for_each(|&i| counts[y[i]] += 1);
        let node_id = self.nodes.len();
        self.nodes.push(TreeNode::Leaf { counts: counts.clone() });

        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let depth_ok = self.max_depth.is_none_or(|m| depth < m);
        if pure || !depth_ok || idx.len() < 2 * self.min_leaf {
            return node_id;
        }
        let Some(best) = self.best_split(x, y, &idx, &counts) else {
            return node_id;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| x.get(i, best.feature) <= best.threshold);
        let left = self.grow(x, y, l, depth + 1);
        let right = self.grow(x, y, r, depth + 1);
        self.nodes[node_id] = TreeNode::Split { feature: best.feature, threshold: best.threshold, left, right, counts };
        node_id
    }

    fn best_split(&self, x: &FeatureMatrix, y: &[usize], idx: &[usize], counts: &[usize]) -> Option<Candidate> {
        let m = idx.len();
        let parent = gini(counts, m);
        let mut best: Option<Candidate> = None;
        let mut order = idx.to_vec();
        for f in 0..x.cols() {
            order.sort_by(|&a, &b| x.get(a, f).total_cmp(&x.get(b, f)));
            let mut left = vec![0usize; counts.len()];
            for p in 1..m {
                left[y[order[p - 1]]] += 1;
                let (lo, hi) = (x.get(order[p - 1], f), x.get(order[p], f));
                if lo == hi || p < self.min_leaf || m - p < self.min_leaf {
                    continue;
                }
                let right: Vec<usize> = counts.iter().zip(&left).map(|(c, l)| c - l).collect();
                let child = (p as f64 * gini(&left, p) + (m - p) as f64 * gini(&right, m - p)) / m as f64;
                let decrease = parent - child;
                if best.as_ref().is_none_or(|b| decrease > b.decrease + 1e-12) {
                    let mid = lo + (hi - lo) / 2.0;
                    let threshold = if mid < hi { mid } else { lo };
                    best = Some(Candidate { feature: f, threshold, decrease });
                }
            }
        }
        best
    }

    fn leaf_for(&self, row: &[f64]) -> &[usize] {
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                TreeNode::Leaf { counts } => return counts,
                TreeNode::Split { feature, threshold, left, right, .. } => {
                    id = if row[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    /// Predicted class and the leaf's fraction of that class.
    pub fn predict_with_confidence(&self, row: &[f64]) -> (usize, f64) {
        let counts = self.leaf_for(row);
        let total: usize = counts.iter().sum();
        let best = (0..counts.len()).fold(0, |b, c| if counts[c] > counts[b] { c } else { b });
        (self.classes[best], counts[best] as f64 / total.max(1) as f64)
    }

    pub fn predict(&self, row: &[f64]) -> usize {
        self.predict_with_confidence(row).0
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], id: usize) -> usize {
            match &nodes[id] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, TreeNode::Leaf { .. })).count()
    }

    pub fn root_counts(&self) -> &[usize] {
        self.nodes[0].counts()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fit(rows: &[Vec<f64>], labels: Vec<usize>, depth: Option<usize>) -> (DecisionTree, f64) {
        let x = FeatureMatrix::from_rows(rows, Some(labels.clone())).unwrap();
        let t = tree_fit(&x, depth, 1).unwrap();
        let acc = x.row_iter().zip(&labels).filter(|(r, l)| t.predict(r) == **l).count() as f64 / labels.len() as f64;
        (t, acc)
    }

    #[test]
    fn single_class_single_leaf() {
        let (t, acc) = fit(&[vec![1.0], vec![2.0], vec![3.0]], vec![4, 4, 4], Some(3));
        assert_eq!(t.nodes.len(), 1);
        assert_eq!(acc, 1.0);
        assert_eq!(t.predict(&[100.0]), 4);
    }

    #[test]
    fn xor_depth_two() {
        let rows = vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]];
        let (t, acc) = fit(&rows, vec![0, 1, 1, 0], Some(2));
        assert_eq!(acc, 1.0);
        assert_eq!(t.depth(), 2);
    }

    #[test]
    fn midpoint_threshold_and_tie_break() {
        // both features separate perfectly; feature 0 wins the tie
        let rows = vec![vec![1.0, 10.0], vec![3.0, 30.0]];
        let (t, _) = fit(&rows, vec![0, 1], Some(1));
        match &t.nodes[0] {
            TreeNode::Split { feature, threshold, .. } => assert_eq!((*feature, *threshold), (0, 2.0)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn majority_tie_goes_to_lowest_class() {
        let (t, _) = fit(&[vec![1.0], vec![1.0]], vec![7, 3], Some(2));
        assert_eq!(t.predict_with_confidence(&[1.0]), (3, 0.5));
    }

    #[test]
    fn empty_matrix() {
        let x = FeatureMatrix::new(vec!["a".into()], vec![], Some(vec![])).unwrap();
        assert!(tree_fit(&x, None, 1).is_err());
    }
}
