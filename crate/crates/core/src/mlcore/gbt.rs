//! Binary gradient boosting on logistic loss with least-squares regression trees.

use serde::{Deserialize, Serialize};

use super::{FeatureMatrix, MlError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum RegressionNode {
    Leaf { value: f64 },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

/// Least-squares regression tree; leaves hold the mean target of their rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<RegressionNode>,
}

impl RegressionTree {
    pub fn fit(x: &FeatureMatrix, target: &[f64], max_depth: usize) -> RegressionTree {
        let mut tree = RegressionTree { nodes: Vec::new() };
        tree.grow(x, target, (0..x.rows()).collect(), 0, max_depth);
        tree
    }

    fn grow(&mut self, x: &FeatureMatrix, t: &[f64], idx: Vec<usize>, depth: usize, max_depth: usize) -> usize {
        let m = idx.len();
        let sum: f64 = idx.iter().map(|&i| t[i]).sum();
        let id = self.nodes.len();
        self.nodes.push(RegressionNode::Leaf { value: if m > 0 { sum / m as f64 } else { 0.0 } });
        if depth >= max_depth || m < 2 {
            return id;
        }
        // maximize between-child sum of squares: sum_l^2/n_l + sum_r^2/n_r
        let base = sum * sum / m as f64;
        let mut best: Option<(usize, f64, f64)> = None;
        let mut order = idx.clone();
        for f in 0..x.cols() {
            order.sort_by(|&a, &b| x.get(a, f).total_cmp(&x.get(b, f)));
            let mut left_sum = 0.0;
            for p in 1..m {
                left_sum += t[order[p - 1]];
                let (lo, hi) = (x.get(order[p - 1], f), x.get(order[p], f));
                if lo == hi {
                    continue;
                }
                let right_sum = sum - left_sum;
                let gain = left_sum * left_sum / p as f64 + right_sum * right_sum / (m - p) as f64 - base;
                if gain > 1e-12 && best.is_none_or(|b| gain > b.2 + 1e-12) {
                    let mid = lo + (hi - lo) / 2.0;
                    best = Some((f, if mid < hi { mid } else { lo }, gain));
                }
            }
        }
        let Some((feature, threshold, _)) = best else {
            return id;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| x.get(i, feature) <= threshold);
        let left = self.grow(x, t, l, depth + 1, max_depth);
        let right = self.grow(x, t, r, depth + 1, max_depth);
        self.nodes[id] = RegressionNode::Split { feature, threshold, left, right };
        id
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                RegressionNode::Leaf { value } => return *value,
                RegressionNode::Split { feature, threshold, left, right } => {
                    id = if row[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbtParams {
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
}

impl Default for GbtParams {
    fn default() -> Self {
        Self { n_rounds: 100, learning_rate: 0.1, max_depth: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientBoostedTrees {
    /// Log-odds of class 1 in the training labels.
    pub initial_score: f64,
    pub learning_rate: f64,
    pub trees: Vec<RegressionTree>,
    /// Set when training saw a single class; the model always predicts it.
    pub constant_class: Option<usize>,
    /// Mean training log loss before round 1 and after each round.
    pub loss_history: Vec<f64>,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Mean logistic loss of raw scores against 0/1 targets.
pub fn log_loss(scores: &[f64], y: &[f64]) -> f64 {
    let total: f64 = scores
        .iter()
        .zip(y)
        // log(1 + e^s) - y s, evaluated stably
        .map(|(&s, &t)| s.max(0.0) + (-s.abs()).exp().ln_1p() - t * s)
        .sum();
    total / scores.len() as f64
}

pub fn gbt_fit(x: &FeatureMatrix, params: &GbtParams) -> Result<GradientBoostedTrees, MlError> {
    let labels = x.require_labels()?;
    if labels.is_empty() {
        return Err(MlError::InvalidInput("cannot boost on an empty matrix".into()));
    }
    if let Some(bad) = labels.iter().find(|&&l| l > 1) {
        return Err(MlError::InvalidInput(format!("gradient boosting is binary; found label {bad}")));
    }
    let y: Vec<f64> = labels.iter().map(|&l| l as f64).collect();
    let positives = y.iter().sum::<f64>();
    let n = y.len() as f64;
    if positives == 0.0 || positives == n {
        return Ok(GradientBoostedTrees {
            initial_score: 0.0,
            learning_rate: params.learning_rate,
            trees: Vec::new(),
            constant_class: Some(labels[0]),
            loss_history: Vec::new(),
        });
    }
    let p = positives / n;
    let initial_score = (p / (1.0 - p)).ln();
    let mut scores = vec![initial_score; labels.len()];
    let mut loss_history = vec![log_loss(&scores, &y)];
    let mut trees = Vec::with_capacity(params.n_rounds);
    for _ in 0..params.n_rounds {
        let residual: Vec<f64> = scores.iter().zip(&y).map(|(&s, &t)| t - sigmoid(s)).collect();
        let tree = RegressionTree::fit(x, &residual, params.max_depth);
        for (i, s) in scores.iter_mut().enumerate() {
            *s += params.learning_rate * tree.predict(x.row(i));
        }
        loss_history.push(log_loss(&scores, &y));
        trees.push(tree);
    }
    Ok(GradientBoostedTrees { initial_score, learning_rate: params.learning_rate, trees, constant_class: None, loss_history })
}

impl GradientBoostedTrees {
    pub fn score(&self, row: &[f64]) -> f64 {
        self.initial_score + self.learning_rate * self.trees.iter().map(|t| t.predict(row)).sum::<f64>()
    }

    /// Predicted class and the sigmoid probability of that class.
    pub fn predict_with_confidence(&self, row: &[f64]) -> (usize, f64) {
        if let Some(c) = self.constant_class {
            return (c, 1.0);
        }
        let p = sigmoid(self.score(row));
        if p > 0.5 {
            (1, p)
        } else {
            (0, 1.0 - p)
        }
    }

    pub fn predict(&self, row: &[f64]) -> usize {
        self.predict_with_confidence(row).0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn separable() -> FeatureMatrix {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![f64::from(i), f64::from((i * 7) % 5)]).collect();
        let labels = (0..20).map(|i| usize::from(i >= 9)).collect();
        FeatureMatrix::from_rows(&rows, Some(labels)).unwrap()
    }

    #[test]
    fn separable_within_fifty_rounds() {
        let x = separable();
        let m = gbt_fit(&x, &GbtParams { n_rounds: 50, ..Default::default() }).unwrap();
        let labels = x.labels().unwrap();
        assert!(x.row_iter().zip(labels).all(|(r, l)| m.predict(r) == *l));
    }

    #[test]
    fn zero_learning_rate_is_prior() {
        let x = separable();
        let m = gbt_fit(&x, &GbtParams { learning_rate: 0.0, ..Default::default() }).unwrap();
        // 11 of 20 rows are positive
        assert!(x.row_iter().all(|r| m.predict(r) == 1));
        let (_, conf) = m.predict_with_confidence(x.row(0));
        assert!((conf - 0.55).abs() < 1e-12);
    }

    #[test]
    fn single_class_is_constant() {
        let x = FeatureMatrix::from_rows(&[vec![1.0], vec![2.0]], Some(vec![1, 1])).unwrap();
        let m = gbt_fit(&x, &GbtParams::default()).unwrap();
        assert_eq!(m.constant_class, Some(1));
        assert_eq!(m.predict_with_confidence(&[-5.0]), (1, 1.0));
    }

    #[test]
    fn multiclass_rejected() {
        let x = FeatureMatrix::from_rows(&[vec![1.0], vec![2.0]], Some(vec![0, 2])).unwrap();
        assert!(gbt_fit(&x, &GbtParams::default()).is_err());
    }

    #[test]
    fn stable_log_loss() {
        assert!((log_loss(&[0.0], &[1.0]) - 2f64.ln()).abs() < 1e-15);
        assert!(log_loss(&[800.0], &[1.0]).abs() < 1e-12);
        assert!((log_loss(&[-800.0], &[1.0]) - 800.0).abs() < 1e-9);
    }
}
