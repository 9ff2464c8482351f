//! Multilayer perceptron: dense hidden layers, softmax output, mean cross-entropy,
//! full-batch gradient descent.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{FeatureMatrix, MlError};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the pre-activation.
    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - z.tanh().powi(2),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for MlpParams {
    fn default() -> Self {
        Self { hidden: vec![16], activation: Activation::Relu, epochs: 500, learning_rate: 0.01, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub n_in: usize,
    pub n_out: usize,
    /// Row-major `n_out x n_in`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    fn forward(&self, input: &[f64]) -> Vec<f64> {
        (0..self.n_out)
            .map(|o| {
                let w = &self.weights[o * self.n_in..(o + 1) * self.n_in];
                self.bias[o] + w.iter().zip(input).map(|(a, b)| a * b).sum::<f64>()
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<DenseLayer>,
    pub activation: Activation,
    /// Sorted distinct training labels; output unit `i` scores `classes[i]`.
    pub classes: Vec<usize>,
    /// Mean training loss before epoch 1 and after every epoch.
    pub loss_history: Vec<f64>,
}

fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

impl Mlp {
    /// Glorot-uniform weights `U(-sqrt(6/(fan_in+fan_out)), +sqrt(6/(fan_in+fan_out)))`, zero biases.
    pub fn init(n_features: usize, classes: Vec<usize>, params: &MlpParams) -> Mlp {
        let mut r = rng::seeded(params.seed);
        let mut sizes = vec![n_features];
        sizes.extend(&params.hidden);
        sizes.push(classes.len());
        let layers = sizes
            .windows(2)
            .map(|w| {
                let (n_in, n_out) = (w[0], w[1]);
                let limit = (6.0 / (n_in + n_out) as f64).sqrt();
                DenseLayer {
                    n_in,
                    n_out,
                    weights: (0..n_in * n_out).map(|_| r.random_range(-limit..=limit)).collect(),
                    bias: vec![0.0; n_out],
                }
            })
            .collect();
        Mlp { layers, activation: params.activation, classes, loss_history: Vec::new() }
    }

    /// Pre-activations of every layer.
    fn forward(&self, row: &[f64]) -> Vec<Vec<f64>> {
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut a = row.to_vec();
        for (li, layer) in self.layers.iter().enumerate() {
            let z = layer.forward(&a);
            if li + 1 < self.layers.len() {
                a = z.iter().map(|&v| self.activation.apply(v)).collect();
            }
            pre.push(z);
        }
        pre
    }

    pub fn probabilities(&self, row: &[f64]) -> Vec<f64> {
        softmax(self.forward(row).last().expect("output layer"))
    }

    pub fn predict_with_confidence(&self, row: &[f64]) -> (usize, f64) {
        let p = self.probabilities(row);
        let best = (0..p.len()).fold(0, |b, i| if p[i] > p[b] { i } else { b });
        (self.classes[best], p[best])
    }

    pub fn predict(&self, row: &[f64]) -> usize {
        self.predict_with_confidence(row).0
    }

    fn targets(&self, x: &FeatureMatrix) -> Result<Vec<usize>, MlError> {
        x.require_labels()?
            .iter()
            .map(|l| {
                self.classes
                    .binary_search(l)
                    .map_err(|_| MlError::InvalidInput(format!("label {l} not among the network's classes")))
            })
            .collect()
    }

    /// Mean cross-entropy over the labelled rows of `x`.
    pub fn loss(&self, x: &FeatureMatrix) -> Result<f64, MlError> {
        let t = self.targets(x)?;
        let total: f64 = x.row_iter().zip(&t).map(|(r, &c)| -self.probabilities(r)[c].max(1e-300).ln()).sum();
        Ok(total / x.rows() as f64)
    }

    /// Gradient of [`loss`](Self::loss) with respect to every weight and bias,
    /// laid out like [`params`](Self::params).
    pub fn gradient(&self, x: &FeatureMatrix) -> Result<Vec<f64>, MlError> {
        let t = self.targets(x)?;
        let mut grads: Vec<DenseLayer> = self
            .layers
            .iter()
            .map(|l| DenseLayer { n_in: l.n_in, n_out: l.n_out, weights: vec![0.0; l.weights.len()], bias: vec![0.0; l.n_out] })
            .collect();
        let n = x.rows() as f64;
        for (row, &target) in x.row_iter().zip(&t) {
            let pre = self.forward(row);
            let mut delta = softmax(pre.last().expect("output layer"));
            delta[target] -= 1.0;
            for li in (0..self.layers.len()).rev() {
                let input: Vec<f64> = if li == 0 {
                    row.to_vec()
                } else {
                    pre[li - 1].iter().map(|&v| self.activation.apply(v)).collect()
                };
                let layer = &self.layers[li];
                let g = &mut grads[li];
                for o in 0..layer.n_out {
                    g.bias[o] += delta[o] / n;
                    for i in 0..layer.n_in {
                        g.weights[o * layer.n_in + i] += delta[o] * input[i] / n;
                    }
                }
                if li > 0 {
                    delta = (0..layer.n_in)
                        .map(|i| {
                            let back: f64 = (0..layer.n_out).map(|o| layer.weights[o * layer.n_in + i] * delta[o]).sum();
                            back * self.activation.derivative(pre[li - 1][i])
                        })
                        .collect();
                }
            }
        }
        Ok(flatten(&grads))
    }

    /// All weights and biases, layer by layer (weights then bias).
    pub fn params(&self) -> Vec<f64> {
        flatten(&self.layers)
    }

    pub fn set_params(&mut self, p: &[f64]) {
        let mut it = p.iter().copied();
        for l in &mut self.layers {
            l.weights.iter_mut().chain(l.bias.iter_mut()).for_each(|w| *w = it.next().expect("param length"));
        }
    }
}

fn flatten(layers: &[DenseLayer]) -> Vec<f64> {
    layers.iter().flat_map(|l| l.weights.iter().chain(&l.bias).copied()).collect()
}

/// Trains a network on labelled, standardized rows. Unstandardized input is accepted
/// but convergence at the default learning rate is not expected.
pub fn mlp_fit(x: &FeatureMatrix, params: &MlpParams) -> Result<Mlp, MlError> {
    if x.rows() < 2 {
        return Err(MlError::InvalidInput(format!("mlp needs at least 2 rows, got {}", x.rows())));
    }
    let mut classes = x.require_labels()?.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let mut net = Mlp::init(x.cols(), classes, params);
    let mut history = Vec::with_capacity(params.epochs + 1);
    history.push(net.loss(x)?);
    for _ in 0..params.epochs {
        let g = net.gradient(x)?;
        let updated: Vec<f64> = net.params().iter().zip(&g).map(|(w, d)| w - params.learning_rate * d).collect();
        net.set_params(&updated);
        history.push(net.loss(x)?);
    }
    net.loss_history = history;
    Ok(net)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_is_seeded_and_bounded() {
        let p = MlpParams { seed: 9, ..Default::default() };
        let a = Mlp::init(5, vec![0, 1], &p);
        assert_eq!(a, Mlp::init(5, vec![0, 1], &p));
        let limit = (6.0f64 / 21.0).sqrt();
        assert!(a.layers[0].weights.iter().all(|w| w.abs() <= limit));
        assert_ne!(a, Mlp::init(5, vec![0, 1], &MlpParams { seed: 10, ..Default::default() }));
    }

    #[test]
    fn zero_epochs_depends_on_init_only() {
        let x = FeatureMatrix::from_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]], Some(vec![0, 1])).unwrap();
        let p = MlpParams { epochs: 0, seed: 3, ..Default::default() };
        let a = mlp_fit(&x, &p).unwrap();
        let b = mlp_fit(&x, &p).unwrap();
        assert_eq!(a.predict_with_confidence(&[0.3, 0.2]), b.predict_with_confidence(&[0.3, 0.2]));
        assert_eq!(a.params(), Mlp::init(2, vec![0, 1], &p).params());
    }

    #[test]
    fn loss_decreases() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![f64::from(i) / 10.0 - 1.0, f64::from(i % 3) - 1.0]).collect();
        let labels = (0..20).map(|i| usize::from(i >= 10)).collect();
        let x = FeatureMatrix::from_rows(&rows, Some(labels)).unwrap();
        let m = mlp_fit(&x, &MlpParams::default()).unwrap();
        assert!(m.loss_history[500] < m.loss_history[0]);
    }

    #[test]
    fn softmax_is_stable() {
        let p = softmax(&[1000.0, 1000.0]);
        assert!((p[0] - 0.5).abs() < 1e-15);
    }
}
