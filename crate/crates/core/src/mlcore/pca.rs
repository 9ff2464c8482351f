use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::{FeatureMatrix, MlError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub col_names: Vec<String>,
    pub mean: Vec<f64>,
    /// Population std of each input column (1 where the column is constant).
    pub scale: Vec<f64>,
    /// `k` unit-length rows, one per component, in decreasing variance order.
    pub components: Vec<Vec<f64>>,
    /// Sample variance captured by each component.
    pub explained_variance: Vec<f64>,
}

/// Principal components of `x` via a symmetric eigendecomposition of the sample covariance
/// of the centered, unit-scaled columns (a no-op rescale when `x` is already standardized). Each component's largest-magnitude coordinate is positive.
pub fn pca_fit(x: &FeatureMatrix, k: usize) -> Result<PcaModel, MlError> {
    let (n, d) = (x.rows(), x.cols());
    if n < 2 || k == 0 || k > (n - 1).min(d) {
        return Err(MlError::OutOfRange(format!(
            "k = {k} must lie in [1, min(n-1, d)] for n = {n}, d = {d}"
        )));
    }
    let nf = n as f64;
    let mean: Vec<f64> = (0..d).map(|j| x.column(j).iter().sum::<f64>() / nf).collect();
    let scale: Vec<f64> = (0..d)
        .map(|j| {
            let var = x.column(j).iter().map(|v| (v - mean[j]).powi(2)).sum::<f64>() / nf;
            if var.sqrt() > 1e-12 { var.sqrt() } else { 1.0 }
        })
        .collect();
    let z = DMatrix::from_fn(n, d, |i, j| (x.get(i, j) - mean[j]) / scale[j]);
    let cov = (z.transpose() * &z) / (nf - 1.0);
    let eig = SymmetricEigen::new(cov);

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));

    let mut components = Vec::with_capacity(k);
    let mut explained_variance = Vec::with_capacity(k);
    for &idx in order.iter().take(k) {
        let mut v: Vec<f64> = eig.eigenvectors.column(idx).iter().copied().collect();
        let pivot = v
            .iter()
            .enumerate()
            .fold(0, |best, (i, c)| if c.abs() > v[best].abs() + 1e-12 { i } else { best });
        if v[pivot] < 0.0 {
            v.iter_mut().for_each(|c| *c = -*c);
        }
        components.push(v);
        explained_variance.push(eig.eigenvalues[idx].max(0.0));
    }
    Ok(PcaModel {
        col_names: x.col_names().to_vec(),
        mean,
        scale,
        components,
        explained_variance,
    })
}

impl PcaModel {
    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn project(&self, row: &[f64]) -> Vec<f64> {
        let z: Vec<f64> = row.iter().zip(&self.mean).zip(&self.scale).map(|((v, m), s)| (v - m) / s).collect();
        self.components.iter().map(|c| c.iter().zip(&z).map(|(a, b)| a * b).sum()).collect()
    }

    /// Maps component scores back to the input space.
    pub fn reconstruct(&self, scores: &[f64]) -> Vec<f64> {
        let d = self.mean.len();
        (0..d)
            .map(|j| {
                let z: f64 = self.components.iter().zip(scores).map(|(c, s)| c[j] * s).sum();
                z * self.scale[j] + self.mean[j]
            })
            .collect()
    }

    /// Mean squared reconstruction error over the rows of `x`.
    pub fn reconstruction_error(&self, x: &FeatureMatrix) -> f64 {
        let total: f64 = x
            .row_iter()
            .map(|r| super::matrix::sq_dist(r, &self.reconstruct(&self.project(r))))
            .sum();
        total / x.rows() as f64
    }

    /// Per-feature importance: `sum_j explained_variance[j] * components[j][f]^2`.
    pub fn feature_scores(&self) -> Vec<f64> {
        let d = self.mean.len();
        (0..d)
            .map(|f| self.components.iter().zip(&self.explained_variance).map(|(c, ev)| ev * c[f] * c[f]).sum())
            .collect()
    }
}

/// Names of the `m` original features with the largest variance-weighted squared loadings;
/// ties go to the lower column index.
pub fn pca_top_features(model: &PcaModel, m: usize) -> Result<Vec<String>, MlError> {
    let d = model.col_names.len();
    if m == 0 || m > d {
        return Err(MlError::OutOfRange(format!("m = {m} must lie in [1, {d}]")));
    }
    let scores = model.feature_scores();
    let mut idx: Vec<usize> = (0..d).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    Ok(idx.into_iter().take(m).map(|i| model.col_names[i].clone()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn line_y_equals_x() {
        let rows: Vec<Vec<f64>> = (0..6).map(|i| vec![f64::from(i), f64::from(i)]).collect();
        let x = FeatureMatrix::from_rows(&rows, None).unwrap();
        let (z, _) = crate::mlcore::standardize(&x).unwrap();
        let m = pca_fit(&z, 2).unwrap();
        let h = 1.0 / 2f64.sqrt();
        assert!((m.components[0][0] - h).abs() < 1e-9 && (m.components[0][1] - h).abs() < 1e-9);
        assert!(m.explained_variance[1].abs() < 1e-9);
    }

    #[test]
    fn isotropic_sample() {
        let mut r = rng::seeded(11);
        let rows: Vec<Vec<f64>> = (0..10_000)
            .map(|_| (0..3).map(|_| rng::standard_normal(&mut r)).collect())
            .collect();
        let x = FeatureMatrix::from_rows(&rows, None).unwrap();
        let m = pca_fit(&x, 3).unwrap();
        let ratio = m.explained_variance[0] / m.explained_variance[2];
        assert!((0.8..=1.25).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn k_out_of_range() {
        let x = FeatureMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0], vec![0.0, 0.5]], None).unwrap();
        assert!(pca_fit(&x, 0).is_err());
        assert!(pca_fit(&x, 3).is_err());
        assert!(pca_fit(&x, 2).is_ok());
    }

    #[test]
    fn single_varying_feature_tops() {
        let rows: Vec<Vec<f64>> = (0..8).map(|i| vec![1.0, 2.0, 3.0, f64::from(i * i), 5.0]).collect();
        let x = FeatureMatrix::from_rows(&rows, None).unwrap();
        let m = pca_fit(&x, 1).unwrap();
        assert_eq!(pca_top_features(&m, 1).unwrap(), vec!["x3".to_string()]);
    }

    #[test]
    fn all_features_is_permutation() {
        let mut r = rng::seeded(3);
        let rows: Vec<Vec<f64>> = (0..30).map(|_| (0..4).map(|_| rng::standard_normal(&mut r)).collect()).collect();
        let x = FeatureMatrix::from_rows(&rows, None).unwrap();
        let m = pca_fit(&x, 2).unwrap();
        let mut top = pca_top_features(&m, 4).unwrap();
        top.sort();
        assert_eq!(top, vec!["x0", "x1", "x2", "x3"]);
        assert!(pca_top_features(&m, 5).is_err());
    }
}
