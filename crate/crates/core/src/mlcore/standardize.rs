use serde::{Deserialize, Serialize};

use super::{FeatureMatrix, MlError};

/// Per-column centering and scaling with population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    /// Population std; 1 for zero-variance columns.
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &FeatureMatrix) -> Result<Self, MlError> {
        if x.rows() < 2 {
            return Err(MlError::InvalidInput(format!("standardize needs at least 2 rows, got {}", x.rows())));
        }
        let n = x.rows() as f64;
        let mut mean = vec![0.0; x.cols()];
        let mut scale = vec![0.0; x.cols()];
        for j in 0..x.cols() {
            let col = x.column(j);
            let m = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
            let sd = var.sqrt();
            mean[j] = m;
            scale[j] = if sd > 1e-12 * m.abs().max(1.0) { sd } else { 1.0 };
        }
        Ok(Self { mean, scale })
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter().zip(&self.mean).zip(&self.scale).map(|((v, m), s)| (v - m) / s).collect()
    }

    pub fn transform(&self, x: &FeatureMatrix) -> Result<FeatureMatrix, MlError> {
        if x.cols() != self.mean.len() {
            return Err(MlError::InvalidInput(format!(
                "standardizer fitted on {} columns, got {}",
                self.mean.len(),
                x.cols()
            )));
        }
        x.map_rows(|r| self.transform_row(r))
    }

    pub fn select(&self, idx: &[usize]) -> Standardizer {
        Standardizer {
            mean: idx.iter().map(|&j| self.mean[j]).collect(),
            scale: idx.iter().map(|&j| self.scale[j]).collect(),
        }
    }
}

/// Centers every column and scales it to unit population variance.
pub fn standardize(x: &FeatureMatrix) -> Result<(FeatureMatrix, Standardizer), MlError> {
    let s = Standardizer::fit(x)?;
    Ok((s.transform(x)?, s))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(values: &[f64]) -> FeatureMatrix {
        FeatureMatrix::from_rows(&values.iter().map(|v| vec![*v]).collect::<Vec<_>>(), None).unwrap()
    }

    #[test]
    fn one_two_three() {
        let (z, s) = standardize(&col(&[1.0, 2.0, 3.0])).unwrap();
        // population std of [1,2,3] is sqrt(2/3)
        let e = 1.0 / (2.0f64 / 3.0).sqrt();
        for (got, want) in z.column(0).iter().zip([-e, 0.0, e]) {
            assert!((got - want).abs() < 1e-3);
        }
        assert!((z.column(0)[2] - 1.2247).abs() < 1e-3);
        assert_eq!(s.mean, vec![2.0]);
    }

    #[test]
    fn constant_column() {
        let (z, s) = standardize(&col(&[5.0, 5.0, 5.0])).unwrap();
        assert_eq!(z.column(0), vec![0.0, 0.0, 0.0]);
        assert_eq!(s.scale, vec![1.0]);
    }

    #[test]
    fn idempotent() {
        let (z, _) = standardize(&col(&[3.0, -1.0, 4.0, 1.0, 5.0])).unwrap();
        let (zz, _) = standardize(&z).unwrap();
        for (a, b) in z.values().iter().zip(zz.values()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn needs_two_rows() {
        assert!(standardize(&col(&[1.0])).is_err());
    }
}
