use super::{FeatureMatrix, MlError};

/// Fraction of rows in `test` whose label equals `predict(row)`.
pub fn accuracy(predict: impl Fn(&[f64]) -> usize, test: &FeatureMatrix) -> Result<f64, MlError> {
    let labels = test.require_labels()?;
    if labels.is_empty() {
        return Err(MlError::InvalidInput("accuracy on an empty test set".into()));
    }
    let correct = test.row_iter().zip(labels).filter(|(r, &l)| predict(r) == l).count();
    Ok(correct as f64 / labels.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn echo_and_constant() {
        let x = FeatureMatrix::from_rows(&[vec![0.0], vec![1.0], vec![0.0], vec![1.0]], Some(vec![0, 1, 0, 1])).unwrap();
        assert_eq!(accuracy(|r| r[0] as usize, &x).unwrap(), 1.0);
        assert_eq!(accuracy(|_| 0, &x).unwrap(), 0.5);
        let empty = x.select_rows(&[]);
        assert!(accuracy(|_| 0, &empty).is_err());
    }
}
