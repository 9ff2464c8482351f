use std::collections::BTreeMap;

use super::{FeatureMatrix, MlError};
use crate::rng;

/// Row indices of a train/test partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

impl Split {
    pub fn apply(&self, x: &FeatureMatrix) -> (FeatureMatrix, FeatureMatrix) {
        (x.select_rows(&self.train), x.select_rows(&self.test))
    }
}

/// Per-class shuffled split. Each class of size `s` sends `floor(ratio * s)` rows to
/// train, clamped so both sides keep at least one member. Classes are visited in
/// ascending label order with a single RNG seeded from `seed`.
pub fn stratified_split(labels: &[usize], ratio: f64, seed: u64) -> Result<Split, MlError> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(MlError::OutOfRange(format!("split ratio must lie in (0, 1), got {ratio}")));
    }
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    if let Some((class, _)) = by_class.iter().find(|(_, rows)| rows.len() < 2) {
        return Err(MlError::InvalidInput(format!("class {class} has fewer than 2 members")));
    }
    let mut r = rng::seeded(seed);
    let mut split = Split { train: Vec::new(), test: Vec::new() };
    for rows in by_class.values_mut() {
        rng::shuffle(rows, &mut r);
        let n_train = ((ratio * rows.len() as f64).floor() as usize).clamp(1, rows.len() - 1);
        split.train.extend_from_slice(&rows[..n_train]);
        split.test.extend_from_slice(&rows[n_train..]);
    }
    split.train.sort_unstable();
    split.test.sort_unstable();
    Ok(split)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thirty_three_member_cohort() {
        let labels: Vec<usize> = (0..33).map(|i| usize::from(i >= 16)).collect();
        let s = stratified_split(&labels, 0.7, 5).unwrap();
        assert_eq!((s.train.len(), s.test.len()), (22, 11));
        let mut all: Vec<usize> = s.train.iter().chain(&s.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..33).collect::<Vec<_>>());
        assert_eq!(s, stratified_split(&labels, 0.7, 5).unwrap());
    }

    #[test]
    fn rejects_degenerate_input() {
        assert!(stratified_split(&[0, 0, 1, 1], 1.0, 0).is_err());
        assert!(stratified_split(&[0, 0, 1], 0.5, 0).is_err());
    }
}
