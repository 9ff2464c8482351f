use std::collections::BTreeSet;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::MlError;

/// Dense row-major table of finite reals with named columns and optional class labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    col_names: Vec<String>,
    labels: Option<Vec<usize>>,
}

impl FeatureMatrix {
    pub fn new(
        col_names: Vec<String>,
        values: Vec<f64>,
        labels: Option<Vec<usize>>,
    ) -> Result<Self, MlError> {
        let cols = col_names.len();
        if cols == 0 {
            return Err(MlError::InvalidInput("matrix needs at least one column".into()));
        }
        if !values.len().is_multiple_of(cols) {
            return Err(MlError::InvalidInput(format!(
                "{} values do not fill rows of {cols} columns",
                values.len()
            )));
        }
        let rows = values.len() / cols;
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(MlError::InvalidInput(format!(
                "non-finite value at row {}, column {}",
                i / cols,
                col_names[i % cols]
            )));
        }
        let unique: BTreeSet<&String> = col_names.iter().collect();
        if unique.len() != cols {
            return Err(MlError::InvalidInput("column names must be unique".into()));
        }
        if let Some(l) = &labels {
            if l.len() != rows {
                return Err(MlError::InvalidInput(format!("{} labels for {rows} rows", l.len())));
            }
        }
        Ok(Self { rows, cols, values, col_names, labels })
    }

    /// Builds from rows; column names default to `x0, x1, ...`.
    pub fn from_rows(rows: &[Vec<f64>], labels: Option<Vec<usize>>) -> Result<Self, MlError> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(MlError::InvalidInput("ragged rows".into()));
        }
        let names = (0..cols).map(|j| format!("x{j}")).collect();
        Self::new(names, rows.concat(), labels)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn col_names(&self) -> &[String] {
        &self.col_names
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn require_labels(&self) -> Result<&[usize], MlError> {
        self.labels().ok_or_else(|| MlError::InvalidInput("matrix has no labels".into()))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.cols)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.row_iter().map(|r| r[j]).collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.col_names.iter().position(|n| n == name)
    }

    pub fn with_labels(mut self, labels: Option<Vec<usize>>) -> Result<Self, MlError> {
        if let Some(l) = &labels {
            if l.len() != self.rows {
                return Err(MlError::InvalidInput(format!("{} labels for {} rows", l.len(), self.rows)));
            }
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn select_rows(&self, idx: &[usize]) -> FeatureMatrix {
        let values = idx.iter().flat_map(|&i| self.row(i).iter().copied()).collect();
        let labels = self.labels.as_ref().map(|l| idx.iter().map(|&i| l[i]).collect());
        FeatureMatrix { rows: idx.len(), cols: self.cols, values, col_names: self.col_names.clone(), labels }
    }

    pub fn select_columns(&self, idx: &[usize]) -> FeatureMatrix {
        let values = self.row_iter().flat_map(|r| idx.iter().map(move |&j| r[j])).collect();
        FeatureMatrix {
            rows: self.rows,
            cols: idx.len(),
            values,
            col_names: idx.iter().map(|&j| self.col_names[j].clone()).collect(),
            labels: self.labels.clone(),
        }
    }

    pub fn map_rows(&self, f: impl Fn(&[f64]) -> Vec<f64>) -> Result<FeatureMatrix, MlError> {
        let values = self.row_iter().flat_map(f).collect();
        FeatureMatrix::new(self.col_names.clone(), values, self.labels.clone())
    }

    /// Writes a comma-separated table: header of column names (plus `label` when labelled).
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), MlError> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<&str> = self.col_names.iter().map(String::as_str).collect();
        if self.labels.is_some() {
            header.push("label");
        }
        w.write_record(&header).map_err(csv_err)?;
        for i in 0..self.rows {
            let mut rec: Vec<String> = self.row(i).iter().map(|v| v.to_string()).collect();
            if let Some(l) = &self.labels {
                rec.push(l[i].to_string());
            }
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush().map_err(|e| MlError::Io(e.to_string()))
    }

    pub fn read_csv<R: Read>(input: R) -> Result<FeatureMatrix, MlError> {
        let mut r = csv::Reader::from_reader(input);
        let header: Vec<String> = r.headers().map_err(csv_err)?.iter().map(str::to_owned).collect();
        let has_label = header.last().is_some_and(|h| h == "label");
        let names: Vec<String> = if has_label { header[..header.len() - 1].to_vec() } else { header };
        let mut values = Vec::new();
        let mut labels = has_label.then(Vec::new);
        for (line, rec) in r.records().enumerate() {
            let rec = rec.map_err(csv_err)?;
            if rec.len() != names.len() + usize::from(has_label) {
                return Err(MlError::Parse(format!("row {}: wrong field count", line + 1)));
            }
            for (j, field) in rec.iter().enumerate() {
                if j < names.len() {
                    values.push(field.trim().parse::<f64>().map_err(|e| {
                        MlError::Parse(format!("row {}, column {}: {e}", line + 1, names[j]))
                    })?);
                } else if let Some(l) = labels.as_mut() {
                    l.push(field.trim().parse::<usize>().map_err(|e| {
                        MlError::Parse(format!("row {}, label: {e}", line + 1))
                    })?);
                }
            }
        }
        FeatureMatrix::new(names, values, labels)
    }
}

fn csv_err(e: csv::Error) -> MlError {
    MlError::Parse(e.to_string())
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_input() {
        assert!(FeatureMatrix::from_rows(&[vec![1.0, f64::NAN]], None).is_err());
        assert!(FeatureMatrix::new(vec!["a".into(), "a".into()], vec![1.0, 2.0], None).is_err());
        assert!(FeatureMatrix::from_rows(&[vec![1.0], vec![2.0]], Some(vec![0])).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let m = FeatureMatrix::new(
            vec!["age".into(), "t_market_page".into()],
            vec![31.0, 0.1 + 0.2, 22.0, 1e-300],
            Some(vec![1, 0]),
        )
        .unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("age,t_market_page,label\n"));
        assert_eq!(FeatureMatrix::read_csv(buf.as_slice()).unwrap(), m);
    }

    #[test]
    fn selection() {
        let m = FeatureMatrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]], Some(vec![0, 1])).unwrap();
        let c = m.select_columns(&[2, 0]);
        assert_eq!(c.row(1), &[6.0, 4.0]);
        assert_eq!(c.col_names(), &["x2".to_string(), "x0".to_string()]);
        let r = m.select_rows(&[1]);
        assert_eq!(r.labels(), Some(&[1usize][..]));
    }
}
