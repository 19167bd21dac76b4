use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Square count matrix: rows are true classes, columns predictions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub counts: Vec<Vec<u64>>,
}

impl Confusion {
    pub fn new(classes: usize) -> Self {
        Self {
            counts: vec![vec![0; classes]; classes],
        }
    }

    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self> {
        let n = counts.len();
        if n == 0 {
            return Err(Error::EmptyMatrix);
        }
        if counts.iter().any(|r| r.len() != n) {
            return Err(Error::ShapeMismatch("confusion matrix must be square".into()));
        }
        Ok(Self { counts })
    }

    pub fn classes(&self) -> usize {
        self.counts.len()
    }

    pub fn add(&mut self, truth: usize, predicted: usize) {
        self.counts[truth][predicted] += 1;
    }

    pub fn merge(&mut self, other: &Confusion) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes()).map(|i| self.counts[i][i]).sum()
    }

    /// Accuracy over all samples (trace / total); 0 for an empty matrix.
    pub fn weighted_accuracy(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            0.0
        } else {
            self.trace() as f64 / total as f64
        }
    }

    pub fn row_totals(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    /// Per-class recall; `None` for classes without samples.
    pub fn recalls(&self) -> Vec<Option<f64>> {
        self.counts
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let t: u64 = r.iter().sum();
                (t > 0).then(|| r[i] as f64 / t as f64)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accuracy_is_trace_over_total() {
        let c = Confusion::from_counts(vec![vec![1, 3], vec![0, 4]]).unwrap();
        assert_eq!(c.weighted_accuracy(), 5.0 / 8.0);
        assert_eq!(c.row_totals(), vec![4, 4]);
        assert_eq!(c.recalls(), vec![Some(0.25), Some(1.0)]);
        assert!(matches!(Confusion::from_counts(vec![]), Err(Error::EmptyMatrix)));
    }

    #[test]
    fn merge_adds() {
        let mut a = Confusion::new(2);
        a.add(0, 1);
        let mut b = Confusion::new(2);
        b.add(0, 1);
        b.add(1, 1);
        a.merge(&b);
        assert_eq!(a.counts, vec![vec![0, 2], vec![0, 1]]);
    }
}
