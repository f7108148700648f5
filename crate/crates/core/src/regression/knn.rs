use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};

use super::kdtree::KdTree;

/// Distances below this count as an exact hit on a training point.
pub const EXACT_HIT: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct KnnModel {
    tree: KdTree,
    labels: Vec<Vec<f64>>,
    k: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnRecord {
    pub k: usize,
    pub points: Vec<Vec<f64>>,
    pub labels: Vec<Vec<f64>>,
}

pub fn knn_fit(x: &Matrix, y: &Matrix, k: usize) -> Result<KnnModel> {
    if x.nrows() != y.nrows() {
        return Err(Error::LengthMismatch {
            left: x.nrows(),
            right: y.nrows(),
        });
    }
    if k == 0 || k > x.nrows() {
        return Err(Error::KTooLarge { k, n: x.nrows() });
    }
    let points = (0..x.nrows()).map(|i| linalg::row(x, i)).collect();
    let labels = (0..y.nrows()).map(|i| linalg::row(y, i)).collect();
    Ok(KnnModel {
        tree: KdTree::build(points),
        labels,
        k,
    })
}

impl KnnModel {
    pub fn k(&self) -> usize {
        self.k
    }

    /// Inverse-distance weighted mean of the `k` nearest labels.
    pub fn predict_one(&self, q: &[f64]) -> Vec<f64> {
        let nn = self.tree.nearest(q, self.k);
        let first = nn[0];
        if first.dist2.sqrt() < EXACT_HIT {
            return self.labels[first.index].clone();
        }
        let m = self.labels[0].len();
        let mut acc = vec![0.0; m];
        let mut total = 0.0;
        for n in &nn {
            let w = 1.0 / n.dist2.sqrt();
            total += w;
            for (a, l) in acc.iter_mut().zip(&self.labels[n.index]) {
                *a += w * l;
            }
        }
        acc.iter_mut().for_each(|a| *a /= total);
        acc
    }

    pub fn predict(&self, q: &Matrix) -> Result<Matrix> {
        let d = self.tree.point(0).len();
        if q.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: q.ncols(),
            });
        }
        let rows: Vec<Vec<f64>> = (0..q.nrows()).map(|i| self.predict_one(&linalg::row(q, i))).collect();
        let m = self.labels[0].len();
        Ok(Matrix::from_fn(q.nrows(), m, |i, j| rows[i][j]))
    }

    pub fn record(&self) -> KnnRecord {
        KnnRecord {
            k: self.k,
            points: (0..self.tree.len()).map(|i| self.tree.point(i).to_vec()).collect(),
            labels: self.labels.clone(),
        }
    }

    pub fn from_record(r: KnnRecord) -> Result<Self> {
        if r.k == 0 || r.k > r.points.len() {
            return Err(Error::KTooLarge {
                k: r.k,
                n: r.points.len(),
            });
        }
        Ok(Self {
            tree: KdTree::build(r.points),
            labels: r.labels,
            k: r.k,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_distance_weighting() {
        let x = linalg::from_rows(3, 1, &[0.0, 1.0, 2.0]).unwrap();
        let y = linalg::from_rows(3, 1, &[0.0, 10.0, 20.0]).unwrap();
        let m = knn_fit(&x, &y, 2).unwrap();
        assert!((m.predict_one(&[0.4])[0] - 4.0).abs() < 1e-12);
        assert_eq!(m.predict_one(&[1.0])[0], 10.0);
        assert!(matches!(knn_fit(&x, &y, 4), Err(Error::KTooLarge { k: 4, n: 3 })));
    }
}
