//! Gaussian affinities and their column-stochastic normalization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};

/// Symmetric affinity matrix together with the bandwidth that produced it.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    pub w: Matrix,
    pub bandwidth: f64,
}

/// Column-stochastic operator `P = W D^-1`, with `D` the column sums of `W`.
#[derive(Debug, Clone)]
pub struct DiffusionOperator {
    pub p: Matrix,
    pub w: Matrix,
    pub degrees: Vec<f64>,
    pub bandwidth: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandwidthRecord {
    pub scale: f64,
    pub median_distance: f64,
    pub sigma: f64,
}

/// `W_ij = exp(-|x_i - x_j|^2 / (2 sigma^2))` over the rows of `x`.
pub fn gaussian_affinity(x: &Matrix, sigma: f64) -> Result<KernelMatrix> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidArgument(format!("bandwidth must be positive, got {sigma}")));
    }
    let d2 = linalg::pairwise_sq_distances(x);
    Ok(affinity_from_sq_distances(&d2, sigma))
}

pub fn affinity_from_sq_distances(d2: &Matrix, sigma: f64) -> KernelMatrix {
    let c = 1.0 / (2.0 * sigma * sigma);
    let n = d2.nrows();
    let mut w = Matrix::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            w[(i, j)] = (-d2[(i, j)] * c).exp();
        }
    }
    KernelMatrix { w, bandwidth: sigma }
}

/// `scale` times the median of the nonzero pairwise distances.
pub fn median_bandwidth(x: &Matrix, scale: f64) -> Result<f64> {
    Ok(bandwidth_record(&linalg::pairwise_sq_distances(x), scale)?.sigma)
}

pub fn bandwidth_record(d2: &Matrix, scale: f64) -> Result<BandwidthRecord> {
    if d2.nrows() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            available: d2.nrows(),
        });
    }
    if !(scale > 0.0) {
        return Err(Error::InvalidArgument(format!("bandwidth scale must be positive, got {scale}")));
    }
    let med = linalg::median_nonzero_distance(d2).ok_or(Error::AllPointsIdentical)?;
    Ok(BandwidthRecord {
        scale,
        median_distance: med,
        sigma: scale * med,
    })
}

/// Gaussian affinity with the median-heuristic bandwidth.
pub fn median_affinity(x: &Matrix, scale: f64) -> Result<(KernelMatrix, BandwidthRecord)> {
    let d2 = linalg::pairwise_sq_distances(x);
    let rec = bandwidth_record(&d2, scale)?;
    Ok((affinity_from_sq_distances(&d2, rec.sigma), rec))
}

/// Divides every column of `W` by its sum.
pub fn column_normalize(k: &KernelMatrix) -> Result<DiffusionOperator> {
    let n = k.w.nrows();
    let mut degrees = Vec::with_capacity(n);
    let mut p = k.w.clone();
    for j in 0..n {
        let col = p.col_as_slice_mut(j);
        let s: f64 = col.iter().sum();
        if !(s > 0.0) {
            return Err(Error::ZeroColumn { column: j });
        }
        col.iter_mut().for_each(|v| *v /= s);
        degrees.push(s);
    }
    Ok(DiffusionOperator {
        p,
        w: k.w.clone(),
        degrees,
        bandwidth: k.bandwidth,
    })
}

impl DiffusionOperator {
    pub fn len(&self) -> usize {
        self.p.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.p.nrows() == 0
    }

    /// `D^-1/2 W D^-1/2`, symmetric and similar to `P`.
    pub fn symmetric_conjugate(&self) -> Matrix {
        let n = self.len();
        let s: Vec<f64> = self.degrees.iter().map(|d| d.sqrt().recip()).collect();
        let mut m = Matrix::zeros(n, n);
        for j in 0..n {
            for i in 0..n {
                m[(i, j)] = self.w[(i, j)] * s[i] * s[j];
            }
        }
        // exact symmetry regardless of rounding in the products
        for j in 0..n {
            for i in (j + 1)..n {
                let v = 0.5 * (m[(i, j)] + m[(j, i)]);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }
}
