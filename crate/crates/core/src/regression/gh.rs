use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels;
use crate::linalg::{self, Matrix};

/// Geometric Harmonics: eigenvectors of the training kernel, extended to new
/// points by the Nystrom formula.
#[derive(Debug, Clone)]
pub struct GhModel {
    pub train: Matrix,
    pub sigma: f64,
    pub eigenvalues: Vec<f64>,
    /// `n x m`, orthonormal columns.
    pub eigenvectors: Matrix,
    /// `m x outputs`: projections of the training targets.
    pub coefficients: Matrix,
    pub lambda_cut: f64,
    /// Applied to queries before the kernel: `(q - shift) / scale`.
    pub shift: Vec<f64>,
    pub scale: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GhRecord {
    pub points: Vec<Vec<f64>>,
    pub sigma: f64,
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<Vec<f64>>,
    pub coefficients: Vec<Vec<f64>>,
    pub lambda_cut: f64,
    pub shift: Vec<f64>,
    pub scale: Vec<f64>,
}

/// Fits on raw inputs with kernel `exp(-|x - y|^2 / (2 sigma^2))`, keeping
/// at most `m_eigs` eigenpairs with `lambda > rel_cut * lambda_0`.
pub fn gh_fit(x: &Matrix, f: &Matrix, m_eigs: usize, sigma: f64, rel_cut: f64) -> Result<GhModel> {
    let n = x.nrows();
    if f.nrows() != n {
        return Err(Error::LengthMismatch { left: n, right: f.nrows() });
    }
    if m_eigs == 0 || m_eigs > n {
        return Err(Error::InvalidArgument(format!("m_eigs must be in 1..={n}, got {m_eigs}")));
    }
    let k = kernels::gaussian_affinity(x, sigma)?;
    let (vals, vecs) = linalg::symmetric_eigen_desc(&k.w, m_eigs)?;
    let lambda_cut = rel_cut * vals[0];
    let m = vals.iter().take_while(|&&l| l > lambda_cut).count();
    if m == 0 {
        return Err(Error::IllConditioned { value: vals[0], cutoff: lambda_cut });
    }
    let eigenvectors = Matrix::from_fn(n, m, |i, j| vecs[(i, j)]);
    let coefficients = eigenvectors.transpose() * f;
    Ok(GhModel {
        train: x.clone(),
        sigma,
        eigenvalues: vals[..m].to_vec(),
        eigenvectors,
        coefficients,
        lambda_cut,
        shift: vec![0.0; x.ncols()],
        scale: vec![1.0; x.ncols()],
    })
}

impl GhModel {
    /// Nystrom extension of the retained eigenvectors at the rows of `q`
    /// (already in the model's input coordinates).
    pub fn harmonics(&self, q: &Matrix) -> Result<Matrix> {
        if let Some(&l) = self.eigenvalues.iter().find(|&&l| !(l > self.lambda_cut)) {
            return Err(Error::IllConditioned { value: l, cutoff: self.lambda_cut });
        }
        let d2 = linalg::cross_sq_distances(q, &self.train)?;
        let c = 1.0 / (2.0 * self.sigma * self.sigma);
        let kq = Matrix::from_fn(d2.nrows(), d2.ncols(), |i, j| (-d2[(i, j)] * c).exp());
        let mut psi = &kq * &self.eigenvectors;
        for (j, l) in self.eigenvalues.iter().enumerate() {
            psi.col_as_slice_mut(j).iter_mut().for_each(|v| *v /= l);
        }
        Ok(psi)
    }

    pub fn predict(&self, q: &Matrix) -> Result<Matrix> {
        let qn = Matrix::from_fn(q.nrows(), q.ncols(), |i, j| (q[(i, j)] - self.shift[j]) / self.scale[j]);
        Ok(self.harmonics(&qn)? * &self.coefficients)
    }

    /// Projection of the training targets onto the retained eigenvectors.
    pub fn training_projection(&self) -> Matrix {
        &self.eigenvectors * &self.coefficients
    }

    pub fn record(&self) -> GhRecord {
        let rows = |m: &Matrix| (0..m.nrows()).map(|i| linalg::row(m, i)).collect();
        GhRecord {
            points: rows(&self.train),
            sigma: self.sigma,
            eigenvalues: self.eigenvalues.clone(),
            eigenvectors: rows(&self.eigenvectors),
            coefficients: rows(&self.coefficients),
            lambda_cut: self.lambda_cut,
            shift: self.shift.clone(),
            scale: self.scale.clone(),
        }
    }

    pub fn from_record(r: GhRecord) -> Result<Self> {
        let mat = |rows: &[Vec<f64>]| -> Result<Matrix> {
            let c = rows.first().map_or(0, Vec::len);
            let flat: Vec<f64> = rows.iter().flatten().copied().collect();
            linalg::from_rows(rows.len(), c, &flat)
        };
        Ok(Self {
            train: mat(&r.points)?,
            sigma: r.sigma,
            eigenvalues: r.eigenvalues,
            eigenvectors: mat(&r.eigenvectors)?,
            coefficients: mat(&r.coefficients)?,
            lambda_cut: r.lambda_cut,
            shift: r.shift,
            scale: r.scale,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GhOptions {
    /// Eigenpairs kept; `None` keeps all above the cut.
    pub n_eigs: Option<usize>,
    /// Bandwidth as a multiple of the median training distance.
    pub bandwidth_scale: f64,
    pub rel_cut: f64,
    /// Standardize inputs per column before building the kernel.
    pub standardize: bool,
}

impl Default for GhOptions {
    fn default() -> Self {
        Self {
            n_eigs: None,
            bandwidth_scale: 0.3,
            rel_cut: 1e-8,
            standardize: true,
        }
    }
}

/// Fits with optional input standardization and a median-heuristic bandwidth.
pub fn gh_fit_auto(x: &Matrix, f: &Matrix, opts: &GhOptions) -> Result<GhModel> {
    let n = x.nrows() as f64;
    let d = x.ncols();
    let (shift, scale) = if opts.standardize {
        let mean: Vec<f64> = (0..d).map(|j| linalg::mean(x.col_as_slice(j))).collect();
        let sd: Vec<f64> = (0..d)
            .map(|j| {
                let v = x.col_as_slice(j).iter().map(|v| (v - mean[j]).powi(2)).sum::<f64>() / n;
                if v > 0.0 {
                    v.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        (mean, sd)
    } else {
        (vec![0.0; d], vec![1.0; d])
    };
    let xn = Matrix::from_fn(x.nrows(), d, |i, j| (x[(i, j)] - shift[j]) / scale[j]);
    let sigma = kernels::median_bandwidth(&xn, opts.bandwidth_scale)?;
    let m = opts.n_eigs.unwrap_or(x.nrows()).min(x.nrows());
    let mut model = gh_fit(&xn, f, m, sigma, opts.rel_cut)?;
    model.shift = shift;
    model.scale = scale;
    Ok(model)
}
