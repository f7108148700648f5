use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::DiffusionOperator;
use crate::linalg::{self, Matrix};

use super::Embedding;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlternatingOptions {
    /// Eigenvalues with a larger imaginary part are treated as complex.
    pub imag_tol: f64,
    /// Complex eigenvalues are tolerated (and dropped) only below this
    /// fraction of the leading magnitude; above it they are an error.
    pub complex_floor: f64,
}

impl Default for AlternatingOptions {
    fn default() -> Self {
        Self {
            imag_tol: 1e-8,
            complex_floor: 0.05,
        }
    }
}

/// `P = P2 * P1`.
pub fn alternating_operator(op1: &DiffusionOperator, op2: &DiffusionOperator) -> Result<Matrix> {
    if op1.len() != op2.len() {
        return Err(Error::LengthMismatch {
            left: op1.len(),
            right: op2.len(),
        });
    }
    Ok(&op2.p * &op1.p)
}

/// Leading `n` real eigenpairs of the alternating operator `P2 P1`, ordered
/// by magnitude.
///
/// The vectors are left eigenvectors (eigenvectors of the transpose), which
/// makes the trivial one constant.
pub fn alternating_diffusion(
    op1: &DiffusionOperator,
    op2: &DiffusionOperator,
    n: usize,
    opts: &AlternatingOptions,
) -> Result<Embedding> {
    let p = alternating_operator(op1, op2)?;
    let size = p.nrows();
    if n == 0 || n > size {
        return Err(Error::InvalidArgument(format!(
            "requested {n} eigenvectors from an operator of size {size}"
        )));
    }
    let pt = p.transpose().to_owned();
    let evd = pt
        .eigen()
        .map_err(|e| Error::ConvergenceFailure(format!("{e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let mut order: Vec<usize> = (0..size).collect();
    order.sort_by(|&a, &b| s[b].norm().total_cmp(&s[a].norm()).then(a.cmp(&b)));
    let lead = s[order[0]].norm();

    let mut values = Vec::with_capacity(n);
    let mut vectors = Matrix::zeros(size, n);
    for &k in &order {
        if values.len() == n {
            break;
        }
        let lam = s[k];
        if lam.im.abs() > opts.imag_tol {
            if lam.norm() >= opts.complex_floor * lead {
                return Err(Error::ComplexSpectrum {
                    value_re: lam.re,
                    value_im: lam.im,
                    bound: opts.imag_tol,
                });
            }
            continue;
        }
        // rotate so the largest component is real, then keep the real part
        let col = u.col(k);
        let big = (0..size)
            .max_by(|&a, &b| col[a].norm().total_cmp(&col[b].norm()))
            .unwrap_or(0);
        let phase = col[big].conj() / col[big].norm();
        let dst = vectors.col_as_slice_mut(values.len());
        for i in 0..size {
            dst[i] = (col[i] * phase).re;
        }
        values.push(lam.re);
    }
    if values.len() < n {
        return Err(Error::InsufficientData {
            needed: n,
            available: values.len(),
        });
    }
    linalg::normalize_columns(&mut vectors);
    Ok(Embedding {
        eigenvalues: values,
        vectors,
        source: "alternating_diffusion".into(),
        bandwidths: vec![op1.bandwidth, op2.bandwidth],
    })
}
