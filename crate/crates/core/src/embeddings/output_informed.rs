use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{self, KernelMatrix};
use crate::linalg::{self, Matrix};

use super::{diffusion_maps, Embedding};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputInformedOptions {
    pub eps: f64,
    pub n_eigenvectors: usize,
    /// Standardize the outputs and scale inputs and outputs to unit median
    /// pairwise distance before building the kernel.
    pub normalize: bool,
}

impl Default for OutputInformedOptions {
    fn default() -> Self {
        Self {
            eps: 0.6,
            n_eigenvectors: 20,
            normalize: true,
        }
    }
}

/// `w_ij = exp(-|f_i - f_j|^2 / eps^2 - |y_i - y_j|^2 / eps)`.
///
/// The output term has the smaller length scale when `eps < 1`, so input
/// directions that move the output are resolved first.
pub fn output_informed_kernel(y: &Matrix, f: &Matrix, eps: f64) -> Result<KernelMatrix> {
    if y.nrows() != f.nrows() {
        return Err(Error::LengthMismatch {
            left: y.nrows(),
            right: f.nrows(),
        });
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    let dy = linalg::pairwise_sq_distances(y);
    let df = linalg::pairwise_sq_distances(f);
    let n = y.nrows();
    let w = Matrix::from_fn(n, n, |i, j| (-df[(i, j)] / (eps * eps) - dy[(i, j)] / eps).exp());
    Ok(KernelMatrix { w, bandwidth: eps })
}

fn unit_median(x: &Matrix) -> Result<Matrix> {
    let med = kernels::median_bandwidth(x, 1.0)?;
    Ok(Matrix::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)] / med))
}

fn standardized(x: &Matrix) -> Result<Matrix> {
    let n = x.nrows() as f64;
    let mut out = x.clone();
    for j in 0..x.ncols() {
        let col = out.col_as_slice_mut(j);
        let m = linalg::mean(col);
        let sd = (col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n).sqrt();
        if !(sd > 0.0) {
            return Err(Error::DegenerateChannel { channel: j });
        }
        col.iter_mut().for_each(|v| *v = (*v - m) / sd);
    }
    Ok(out)
}

/// Diffusion maps of one sensor under the output-informed kernel, with the
/// output given by coordinates of a common embedding.
pub fn output_informed_embed(
    inputs: &Matrix,
    outputs: &Matrix,
    opts: &OutputInformedOptions,
) -> Result<Embedding> {
    let (y, f) = if opts.normalize {
        (unit_median(inputs)?, unit_median(&standardized(outputs)?)?)
    } else {
        (inputs.clone(), outputs.clone())
    };
    let k = output_informed_kernel(&y, &f, opts.eps)?;
    let op = kernels::column_normalize(&k)?;
    let mut e = diffusion_maps(&op, opts.n_eigenvectors)?;
    e.source = "output_informed".into();
    Ok(e)
}
