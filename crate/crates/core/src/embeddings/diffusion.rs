use crate::error::{Error, Result};
use crate::kernels::DiffusionOperator;
use crate::linalg::{self, Matrix};

use super::Embedding;

/// Leading `n` eigenpairs of a column-stochastic operator.
///
/// Solved on the symmetric conjugate `D^-1/2 W D^-1/2`; each eigenvector
/// `psi` is mapped to `D^-1/2 psi`, the left eigenvector of `P`, so the
/// trivial direction is exactly constant.
pub fn diffusion_maps(op: &DiffusionOperator, n: usize) -> Result<Embedding> {
    let size = op.len();
    if n == 0 || n > size {
        return Err(Error::InvalidArgument(format!(
            "requested {n} eigenvectors from an operator of size {size}"
        )));
    }
    let m = op.symmetric_conjugate();
    let (values, psi) = linalg::symmetric_eigen_desc(&m, n)?;
    let mut vectors = Matrix::from_fn(size, n, |i, k| psi[(i, k)] / op.degrees[i].sqrt());
    linalg::normalize_columns(&mut vectors);
    Ok(Embedding {
        eigenvalues: values,
        vectors,
        source: "diffusion_maps".into(),
        bandwidths: vec![op.bandwidth],
    })
}

/// Roughness of `f` on the graph of `op`:
/// `sum_ij W_ij (f_i - f_j)^2 / 2` divided by `sum_i D_i f_i^2`.
///
/// Zero for constants; equals `1 - lambda` for a diffusion-map eigenvector
/// with eigenvalue `lambda`.
pub fn dirichlet_energy(f: &[f64], op: &DiffusionOperator) -> Result<f64> {
    let n = op.len();
    if f.len() != n {
        return Err(Error::LengthMismatch {
            left: f.len(),
            right: n,
        });
    }
    let mut num = 0.0;
    for j in 0..n {
        let col = op.w.col_as_slice(j);
        let fj = f[j];
        let mut s = 0.0;
        for i in (j + 1)..n {
            let d = f[i] - fj;
            s += col[i] * d * d;
        }
        num += s;
    }
    let den: f64 = f.iter().zip(&op.degrees).map(|(x, d)| d * x * x).sum();
    if den == 0.0 {
        return Ok(0.0);
    }
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{column_normalize, gaussian_affinity, KernelMatrix};

    fn arc(n: usize) -> Matrix {
        Matrix::from_fn(n, 2, |i, j| {
            let t = 2.0 * i as f64 / (n - 1) as f64;
            if j == 0 {
                t.cos()
            } else {
                t.sin()
            }
        })
    }

    #[test]
    fn identity_operator_spectrum() {
        let k = KernelMatrix {
            w: Matrix::identity(5, 5),
            bandwidth: 1.0,
        };
        let e = diffusion_maps(&column_normalize(&k).unwrap(), 5).unwrap();
        assert!(e.eigenvalues.iter().all(|l| (l - 1.0).abs() < 1e-14));
    }

    #[test]
    fn energy_identities() {
        let x = arc(60);
        let op = column_normalize(&gaussian_affinity(&x, 0.2).unwrap()).unwrap();
        let e = diffusion_maps(&op, 6).unwrap();
        assert!(dirichlet_energy(&vec![3.0; 60], &op).unwrap().abs() < 1e-12);
        for k in 0..6 {
            let en = dirichlet_energy(e.vector(k), &op).unwrap();
            assert!((en - (1.0 - e.eigenvalues[k])).abs() < 1e-10, "k={k}");
        }
        assert!((e.eigenvalues[0] - 1.0).abs() < 1e-12);
    }
}
