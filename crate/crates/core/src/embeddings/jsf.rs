use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{self, DiffusionOperator};
use crate::linalg::{self, Matrix};

use super::dirichlet_energy;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct JsfOptions {
    /// Eigenvectors kept per sensor kernel.
    pub per_sensor: usize,
    /// Number of functions returned.
    pub count: usize,
    /// Median-heuristic scale of the per-sensor kernels.
    pub kernel_scale: f64,
    /// Median-heuristic scale of the operators used to score smoothness.
    pub energy_scale: f64,
}

impl Default for JsfOptions {
    fn default() -> Self {
        Self {
            per_sensor: 32,
            count: 10,
            kernel_scale: 1.0,
            energy_scale: 0.03,
        }
    }
}

#[derive(Debug, Clone)]
pub struct JsfSet {
    /// `N x count`, orthonormal columns.
    pub functions: Matrix,
    /// All singular values of the concatenated eigenbases, descending.
    pub singular_values: Vec<f64>,
    /// `energies[m][k]`: Dirichlet energy of function `m` on sensor `k`.
    pub energies: Vec<Vec<f64>>,
    pub bandwidths: Vec<f64>,
}

impl JsfSet {
    pub fn max_energies(&self) -> Vec<f64> {
        self.energies
            .iter()
            .map(|e| e.iter().copied().fold(0.0, f64::max))
            .collect()
    }

    /// Number of smooth functions and the energy ratio across the gap.
    pub fn smooth_split(&self) -> (usize, f64) {
        smooth_count(&self.max_energies())
    }

    /// Indices of the smooth functions, in singular-value order.
    pub fn smooth_indices(&self) -> Vec<usize> {
        let e = self.max_energies();
        let (count, _) = smooth_count(&e);
        let mut order: Vec<usize> = (0..e.len()).collect();
        order.sort_by(|&a, &b| e[a].total_cmp(&e[b]).then(a.cmp(&b)));
        let mut keep = order[..count].to_vec();
        keep.sort_unstable();
        keep
    }
}

/// Splits sorted energies at their largest consecutive ratio. Returns the
/// number of functions below the split and the ratio.
///
/// The lowest-energy function is the near-constant one, whose energy is
/// close to zero; a split right after it is not considered.
pub fn smooth_count(energies: &[f64]) -> (usize, f64) {
    let mut e = energies.to_vec();
    e.sort_by(f64::total_cmp);
    let mut best = (e.len(), 1.0);
    for i in 2..e.len() {
        let lo = e[i - 1].max(f64::MIN_POSITIVE);
        let r = e[i] / lo;
        if r > best.1 {
            best = (i, r);
        }
    }
    best
}

/// Functions smooth on every sensor at once.
///
/// Each sensor contributes the top `per_sensor` eigenvectors of its
/// Gaussian kernel; the left singular vectors of their concatenation are
/// the candidate functions, ordered by singular value.
pub fn jsf(sensors: &[&Matrix], opts: &JsfOptions) -> Result<JsfSet> {
    let n = sensors.first().map_or(0, |s| s.nrows());
    if sensors.is_empty() {
        return Err(Error::InvalidArgument("no sensors given".into()));
    }
    if let Some(s) = sensors.iter().find(|s| s.nrows() != n) {
        return Err(Error::LengthMismatch {
            left: n,
            right: s.nrows(),
        });
    }
    if opts.per_sensor == 0 || opts.per_sensor > n || opts.count > sensors.len() * opts.per_sensor {
        return Err(Error::InvalidArgument(format!(
            "need 0 < per_sensor <= {n} and count <= sensors * per_sensor, got {opts:?}"
        )));
    }
    let mut bases = Vec::with_capacity(sensors.len());
    let mut energy_ops: Vec<DiffusionOperator> = Vec::with_capacity(sensors.len());
    let mut bandwidths = Vec::new();
    for x in sensors {
        let d2 = linalg::pairwise_sq_distances(x);
        let rec = kernels::bandwidth_record(&d2, opts.kernel_scale)?;
        let k = kernels::affinity_from_sq_distances(&d2, rec.sigma);
        let (_, vecs) = linalg::symmetric_eigen_desc(&k.w, opts.per_sensor)?;
        bases.push(vecs);
        bandwidths.push(rec.sigma);

        let er = kernels::bandwidth_record(&d2, opts.energy_scale)?;
        let ek = kernels::affinity_from_sq_distances(&d2, er.sigma);
        energy_ops.push(kernels::column_normalize(&ek)?);
    }
    let refs: Vec<&Matrix> = bases.iter().collect();
    let stacked = linalg::hstack(&refs)?;
    let svd = stacked
        .thin_svd()
        .map_err(|e| Error::ConvergenceFailure(format!("{e:?}")))?;
    let sv = svd.S().column_vector();
    let singular_values: Vec<f64> = (0..sv.nrows()).map(|i| sv[i]).collect();
    let u = svd.U();
    let mut functions = Matrix::from_fn(n, opts.count, |i, m| u[(i, m)]);
    linalg::normalize_columns(&mut functions);
    let energies = (0..opts.count)
        .map(|m| {
            energy_ops
                .iter()
                .map(|op| dirichlet_energy(functions.col_as_slice(m), op))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(JsfSet {
        functions,
        singular_values,
        energies,
        bandwidths,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_at_largest_ratio() {
        let (c, r) = smooth_count(&[0.01, 0.5, 0.02, 0.6, 0.015]);
        assert_eq!(c, 3);
        assert!((r - 25.0).abs() < 1e-12);
    }
}
