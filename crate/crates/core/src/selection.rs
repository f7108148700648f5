//! Leave-one-out local linear regression and the decisions built on it:
//! which eigenvectors are new directions rather than harmonics of earlier
//! ones, and which channels are functions of a common embedding.

use serde::{Deserialize, Serialize};

use crate::embeddings::Embedding;
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LlrOptions {
    /// Locality bandwidth is the median predictor distance divided by this.
    pub bandwidth_divisor: f64,
    /// Ridge added to each local normal matrix, relative to its trace.
    pub ridge: f64,
}

impl Default for LlrOptions {
    fn default() -> Self {
        Self {
            bandwidth_divisor: 3.0,
            ridge: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectionOptions {
    pub threshold: f64,
    /// Eigenvectors examined, including the trivial one.
    pub n_examined: usize,
    /// Eigenvectors whose eigenvalue magnitude falls below this fraction of
    /// the first nontrivial one are not examined.
    pub eigenvalue_floor: f64,
    pub llr: LlrOptions,
}

impl Default for SelectionOptions {
    fn default() -> Self {
        Self {
            threshold: 0.5,
            n_examined: 10,
            eigenvalue_floor: 0.05,
            llr: LlrOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlrEntry {
    pub target: String,
    pub residual: f64,
    pub bandwidth: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlrReport {
    pub entries: Vec<LlrEntry>,
    pub threshold: f64,
    pub options: LlrOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    /// Indices into the embedding's vectors.
    pub selected: Vec<usize>,
    pub report: LlrReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelClass {
    Common,
    SensorSpecific,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelVerdict {
    pub channel: String,
    pub residual: f64,
    pub class: ChannelClass,
}

/// Refinement steps applied after the ridge solve.
const REFINE_STEPS: usize = 4;

/// Solves `a x = b` through the ridge system `(a + lambda I)`, then refines
/// against `a` itself (iterated Tikhonov). Directions that `a` leaves
/// undetermined stay bounded; well-determined ones lose the ridge bias.
fn ridge_solve(a: &[f64], lambda: f64, b: &[f64], q: usize) -> Option<Vec<f64>> {
    let mut reg = a.to_vec();
    for r in 0..q {
        reg[r * q + r] += lambda;
    }
    let solve = |rhs: &[f64]| -> Option<Vec<f64>> {
        let mut x = rhs.to_vec();
        if linalg::cholesky_solve(&mut reg.clone(), &mut x, q).is_some() {
            return Some(x);
        }
        let mut x = rhs.to_vec();
        linalg::lu_solve(&mut reg.clone(), &mut x, q)?;
        Some(x)
    };
    let mut x = solve(b)?;
    for _ in 0..REFINE_STEPS {
        let r: Vec<f64> = (0..q).map(|i| b[i] - linalg::dot(&a[i * q..(i + 1) * q], &x)).collect();
        let dx = solve(&r)?;
        x.iter_mut().zip(&dx).for_each(|(v, d)| *v += d);
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Normalized leave-one-out LLR residual of one target.
pub fn llr_residual(target: &[f64], predictors: &Matrix, opts: &LlrOptions) -> Result<f64> {
    Ok(llr_residuals(&[target], predictors, opts)?.0[0])
}

/// Normalized leave-one-out LLR residuals of several targets against the
/// same predictors. Returns the residuals and the locality bandwidth.
///
/// For each sample `i` an affine model in the predictors is fitted to all
/// other samples, weighted by `exp(-|p_i - p_j|^2 / bw^2)`, and evaluated at
/// `p_i`. The residual is `|t - t_hat| / |t - mean(t)|`.
pub fn llr_residuals(targets: &[&[f64]], predictors: &Matrix, opts: &LlrOptions) -> Result<(Vec<f64>, f64)> {
    let n = predictors.nrows();
    let p = predictors.ncols();
    if p == 0 {
        return Err(Error::InvalidArgument("LLR needs at least one predictor".into()));
    }
    if n < p + 2 {
        return Err(Error::InsufficientData {
            needed: p + 2,
            available: n,
        });
    }
    if let Some(t) = targets.iter().find(|t| t.len() != n) {
        return Err(Error::LengthMismatch {
            left: t.len(),
            right: n,
        });
    }
    let d2 = linalg::pairwise_sq_distances(predictors);
    let med = linalg::median_nonzero_distance(&d2).ok_or(Error::AllPointsIdentical)?;
    let bw = med / opts.bandwidth_divisor;
    let mut k = Matrix::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            if i != j {
                k[(i, j)] = (-d2[(i, j)] / (bw * bw)).exp();
            }
        }
    }

    // Design rows x_j = [1, p_j]. Every local normal matrix and right-hand
    // side is a K-weighted sum of products of design entries, so all of them
    // come out of one matrix product.
    let q = p + 1;
    let design = |j: usize, a: usize| if a == 0 { 1.0 } else { predictors[(j, a - 1)] };
    let pairs: Vec<(usize, usize)> = (0..q).flat_map(|a| (a..q).map(move |b| (a, b))).collect();
    let ncols = pairs.len() + q * targets.len();
    let z = Matrix::from_fn(n, ncols, |j, c| {
        if c < pairs.len() {
            let (a, b) = pairs[c];
            design(j, a) * design(j, b)
        } else {
            let c = c - pairs.len();
            design(j, c % q) * targets[c / q][j]
        }
    });
    let g = &k * &z;

    // Re-centering the design at p_i, [1, p_j] -> [1, p_j - p_i], is the
    // linear map `shift` below; the prediction is then the intercept.
    let mut preds = vec![vec![0.0; n]; targets.len()];
    let mut raw = vec![0.0; q * q];
    let mut a = vec![0.0; q * q];
    for i in 0..n {
        for (c, &(r, s)) in pairs.iter().enumerate() {
            raw[r * q + s] = g[(i, c)];
            raw[s * q + r] = g[(i, c)];
        }
        let shift = |v: &[f64], r: usize| if r == 0 { v[0] } else { v[r] - design(i, r) * v[0] };
        let mut tmp = vec![0.0; q * q];
        for s in 0..q {
            let col: Vec<f64> = (0..q).map(|r| raw[r * q + s]).collect();
            for r in 0..q {
                tmp[r * q + s] = shift(&col, r);
            }
        }
        for r in 0..q {
            let row = &tmp[r * q..(r + 1) * q];
            for s in 0..q {
                a[r * q + s] = shift(row, s);
            }
        }
        let lambda = opts.ridge * (0..q).map(|r| a[r * q + r]).sum::<f64>();
        for (t, pred) in preds.iter_mut().enumerate() {
            let b: Vec<f64> = (0..q).map(|c| g[(i, pairs.len() + t * q + c)]).collect();
            let rhs: Vec<f64> = (0..q).map(|r| shift(&b, r)).collect();
            let x = ridge_solve(&a, lambda, &rhs, q).ok_or(Error::SingularLocalSystem { sample: i })?;
            pred[i] = x[0];
            if !pred[i].is_finite() {
                return Err(Error::SingularLocalSystem { sample: i });
            }
        }
    }

    let residuals = targets
        .iter()
        .zip(&preds)
        .map(|(t, pred)| {
            let m = linalg::mean(t);
            let spread: f64 = t.iter().map(|v| (v - m).powi(2)).sum::<f64>().sqrt();
            let err: f64 = t.iter().zip(pred).map(|(v, h)| (v - h).powi(2)).sum::<f64>().sqrt();
            if spread > 0.0 {
                err / spread
            } else {
                0.0
            }
        })
        .collect();
    Ok((residuals, bw))
}

/// Picks the eigenvectors that are not functions of the ones before them.
///
/// Vector 0 is the trivial direction and is skipped; vector 1 is always
/// selected with residual 1. Vector `k` is selected when its LLR residual
/// against vectors `1..k` exceeds the threshold.
pub fn select_parsimonious(e: &Embedding, opts: &SelectionOptions) -> Result<Selection> {
    if e.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            available: e.len(),
        });
    }
    let upto = opts.n_examined.min(e.len());
    let lead = e.eigenvalues[1].abs();
    let mut selected = vec![1];
    let mut entries = vec![LlrEntry {
        target: "phi1".into(),
        residual: 1.0,
        bandwidth: None,
    }];
    for k in 2..upto {
        if e.eigenvalues[k].abs() < opts.eigenvalue_floor * lead {
            break;
        }
        let prev: Vec<usize> = (1..k).collect();
        let (r, bw) = llr_residuals(&[e.vector(k)], &e.coords(&prev), &opts.llr)?;
        if r[0] > opts.threshold {
            selected.push(k);
        }
        entries.push(LlrEntry {
            target: format!("phi{k}"),
            residual: r[0],
            bandwidth: Some(bw),
        });
    }
    Ok(Selection {
        selected,
        report: LlrReport {
            entries,
            threshold: opts.threshold,
            options: opts.llr,
        },
    })
}

/// Classifies each channel as common (a function of the given coordinates)
/// or sensor-specific.
pub fn channel_identifiability(
    channels: &Matrix,
    labels: &[String],
    coords: &Matrix,
    threshold: f64,
    opts: &LlrOptions,
) -> Result<Vec<ChannelVerdict>> {
    if channels.nrows() != coords.nrows() {
        return Err(Error::LengthMismatch {
            left: channels.nrows(),
            right: coords.nrows(),
        });
    }
    let targets: Vec<&[f64]> = (0..channels.ncols()).map(|j| channels.col_as_slice(j)).collect();
    let (res, _) = llr_residuals(&targets, coords, opts)?;
    Ok(res
        .into_iter()
        .enumerate()
        .map(|(j, r)| ChannelVerdict {
            channel: labels.get(j).cloned().unwrap_or_else(|| format!("channel{}", j + 1)),
            residual: r,
            class: if r < threshold {
                ChannelClass::Common
            } else {
                ChannelClass::SensorSpecific
            },
        })
        .collect())
}
