//! Cross-sensor function learning and error metrics.

mod gh;
pub mod kdtree;
mod knn;
mod mlp;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub use gh::{gh_fit, gh_fit_auto, GhModel, GhOptions, GhRecord};
pub use knn::{knn_fit, KnnModel, KnnRecord, EXACT_HIT};
pub use mlp::{mlp_train, MlpModel, MlpOptions};

/// Largest absolute error divided by the number of samples.
pub fn linf_error(truth: &[f64], pred: &[f64]) -> Result<f64> {
    if truth.len() != pred.len() {
        return Err(Error::LengthMismatch {
            left: truth.len(),
            right: pred.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::InsufficientData { needed: 1, available: 0 });
    }
    let worst = truth
        .iter()
        .zip(pred)
        .map(|(t, p)| (t - p).abs())
        .fold(0.0, f64::max);
    Ok(worst / truth.len() as f64)
}

/// Largest absolute error relative to the peak-to-peak range of the truth,
/// maximized over output columns.
pub fn relative_linf(truth: &Matrix, pred: &Matrix) -> Result<f64> {
    if truth.nrows() != pred.nrows() || truth.ncols() != pred.ncols() {
        return Err(Error::DimensionMismatch {
            expected: truth.nrows() * truth.ncols(),
            actual: pred.nrows() * pred.ncols(),
        });
    }
    let mut worst: f64 = 0.0;
    for j in 0..truth.ncols() {
        let t = truth.col_as_slice(j);
        let p = pred.col_as_slice(j);
        let (lo, hi) = t
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
        let err = t.iter().zip(p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let range = hi - lo;
        worst = worst.max(if range > 0.0 { err / range } else { err });
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelRecord {
    Knn(KnnRecord),
    Gh(GhRecord),
    Mlp(MlpModel),
}

impl ModelRecord {
    pub fn into_model(self) -> Result<Box<dyn FittedModel>> {
        Ok(match self {
            ModelRecord::Knn(r) => Box::new(KnnModel::from_record(r)?),
            ModelRecord::Gh(r) => Box::new(GhModel::from_record(r)?),
            ModelRecord::Mlp(m) => Box::new(m),
        })
    }
}

pub trait FittedModel: Send + Sync {
    fn predict(&self, q: &Matrix) -> Result<Matrix>;
    fn record(&self) -> ModelRecord;
}

impl FittedModel for KnnModel {
    fn predict(&self, q: &Matrix) -> Result<Matrix> {
        KnnModel::predict(self, q)
    }
    fn record(&self) -> ModelRecord {
        ModelRecord::Knn(KnnModel::record(self))
    }
}

impl FittedModel for GhModel {
    fn predict(&self, q: &Matrix) -> Result<Matrix> {
        GhModel::predict(self, q)
    }
    fn record(&self) -> ModelRecord {
        ModelRecord::Gh(GhModel::record(self))
    }
}

impl FittedModel for MlpModel {
    fn predict(&self, q: &Matrix) -> Result<Matrix> {
        MlpModel::predict(self, q)
    }
    fn record(&self) -> ModelRecord {
        ModelRecord::Mlp(self.clone())
    }
}

/// A regression method that can be fitted to `(x, y)` pairs.
pub trait Regressor: Send + Sync {
    fn name(&self) -> &'static str;
    fn fit(&self, x: &Matrix, y: &Matrix) -> Result<Box<dyn FittedModel>>;
}

pub struct Knn {
    pub k: usize,
}

pub struct GeometricHarmonics(pub GhOptions);

pub struct Mlp(pub MlpOptions);

impl Regressor for Knn {
    fn name(&self) -> &'static str {
        "knn"
    }
    fn fit(&self, x: &Matrix, y: &Matrix) -> Result<Box<dyn FittedModel>> {
        Ok(Box::new(knn_fit(x, y, self.k)?))
    }
}

impl Regressor for GeometricHarmonics {
    fn name(&self) -> &'static str {
        "gh"
    }
    fn fit(&self, x: &Matrix, y: &Matrix) -> Result<Box<dyn FittedModel>> {
        Ok(Box::new(gh_fit_auto(x, y, &self.0)?))
    }
}

impl Regressor for Mlp {
    fn name(&self) -> &'static str {
        "mlp"
    }
    fn fit(&self, x: &Matrix, y: &Matrix) -> Result<Box<dyn FittedModel>> {
        Ok(Box::new(mlp_train(x, y, &self.0)?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RegressionParams {
    pub knn_k: usize,
    pub gh: GhOptions,
    pub mlp: MlpOptions,
}

impl Default for RegressionParams {
    fn default() -> Self {
        Self {
            knn_k: 5,
            gh: GhOptions {
                n_eigs: Some(5),
                ..GhOptions::default()
            },
            mlp: MlpOptions::default(),
        }
    }
}

pub fn regressor_names() -> &'static [&'static str] {
    &["knn", "gh", "mlp"]
}

pub fn regressor_by_name(name: &str, params: &RegressionParams) -> Result<Box<dyn Regressor>> {
    match name {
        "knn" => Ok(Box::new(Knn { k: params.knn_k })),
        "gh" => Ok(Box::new(GeometricHarmonics(params.gh))),
        "mlp" => Ok(Box::new(Mlp(params.mlp))),
        other => Err(Error::UnknownName {
            kind: "regressor",
            name: other.to_string(),
        }),
    }
}
