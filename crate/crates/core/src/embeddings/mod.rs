//! Spectral embeddings over aligned samples.
//!
//! Every embedding stores its vectors as the columns of an `N x n` matrix,
//! ordered by decreasing eigenvalue (or singular value), with column 0
//! reserved for the trivial near-constant direction.

mod alternating;
mod diffusion;
mod jsf;
mod output_informed;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};

pub use alternating::{alternating_diffusion, alternating_operator, AlternatingOptions};
pub use diffusion::{diffusion_maps, dirichlet_energy};
pub use jsf::{jsf, smooth_count, JsfOptions, JsfSet};
pub use output_informed::{output_informed_embed, output_informed_kernel, OutputInformedOptions};

#[derive(Debug, Clone)]
pub struct Embedding {
    pub eigenvalues: Vec<f64>,
    pub vectors: Matrix,
    pub source: String,
    pub bandwidths: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingMetadata {
    pub source: String,
    pub eigenvalues: Vec<f64>,
    pub bandwidths: Vec<f64>,
    pub samples: usize,
}

impl Embedding {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn samples(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn vector(&self, k: usize) -> &[f64] {
        self.vectors.col_as_slice(k)
    }

    /// The chosen columns as an `N x k` matrix.
    pub fn coords(&self, indices: &[usize]) -> Matrix {
        linalg::select_columns(&self.vectors, indices)
    }

    pub fn metadata(&self) -> EmbeddingMetadata {
        EmbeddingMetadata {
            source: self.source.clone(),
            eigenvalues: self.eigenvalues.clone(),
            bandwidths: self.bandwidths.clone(),
            samples: self.samples(),
        }
    }

    /// CSV with header `sample,phi1..phiN` (column `phi{k+1}` holds vector `k`).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("sample");
        for k in 0..self.len() {
            let _ = write!(out, ",phi{}", k + 1);
        }
        out.push('\n');
        for i in 0..self.samples() {
            let _ = write!(out, "{i}");
            for k in 0..self.len() {
                let _ = write!(out, ",{:.16e}", self.vectors[(i, k)]);
            }
            out.push('\n');
        }
        out
    }

    pub fn write(&self, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
        let csv = dir.join(format!("{stem}.csv"));
        let json = dir.join(format!("{stem}.json"));
        std::fs::write(&csv, self.to_csv()).map_err(|e| Error::io(&csv, e))?;
        std::fs::write(&json, serde_json::to_string_pretty(&self.metadata())?)
            .map_err(|e| Error::io(&json, e))?;
        Ok(vec![csv, json])
    }
}

/// Parameters shared by the common-embedding strategies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommonParams {
    pub bandwidth_scales: Vec<f64>,
    pub n_eigenvectors: usize,
    pub alternating: AlternatingOptions,
    pub jsf: JsfOptions,
}

impl Default for CommonParams {
    fn default() -> Self {
        Self {
            bandwidth_scales: vec![0.5, 0.5],
            n_eigenvectors: 10,
            alternating: AlternatingOptions::default(),
            jsf: JsfOptions::default(),
        }
    }
}

/// A method that extracts the directions shared by several sensors.
pub trait CommonEmbedder: Send + Sync {
    fn name(&self) -> &'static str;
    fn embed(&self, sensors: &[&Matrix], params: &CommonParams) -> Result<Embedding>;
}

pub struct AlternatingDiffusion;

pub struct JointlySmooth;

impl CommonEmbedder for AlternatingDiffusion {
    fn name(&self) -> &'static str {
        "alternating"
    }

    fn embed(&self, sensors: &[&Matrix], params: &CommonParams) -> Result<Embedding> {
        let [s1, s2] = sensors else {
            return Err(Error::InvalidArgument(format!(
                "alternating diffusion takes two sensors, got {}",
                sensors.len()
            )));
        };
        let scale = |k: usize| params.bandwidth_scales.get(k).copied().unwrap_or(1.0);
        let (k1, _) = crate::kernels::median_affinity(s1, scale(0))?;
        let (k2, _) = crate::kernels::median_affinity(s2, scale(1))?;
        let p1 = crate::kernels::column_normalize(&k1)?;
        let p2 = crate::kernels::column_normalize(&k2)?;
        alternating_diffusion(&p1, &p2, params.n_eigenvectors, &params.alternating)
    }
}

impl CommonEmbedder for JointlySmooth {
    fn name(&self) -> &'static str {
        "jsf"
    }

    /// The smooth jointly smooth functions, ordered by singular value, with
    /// singular values in place of eigenvalues.
    fn embed(&self, sensors: &[&Matrix], params: &CommonParams) -> Result<Embedding> {
        let set = jsf(sensors, &params.jsf)?;
        let keep = set.smooth_indices();
        Ok(Embedding {
            eigenvalues: keep.iter().map(|&m| set.singular_values[m]).collect(),
            vectors: linalg::select_columns(&set.functions, &keep),
            source: "jsf".into(),
            bandwidths: set.bandwidths.clone(),
        })
    }
}

pub fn embedder_names() -> &'static [&'static str] {
    &["alternating", "jsf"]
}

pub fn embedder_by_name(name: &str) -> Result<Box<dyn CommonEmbedder>> {
    match name {
        "alternating" => Ok(Box::new(AlternatingDiffusion)),
        "jsf" => Ok(Box::new(JointlySmooth)),
        other => Err(Error::UnknownName {
            kind: "embedder",
            name: other.to_string(),
        }),
    }
}
