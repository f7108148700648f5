//! Sensor streams assembled from sampled trajectories.
//!
//! A stream is an `N x d` matrix whose columns are state variables of one
//! of the systems, possibly delayed (negative offset) or shifted into the
//! future (positive offset). Offsets are in samples. Rows that would need
//! data outside the trajectories are trimmed from every channel.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::{SystemId, Trajectory};
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub source: SystemId,
    pub variable: usize,
    pub offset: i64,
}

impl ChannelSpec {
    pub fn new(source: SystemId, variable: usize, offset: i64) -> Self {
        Self {
            source,
            variable,
            offset,
        }
    }

    pub fn label(&self) -> String {
        let names = self.source.system().variable_names();
        let var = names
            .get(self.variable)
            .map_or_else(|| format!("s{}", self.variable), |s| s.to_string());
        match self.offset {
            0 => format!("{}.{}(t)", self.source, var),
            o if o > 0 => format!("{}.{}(t+{})", self.source, var, o),
            o => format!("{}.{}(t{})", self.source, var, o),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Clean(ChannelSpec),
    Mixed,
}

impl Channel {
    pub fn label(&self, index: usize) -> String {
        match self {
            Channel::Clean(spec) => spec.label(),
            Channel::Mixed => format!("mixed{}", index + 1),
        }
    }
}

/// A square matrix applied on the right of the data (`data * m`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingMatrix {
    pub dim: usize,
    /// Row-major entries.
    pub entries: Vec<f64>,
}

impl MixingMatrix {
    pub fn new(dim: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                actual: entries.len(),
            });
        }
        let m = Self { dim, entries };
        m.condition_number()?;
        Ok(m)
    }

    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![0.0; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = 1.0;
        }
        Self { dim, entries }
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix::from_fn(self.dim, self.dim, |i, j| self.entries[i * self.dim + j])
    }

    pub fn inverse(&self) -> Result<Self> {
        let inv = linalg::invert(&self.to_matrix())
            .ok_or_else(|| Error::InvalidArgument("mixing matrix is singular".into()))?;
        Ok(Self {
            dim: self.dim,
            entries: linalg::to_row_major(&inv),
        })
    }

    /// 1-norm condition number; errors if the matrix is singular.
    pub fn condition_number(&self) -> Result<f64> {
        let inv = self.inverse()?;
        let norm1 = |e: &[f64]| {
            (0..self.dim)
                .map(|j| (0..self.dim).map(|i| e[i * self.dim + j].abs()).sum::<f64>())
                .fold(0.0, f64::max)
        };
        let c = norm1(&self.entries) * norm1(&inv.entries);
        if c.is_finite() {
            Ok(c)
        } else {
            Err(Error::InvalidArgument("mixing matrix is singular".into()))
        }
    }
}

/// Affine per-stream transform `z = (x - mean) * matrix`, recorded so the
/// original data can be recovered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rescaling {
    pub kind: Preprocess,
    pub mean: Vec<f64>,
    /// Row-major `d x d` transform.
    pub matrix: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preprocess {
    None,
    #[default]
    Standardize,
    Whiten,
}

#[derive(Debug, Clone)]
pub struct SensorStream {
    pub data: Matrix,
    pub channels: Vec<Channel>,
    /// Shared sample clock: the trajectory sample index of each row.
    pub sample_index: Vec<i64>,
    pub mixing: Option<MixingMatrix>,
    pub rescaling: Option<Rescaling>,
}

/// Metadata written next to a stream's CSV file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamSidecar {
    pub channels: Vec<Channel>,
    pub labels: Vec<String>,
    pub sample_index: Vec<i64>,
    pub mixing: Option<MixingMatrix>,
    pub rescaling: Option<Rescaling>,
}

pub type TrajectorySet = BTreeMap<SystemId, Trajectory>;

impl SensorStream {
    pub fn len(&self) -> usize {
        self.data.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.data.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    pub fn labels(&self) -> Vec<String> {
        self.channels
            .iter()
            .enumerate()
            .map(|(i, c)| c.label(i))
            .collect()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        linalg::column(&self.data, j)
    }

    /// Keeps the first `n` rows.
    pub fn head(&self, n: usize) -> Result<Self> {
        if n > self.len() {
            return Err(Error::InsufficientData {
                needed: n,
                available: self.len(),
            });
        }
        let rows: Vec<usize> = (0..n).collect();
        Ok(self.with_rows(&rows))
    }

    pub fn with_rows(&self, rows: &[usize]) -> Self {
        Self {
            data: linalg::select_rows(&self.data, rows),
            channels: self.channels.clone(),
            sample_index: rows.iter().map(|&r| self.sample_index[r]).collect(),
            mixing: self.mixing.clone(),
            rescaling: self.rescaling.clone(),
        }
    }

    pub fn with_columns(&self, cols: &[usize]) -> Self {
        Self {
            data: linalg::select_columns(&self.data, cols),
            channels: cols.iter().map(|&c| self.channels[c].clone()).collect(),
            sample_index: self.sample_index.clone(),
            mixing: None,
            rescaling: None,
        }
    }

    pub fn sidecar(&self) -> StreamSidecar {
        StreamSidecar {
            channels: self.channels.clone(),
            labels: self.labels(),
            sample_index: self.sample_index.clone(),
            mixing: self.mixing.clone(),
            rescaling: self.rescaling.clone(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.labels().join(",");
        out.push('\n');
        for i in 0..self.len() {
            for j in 0..self.dim() {
                if j > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{:.16e}", self.data[(i, j)]);
            }
            out.push('\n');
        }
        out
    }

    /// Writes `<stem>.csv` and `<stem>.json` into `dir`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<Vec<std::path::PathBuf>> {
        let csv = dir.join(format!("{stem}.csv"));
        let json = dir.join(format!("{stem}.json"));
        std::fs::write(&csv, self.to_csv()).map_err(|e| Error::io(&csv, e))?;
        let meta = serde_json::to_string_pretty(&self.sidecar())?;
        std::fs::write(&json, meta).map_err(|e| Error::io(&json, e))?;
        Ok(vec![csv, json])
    }

    pub fn read(dir: &Path, stem: &str) -> Result<Self> {
        let csv = dir.join(format!("{stem}.csv"));
        let json = dir.join(format!("{stem}.json"));
        let text = std::fs::read_to_string(&csv).map_err(|e| Error::io(&csv, e))?;
        let meta: StreamSidecar = serde_json::from_str(
            &std::fs::read_to_string(&json).map_err(|e| Error::io(&json, e))?,
        )?;
        let d = meta.channels.len();
        let mut values = Vec::new();
        for line in text.lines().skip(1).filter(|l| !l.trim().is_empty()) {
            let row = line
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse(format!("{}: {e}", csv.display())))?;
            if row.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    actual: row.len(),
                });
            }
            values.extend(row);
        }
        let n = values.len() / d.max(1);
        if n != meta.sample_index.len() {
            return Err(Error::LengthMismatch {
                left: n,
                right: meta.sample_index.len(),
            });
        }
        Ok(Self {
            data: linalg::from_rows(n, d, &values)?,
            channels: meta.channels,
            sample_index: meta.sample_index,
            mixing: meta.mixing,
            rescaling: meta.rescaling,
        })
    }
}

/// Builds one stream from channel specs, trimming rows whose offsets fall
/// outside the trajectories.
pub fn assemble(trajs: &TrajectorySet, specs: &[ChannelSpec]) -> Result<SensorStream> {
    assemble_aligned(trajs, &[specs.to_vec()]).map(|mut v| v.remove(0))
}

/// Builds several streams over one common set of rows, so samples stay
/// aligned across sensors.
pub fn assemble_aligned(trajs: &TrajectorySet, sensors: &[Vec<ChannelSpec>]) -> Result<Vec<SensorStream>> {
    let len = trajs.values().map(Trajectory::len).min().unwrap_or(0);
    if let Some(t) = trajs.values().find(|t| t.len() != len) {
        return Err(Error::LengthMismatch {
            left: len,
            right: t.len(),
        });
    }
    let all: Vec<&ChannelSpec> = sensors.iter().flatten().collect();
    if all.is_empty() {
        return Err(Error::InvalidArgument("no channels requested".into()));
    }
    for spec in &all {
        let traj = trajs.get(&spec.source).ok_or_else(|| Error::UnknownName {
            kind: "trajectory",
            name: spec.source.to_string(),
        })?;
        if spec.variable >= traj.dim() {
            return Err(Error::DimensionMismatch {
                expected: traj.dim(),
                actual: spec.variable + 1,
            });
        }
        if spec.offset.unsigned_abs() as usize >= len {
            return Err(Error::OffsetOutOfRange {
                offset: spec.offset,
                len,
            });
        }
    }
    let min_off = all.iter().map(|s| s.offset).min().unwrap_or(0);
    let max_off = all.iter().map(|s| s.offset).max().unwrap_or(0);
    let start = (-min_off).max(0);
    let end = len as i64 - max_off.max(0);
    if end <= start {
        return Err(Error::OffsetOutOfRange {
            offset: if -min_off > max_off { min_off } else { max_off },
            len,
        });
    }
    let rows: Vec<i64> = (start..end).collect();
    Ok(sensors
        .iter()
        .map(|specs| {
            let data = Matrix::from_fn(rows.len(), specs.len(), |i, j| {
                let s = specs[j];
                trajs[&s.source].states[(rows[i] + s.offset) as usize][s.variable]
            });
            SensorStream {
                data,
                channels: specs.iter().copied().map(Channel::Clean).collect(),
                sample_index: rows.clone(),
                mixing: None,
                rescaling: None,
            }
        })
        .collect())
}

pub fn apply_mixing(s: &SensorStream, m: &MixingMatrix) -> Result<SensorStream> {
    if m.dim != s.dim() {
        return Err(Error::DimensionMismatch {
            expected: s.dim(),
            actual: m.dim,
        });
    }
    Ok(SensorStream {
        data: &s.data * m.to_matrix(),
        channels: vec![Channel::Mixed; s.dim()],
        sample_index: s.sample_index.clone(),
        mixing: Some(m.clone()),
        rescaling: None,
    })
}

fn column_means(data: &Matrix) -> Vec<f64> {
    (0..data.ncols())
        .map(|j| linalg::mean(data.col_as_slice(j)))
        .collect()
}

/// Rescales every column to zero mean and unit (population) variance.
pub fn standardize(s: &SensorStream) -> Result<SensorStream> {
    let n = s.len() as f64;
    let mean = column_means(&s.data);
    let d = s.dim();
    let mut matrix = vec![0.0; d * d];
    for j in 0..d {
        let col = s.data.col_as_slice(j);
        let var = col.iter().map(|x| (x - mean[j]).powi(2)).sum::<f64>() / n;
        let sd = var.sqrt();
        if !(sd > 1e-300) || !(sd > 1e-14 * mean[j].abs()) {
            return Err(Error::DegenerateChannel { channel: j });
        }
        matrix[j * d + j] = 1.0 / sd;
    }
    Ok(rescaled(s, Preprocess::Standardize, mean, matrix))
}

/// Centers the data and multiplies by the inverse symmetric square root of
/// its covariance, so the result has identity covariance. Euclidean
/// distances after whitening are unchanged by any invertible linear mixing
/// applied beforehand, up to a rotation.
pub fn whiten(s: &SensorStream) -> Result<SensorStream> {
    let n = s.len() as f64;
    let d = s.dim();
    let mean = column_means(&s.data);
    let centered = Matrix::from_fn(s.len(), d, |i, j| s.data[(i, j)] - mean[j]);
    let cov = Matrix::from_fn(d, d, |a, b| {
        linalg::dot(centered.col_as_slice(a), centered.col_as_slice(b)) / n
    });
    let (vals, vecs) = linalg::symmetric_eigen_desc(&cov, d)?;
    let top = vals.first().copied().unwrap_or(0.0);
    if let Some(k) = vals.iter().position(|&v| !(v > 1e-12 * top) || !(top > 0.0)) {
        return Err(Error::DegenerateChannel { channel: k });
    }
    let mut matrix = vec![0.0; d * d];
    for a in 0..d {
        for b in 0..d {
            matrix[a * d + b] = (0..d)
                .map(|k| vecs[(a, k)] * vecs[(b, k)] / vals[k].sqrt())
                .sum();
        }
    }
    Ok(rescaled(s, Preprocess::Whiten, mean, matrix))
}

pub fn preprocess(s: &SensorStream, how: Preprocess) -> Result<SensorStream> {
    match how {
        Preprocess::None => Ok(s.clone()),
        Preprocess::Standardize => standardize(s),
        Preprocess::Whiten => whiten(s),
    }
}

fn rescaled(s: &SensorStream, kind: Preprocess, mean: Vec<f64>, matrix: Vec<f64>) -> SensorStream {
    let d = s.dim();
    let t = Matrix::from_fn(d, d, |i, j| matrix[i * d + j]);
    let centered = Matrix::from_fn(s.len(), d, |i, j| s.data[(i, j)] - mean[j]);
    SensorStream {
        data: &centered * &t,
        channels: s.channels.clone(),
        sample_index: s.sample_index.clone(),
        mixing: s.mixing.clone(),
        rescaling: Some(Rescaling { kind, mean, matrix }),
    }
}

/// Undoes the recorded rescaling.
pub fn unscale(s: &SensorStream) -> Result<SensorStream> {
    let Some(r) = &s.rescaling else {
        return Ok(s.clone());
    };
    let d = s.dim();
    let t = Matrix::from_fn(d, d, |i, j| r.matrix[i * d + j]);
    let inv = linalg::invert(&t)
        .ok_or_else(|| Error::InvalidArgument("recorded rescaling is singular".into()))?;
    let back = &s.data * &inv;
    Ok(SensorStream {
        data: Matrix::from_fn(s.len(), d, |i, j| back[(i, j)] + r.mean[j]),
        channels: s.channels.clone(),
        sample_index: s.sample_index.clone(),
        mixing: s.mixing.clone(),
        rescaling: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_trajs() -> TrajectorySet {
        let mk = |f: fn(f64) -> f64, g: fn(f64) -> f64| Trajectory {
            times: (0..50).map(|i| i as f64).collect(),
            states: (0..50).map(|i| vec![f(i as f64), g(i as f64)]).collect(),
            dt: 1.0,
        };
        let mut t = TrajectorySet::new();
        t.insert(SystemId::X, mk(|x| x.sin(), |x| x.cos()));
        t.insert(SystemId::Y, mk(|x| (0.3 * x).sin(), |x| x * 0.01));
        t
    }

    #[test]
    fn single_channel_equals_trajectory_column() {
        let t = toy_trajs();
        let s = assemble(&t, &[ChannelSpec::new(SystemId::X, 0, 0)]).unwrap();
        assert_eq!(s.column(0), t[&SystemId::X].component(0));
    }

    #[test]
    fn offsets_trim_and_align() {
        let t = toy_trajs();
        let specs = [
            ChannelSpec::new(SystemId::X, 0, 0),
            ChannelSpec::new(SystemId::X, 0, -3),
            ChannelSpec::new(SystemId::Y, 1, 4),
        ];
        let s = assemble(&t, &specs).unwrap();
        assert_eq!(s.len(), 50 - 3 - 4);
        assert_eq!(s.sample_index[0], 3);
        for i in 0..s.len() {
            let r = s.sample_index[i] as f64;
            assert_eq!(s.data[(i, 0)], r.sin());
            assert_eq!(s.data[(i, 1)], (r - 3.0).sin());
            assert_eq!(s.data[(i, 2)], (r + 4.0) * 0.01);
        }
        let err = assemble(&t, &[ChannelSpec::new(SystemId::X, 0, 60)]).unwrap_err();
        assert!(matches!(err, Error::OffsetOutOfRange { .. }));
    }

    #[test]
    fn diagonal_mixing() {
        let s = SensorStream {
            data: linalg::from_rows(2, 2, &[1.0, 0.0, 0.0, 1.0]).unwrap(),
            channels: vec![Channel::Mixed; 2],
            sample_index: vec![0, 1],
            mixing: None,
            rescaling: None,
        };
        let m = MixingMatrix::new(2, vec![2.0, 0.0, 0.0, 3.0]).unwrap();
        let out = apply_mixing(&s, &m).unwrap();
        assert_eq!(linalg::to_row_major(&out.data), vec![2.0, 0.0, 0.0, 3.0]);
        assert!(MixingMatrix::new(2, vec![1.0, 2.0, 2.0, 4.0]).is_err());
        assert!(apply_mixing(&s, &MixingMatrix::identity(3)).is_err());
    }

    #[test]
    fn standardize_rejects_constant() {
        let s = SensorStream {
            data: linalg::from_rows(3, 1, &[2.0, 2.0, 2.0]).unwrap(),
            channels: vec![Channel::Mixed],
            sample_index: vec![0, 1, 2],
            mixing: None,
            rescaling: None,
        };
        assert!(matches!(standardize(&s), Err(Error::DegenerateChannel { channel: 0 })));
    }

    #[test]
    fn whitening_gives_identity_covariance() {
        let t = toy_trajs();
        let s = assemble(
            &t,
            &[
                ChannelSpec::new(SystemId::X, 0, 0),
                ChannelSpec::new(SystemId::X, 1, 0),
                ChannelSpec::new(SystemId::Y, 0, 0),
            ],
        )
        .unwrap();
        let w = whiten(&s).unwrap();
        let n = w.len() as f64;
        for a in 0..3 {
            for b in 0..3 {
                let c = linalg::dot(w.data.col_as_slice(a), w.data.col_as_slice(b)) / n;
                let e = if a == b { 1.0 } else { 0.0 };
                assert!((c - e).abs() < 1e-10);
            }
        }
        let back = unscale(&w).unwrap();
        for i in 0..s.len() {
            for j in 0..3 {
                assert!((back.data[(i, j)] - s.data[(i, j)]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn csv_sidecar_roundtrip() {
        let t = toy_trajs();
        let s = assemble(&t, &[ChannelSpec::new(SystemId::X, 0, -1), ChannelSpec::new(SystemId::Y, 1, 0)]).unwrap();
        let s = apply_mixing(&s, &MixingMatrix::new(2, vec![1.0, 0.5, -0.25, 2.0]).unwrap()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        s.write(dir.path(), "s1").unwrap();
        let back = SensorStream::read(dir.path(), "s1").unwrap();
        assert_eq!(back.data, s.data);
        assert_eq!(back.mixing, s.mixing);
        assert_eq!(back.sample_index, s.sample_index);
    }
}
