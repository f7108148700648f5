use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::{ForcingParams, LorenzParams, TakoudisParams};
use crate::embeddings::{JsfOptions, OutputInformedOptions};
use crate::error::{Error, Result};
use crate::regression::{GhOptions, RegressionParams};
use crate::selection::SelectionOptions;
use crate::sensors::{MixingMatrix, Preprocess};

pub const EXPERIMENTS: [&str; 7] = [
    "base",
    "mixed",
    "causality1",
    "causality2",
    "output_informed_s1",
    "output_informed_s2",
    "jsf_variants",
];

/// Row-major mixing matrix applied to the first sensor's clean channels.
pub const MIXING_S1: [f64; 16] = [
    0.3637, -0.0173, -0.3701, 0.1013, //
    -0.5068, -0.4513, 0.1470, -0.2041, //
    0.0888, -0.1818, 0.3284, 0.3344, //
    0.0407, -0.3496, -0.1545, 0.3602,
];

/// Row-major mixing matrix applied to the second sensor's clean channels.
pub const MIXING_S2: [f64; 16] = [
    -0.1394, -0.0597, 0.0828, 0.3847, //
    -0.3803, -0.3576, -0.3440, -0.0628, //
    -0.1010, -0.5259, -0.2147, -0.3981, //
    -0.3793, -0.0568, 0.3585, -0.1544,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixingChoice {
    /// The two published 4x4 matrices.
    #[default]
    Published,
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixedLayout {
    /// Full states of the common and one extraneous system, sensor 2 shifted
    /// by tau.
    #[default]
    States,
    /// The base experiment's delay-embedded channels.
    Base,
}

/// Every knob of an experiment. Times are in model time units; they are
/// converted to whole samples using the sampling interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub n_samples: usize,
    pub seed: u64,

    pub oscillator: TakoudisParams,
    pub forcing: ForcingParams,
    pub lorenz: LorenzParams,
    pub dt: f64,
    pub lorenz_dt: f64,
    /// Time between samples of the two surface-reaction systems.
    pub sample_interval: f64,
    /// Time between Lorenz samples, on the Lorenz clock.
    pub lorenz_sample_interval: f64,
    pub burn_in_periods: f64,
    pub lorenz_burn_in: f64,
    /// Period of the limit cycle; measured when absent.
    pub period: Option<f64>,

    /// Delay of the lagged channels; a quarter period when absent.
    pub delta_t: Option<f64>,
    /// Future shift of sensor 2; per-experiment default when absent.
    pub tau: Option<f64>,

    pub preprocess: Preprocess,
    pub bandwidth_scales: [f64; 2],
    pub n_eigenvectors: usize,
    pub selection: SelectionOptions,
    pub channel_threshold: f64,

    pub jsf: JsfOptions,
    pub output_informed: OutputInformedOptions,
    pub output_informed_selection: SelectionOptions,

    pub regression: RegressionParams,
    pub n_train: usize,
    pub n_test: usize,
    /// Settings for the two-way one-to-one checks between embeddings and
    /// state variables.
    pub consistency_gh: GhOptions,
    pub train_fraction: f64,

    pub mixing: MixingChoice,
    pub mixed_layout: MixedLayout,
    pub plots: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: "base".into(),
            n_samples: 2000,
            seed: 0,
            oscillator: TakoudisParams::default(),
            forcing: ForcingParams::default(),
            lorenz: LorenzParams::default(),
            dt: 0.1,
            lorenz_dt: 0.005,
            sample_interval: 25.0,
            lorenz_sample_interval: 0.25,
            burn_in_periods: 10.0,
            lorenz_burn_in: 20.0,
            period: None,
            delta_t: None,
            tau: None,
            preprocess: Preprocess::Whiten,
            bandwidth_scales: [0.5, 0.5],
            n_eigenvectors: 10,
            selection: SelectionOptions::default(),
            channel_threshold: 0.5,
            jsf: JsfOptions::default(),
            output_informed: OutputInformedOptions::default(),
            output_informed_selection: SelectionOptions {
                n_examined: 20,
                eigenvalue_floor: 0.0,
                ..SelectionOptions::default()
            },
            regression: RegressionParams::default(),
            n_train: 50,
            n_test: 200,
            consistency_gh: GhOptions::default(),
            train_fraction: 0.75,
            mixing: MixingChoice::Published,
            mixed_layout: MixedLayout::States,
            plots: true,
        }
    }
}

impl ExperimentConfig {
    pub fn named(name: &str) -> Result<Self> {
        let cfg = Self {
            experiment: name.to_string(),
            ..Self::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !EXPERIMENTS.contains(&self.experiment.as_str()) {
            return Err(Error::UnknownName {
                kind: "experiment",
                name: self.experiment.clone(),
            });
        }
        let positive = [
            ("dt", self.dt),
            ("lorenz_dt", self.lorenz_dt),
            ("sample_interval", self.sample_interval),
            ("lorenz_sample_interval", self.lorenz_sample_interval),
            ("bandwidth_scales[0]", self.bandwidth_scales[0]),
            ("bandwidth_scales[1]", self.bandwidth_scales[1]),
            ("jsf.kernel_scale", self.jsf.kernel_scale),
            ("jsf.energy_scale", self.jsf.energy_scale),
            ("output_informed.eps", self.output_informed.eps),
            ("consistency_gh.bandwidth_scale", self.consistency_gh.bandwidth_scale),
            ("regression.gh.bandwidth_scale", self.regression.gh.bandwidth_scale),
        ];
        if let Some((name, v)) = positive.iter().find(|(_, v)| !(*v > 0.0)) {
            return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
        }
        if self.burn_in_periods < 0.0 || self.lorenz_burn_in < 0.0 {
            return Err(Error::InvalidArgument("burn-in must be nonnegative".into()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::InvalidArgument("train_fraction must lie in (0, 1)".into()));
        }
        if self.n_samples < self.n_train + self.n_test {
            return Err(Error::InvalidArgument(format!(
                "n_samples ({}) must cover n_train + n_test ({})",
                self.n_samples,
                self.n_train + self.n_test
            )));
        }
        self.oscillator.validate()?;
        self.forcing.validate()?;
        self.lorenz.validate()
    }

    /// Per-sample stride of the integrator for the surface-reaction systems.
    pub fn stride(&self) -> usize {
        ((self.sample_interval / self.dt).round() as usize).max(1)
    }

    pub fn lorenz_stride(&self) -> usize {
        ((self.lorenz_sample_interval / self.lorenz_dt).round() as usize).max(1)
    }

    /// Converts a duration to a whole number of samples.
    pub fn to_samples(&self, time: f64) -> i64 {
        (time / (self.stride() as f64 * self.dt)).round() as i64
    }

    pub fn mixing_matrices(&self) -> [MixingMatrix; 2] {
        match self.mixing {
            MixingChoice::Published => [
                MixingMatrix {
                    dim: 4,
                    entries: MIXING_S1.to_vec(),
                },
                MixingMatrix {
                    dim: 4,
                    entries: MIXING_S2.to_vec(),
                },
            ],
            MixingChoice::Identity => [MixingMatrix::identity(4), MixingMatrix::identity(4)],
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
