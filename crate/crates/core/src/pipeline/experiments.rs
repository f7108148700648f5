//! Named experiments, each behind the [`Experiment`] trait.

use std::path::{Path, PathBuf};

use log::info;
use serde::{Deserialize, Serialize};

use crate::embeddings::{self, CommonParams, Embedding, JsfSet};
use crate::error::{Error, Result, StageContext};
use crate::linalg::{self, Matrix};
use crate::regression::{self, GhOptions};
use crate::selection::{self, ChannelClass, ChannelVerdict, LlrReport, Selection, SelectionOptions};
use crate::sensors::{self, SensorStream};

use super::config::ExperimentConfig;
use super::data::{self, Layout, Simulation, Streams};
use super::plot;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorVerdicts {
    pub sensor: usize,
    pub verdicts: Vec<ChannelVerdict>,
}

/// Two-way Geometric Harmonics fit between two sets of coordinates, scored
/// by relative sup-norm error on held-out samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneToOne {
    pub name: String,
    pub forward: f64,
    pub backward: f64,
}

impl OneToOne {
    pub fn worst(&self) -> f64 {
        self.forward.max(self.backward)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodScore {
    pub method: String,
    /// Largest test error divided by the number of test samples.
    pub eq6_error: f64,
    pub relative_linf: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionReport {
    pub inputs: Vec<String>,
    pub output: String,
    pub n_train: usize,
    pub n_test: usize,
    pub methods: Vec<MethodScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalityReport {
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub k: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub relative_linf: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsfReport {
    pub data: String,
    pub singular_values: Vec<f64>,
    pub max_energies: Vec<f64>,
    pub smooth_count: usize,
    pub gap_ratio: f64,
    /// Indices into the full function list.
    pub smooth: Vec<usize>,
    /// Indices into the full function list.
    pub selected: Vec<usize>,
    pub one_to_one: Option<OneToOne>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenRole {
    pub index: usize,
    pub common_residual: f64,
    pub specific_residual: f64,
    pub role: ChannelClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputInformedReport {
    pub sensor: usize,
    pub eigenvalues: Vec<f64>,
    pub selected: Vec<usize>,
    pub llr: LlrReport,
    pub roles: Vec<EigenRole>,
    pub common_pair: Option<OneToOne>,
    pub specific_pair: Option<OneToOne>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub n_samples: usize,
    pub period: f64,
    pub delay_samples: i64,
    pub shift_samples: i64,
    pub eigenvalues: Vec<f64>,
    pub selected: Vec<usize>,
    pub llr: Option<LlrReport>,
    pub channels: Vec<SensorVerdicts>,
    /// Verdicts for the untransformed channels behind mixed sensors.
    pub clean_channels: Vec<SensorVerdicts>,
    pub one_to_one: Vec<OneToOne>,
    pub regression: Option<RegressionReport>,
    pub causality: Option<CausalityReport>,
    pub jsf: Vec<JsfReport>,
    pub output_informed: Option<OutputInformedReport>,
    pub files: Vec<PathBuf>,
}

impl ExperimentReport {
    fn new(cfg: &ExperimentConfig, sim: &Simulation) -> Self {
        let o = data::offsets(cfg, sim.period);
        Self {
            experiment: cfg.experiment.clone(),
            n_samples: cfg.n_samples,
            period: sim.period,
            delay_samples: o.delay,
            shift_samples: o.shift,
            eigenvalues: Vec::new(),
            selected: Vec::new(),
            llr: None,
            channels: Vec::new(),
            clean_channels: Vec::new(),
            one_to_one: Vec::new(),
            regression: None,
            causality: None,
            jsf: Vec::new(),
            output_informed: None,
            files: Vec::new(),
        }
    }

    pub fn one_to_one(&self, name: &str) -> Option<&OneToOne> {
        self.one_to_one.iter().find(|c| c.name == name)
    }

    pub fn method(&self, name: &str) -> Option<&MethodScore> {
        self.regression.as_ref()?.methods.iter().find(|m| m.method == name)
    }
}

/// Where an experiment writes its artifacts; `None` keeps everything in
/// memory.
pub struct Artifacts {
    dir: Option<PathBuf>,
    files: Vec<PathBuf>,
}

impl Artifacts {
    pub fn new(dir: Option<&Path>) -> Result<Self> {
        if let Some(d) = dir {
            std::fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
        }
        Ok(Self {
            dir: dir.map(Path::to_path_buf),
            files: Vec::new(),
        })
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn text(&mut self, name: &str, content: &str) -> Result<()> {
        if let Some(d) = &self.dir {
            let p = d.join(name);
            std::fs::write(&p, content).map_err(|e| Error::io(&p, e))?;
            self.files.push(p);
        }
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        if self.dir.is_some() {
            self.text(name, &serde_json::to_string_pretty(value)?)?;
        }
        Ok(())
    }

    pub fn stream(&mut self, s: &SensorStream, stem: &str) -> Result<()> {
        if let Some(d) = &self.dir {
            self.files.extend(s.write(d, stem)?);
        }
        Ok(())
    }

    pub fn embedding(&mut self, e: &Embedding, stem: &str) -> Result<()> {
        if let Some(d) = &self.dir {
            self.files.extend(e.write(d, stem)?);
        }
        Ok(())
    }

    pub fn into_files(self) -> Vec<PathBuf> {
        self.files
    }
}

/// A named, runnable reproduction.
pub trait Experiment: Send + Sync {
    fn name(&self) -> &'static str;
    fn run(&self, cfg: &ExperimentConfig, sim: &Simulation, out: &mut Artifacts) -> Result<ExperimentReport>;
}

pub fn experiment_by_name(name: &str) -> Result<Box<dyn Experiment>> {
    Ok(match name {
        "base" => Box::new(Base),
        "mixed" => Box::new(Mixed),
        "causality1" => Box::new(Causality { name: "causality1" }),
        "causality2" => Box::new(Causality { name: "causality2" }),
        "output_informed_s1" => Box::new(OutputInformed { name: "output_informed_s1", sensor: 0 }),
        "output_informed_s2" => Box::new(OutputInformed { name: "output_informed_s2", sensor: 1 }),
        "jsf_variants" => Box::new(JsfVariants),
        other => {
            return Err(Error::UnknownName {
                kind: "experiment",
                name: other.to_string(),
            })
        }
    })
}

struct Base;
struct Mixed;
struct Causality {
    name: &'static str,
}
struct OutputInformed {
    name: &'static str,
    sensor: usize,
}
struct JsfVariants;

/// Result of the common-embedding stage shared by most experiments.
pub struct CommonStage {
    pub embedding: Embedding,
    pub selection: Selection,
    pub prepared: [SensorStream; 2],
}

pub fn prepare(cfg: &ExperimentConfig, streams: &Streams) -> Result<[SensorStream; 2]> {
    Ok([
        sensors::preprocess(&streams.sensors[0], cfg.preprocess).stage("preprocess sensor 1")?,
        sensors::preprocess(&streams.sensors[1], cfg.preprocess).stage("preprocess sensor 2")?,
    ])
}

pub fn common_params(cfg: &ExperimentConfig) -> CommonParams {
    CommonParams {
        bandwidth_scales: cfg.bandwidth_scales.to_vec(),
        n_eigenvectors: cfg.n_eigenvectors,
        jsf: cfg.jsf,
        ..CommonParams::default()
    }
}

pub fn common_stage(cfg: &ExperimentConfig, streams: &Streams) -> Result<CommonStage> {
    let prepared = prepare(cfg, streams)?;
    let embedder = embeddings::embedder_by_name("alternating")?;
    let embedding = embedder
        .embed(&[&prepared[0].data, &prepared[1].data], &common_params(cfg))
        .stage("alternating diffusion")?;
    let selection = selection::select_parsimonious(&embedding, &cfg.selection).stage("select")?;
    info!(
        "eigenvalues {:?}, selected {:?}",
        embedding.eigenvalues, selection.selected
    );
    Ok(CommonStage {
        embedding,
        selection,
        prepared,
    })
}

fn verdicts(cfg: &ExperimentConfig, streams: &[SensorStream; 2], coords: &Matrix) -> Result<Vec<SensorVerdicts>> {
    streams
        .iter()
        .enumerate()
        .map(|(k, s)| {
            Ok(SensorVerdicts {
                sensor: k + 1,
                verdicts: selection::channel_identifiability(
                    &s.data,
                    &s.labels(),
                    coords,
                    cfg.channel_threshold,
                    &cfg.selection.llr,
                )
                .stage("channel identifiability")?,
            })
        })
        .collect()
}

/// Sequential split: the first `fraction` of rows train, the rest test.
fn split_rows(n: usize, fraction: f64) -> (Vec<usize>, Vec<usize>) {
    let k = ((n as f64) * fraction).round() as usize;
    ((0..k).collect(), (k..n).collect())
}

/// Fits Geometric Harmonics from `a` to `b` and from `b` to `a`.
pub fn two_way_check(name: &str, a: &Matrix, b: &Matrix, opts: &GhOptions, fraction: f64) -> Result<OneToOne> {
    let (train, test) = split_rows(a.nrows(), fraction);
    let one_way = |p: &Matrix, q: &Matrix| -> Result<f64> {
        let model = regression::gh_fit_auto(&linalg::select_rows(p, &train), &linalg::select_rows(q, &train), opts)?;
        let pred = model.predict(&linalg::select_rows(p, &test))?;
        regression::relative_linf(&linalg::select_rows(q, &test), &pred)
    };
    Ok(OneToOne {
        name: name.to_string(),
        forward: one_way(a, b).stage(name)?,
        backward: one_way(b, a).stage(name)?,
    })
}

fn plot_coords(out: &mut Artifacts, stem: &str, coords: &Matrix, labels: [&str; 2], colorings: &[(String, Vec<f64>)]) -> Result<()> {
    if out.dir().is_none() || coords.ncols() < 2 {
        return Ok(());
    }
    for (i, (name, values)) in colorings.iter().enumerate() {
        let svg = plot::scatter_svg(
            coords.col_as_slice(0),
            coords.col_as_slice(1),
            values,
            &format!("colored by {name}"),
            labels[0],
            labels[1],
        );
        out.text(&format!("{stem}_{}.svg", i + 1), &svg)?;
    }
    Ok(())
}

fn stream_colorings(streams: &[&SensorStream]) -> Vec<(String, Vec<f64>)> {
    streams
        .iter()
        .enumerate()
        .flat_map(|(k, s)| {
            s.labels()
                .into_iter()
                .enumerate()
                .map(move |(j, l)| (format!("sensor {} {l}", k + 1), s.column(j)))
        })
        .collect()
}

/// Runs simulation-independent stages common to base, mixed and the
/// causality setups, and fills the matching report fields.
fn analyze_common(
    cfg: &ExperimentConfig,
    streams: &Streams,
    report: &mut ExperimentReport,
    out: &mut Artifacts,
) -> Result<CommonStage> {
    out.stream(&streams.sensors[0], "sensor1")?;
    out.stream(&streams.sensors[1], "sensor2")?;
    let stage = common_stage(cfg, streams)?;
    out.embedding(&stage.embedding, "alternating_embedding")?;
    out.json("llr.json", &stage.selection.report)?;
    let coords = stage.embedding.coords(&stage.selection.selected);
    report.eigenvalues = stage.embedding.eigenvalues.clone();
    report.selected = stage.selection.selected.clone();
    report.llr = Some(stage.selection.report.clone());
    report.channels = verdicts(cfg, &streams.sensors, &coords)?;
    if streams.sensors[0].mixing.is_some() {
        report.clean_channels = verdicts(cfg, &streams.clean, &coords)?;
    }
    report.one_to_one.push(two_way_check(
        "embedding_vs_common_state",
        &coords,
        &streams.common_truth.data,
        &cfg.consistency_gh,
        cfg.train_fraction,
    )?);
    let mut refs = vec![&streams.sensors[0], &streams.sensors[1]];
    if streams.sensors[0].mixing.is_some() {
        refs.push(&streams.common_truth);
    }
    plot_coords(out, "embedding", &coords, ["phi_a", "phi_b"], &stream_colorings(&refs))?;
    Ok(stage)
}

fn setup(cfg: &ExperimentConfig, sim: &Simulation) -> Result<(Layout, Streams)> {
    let layout = data::layout(cfg, sim.period);
    let streams = data::assemble_streams(cfg, sim, &layout)?;
    Ok((layout, streams))
}

fn finish(mut report: ExperimentReport, out: Artifacts) -> Result<ExperimentReport> {
    let mut out = out;
    if let Some(d) = out.dir().map(Path::to_path_buf) {
        report.files = out.files.clone();
        report.files.push(d.join("report.json"));
        out.json("report.json", &report)?;
    }
    report.files = out.into_files();
    Ok(report)
}

impl Experiment for Base {
    fn name(&self) -> &'static str {
        "base"
    }

    fn run(&self, cfg: &ExperimentConfig, sim: &Simulation, out: &mut Artifacts) -> Result<ExperimentReport> {
        let (_, streams) = setup(cfg, sim)?;
        let mut report = ExperimentReport::new(cfg, sim);
        analyze_common(cfg, &streams, &mut report, out)?;
        report.regression = Some(regression_task(cfg, &streams, out)?);
        Ok(report)
    }
}

/// Learns species B of the common system (seen by sensor 2) from species A
/// now and one delay earlier (seen by sensor 1).
pub fn regression_task(cfg: &ExperimentConfig, streams: &Streams, out: &mut Artifacts) -> Result<RegressionReport> {
    let s1 = &streams.clean[0];
    let s2 = &streams.clean[1];
    let x = linalg::select_columns(&s1.data, &[0, 2]);
    let y = linalg::select_columns(&s2.data, &[0]);
    let train: Vec<usize> = (0..cfg.n_train).collect();
    let test: Vec<usize> = (cfg.n_train..cfg.n_train + cfg.n_test).collect();
    let (xt, yt) = (linalg::select_rows(&x, &train), linalg::select_rows(&y, &train));
    let (xq, yq) = (linalg::select_rows(&x, &test), linalg::select_rows(&y, &test));
    let mut params = cfg.regression.clone();
    params.mlp.seed = cfg.seed;
    let mut methods = Vec::new();
    for name in regression::regressor_names() {
        let model = regression::regressor_by_name(name, &params)?
            .fit(&xt, &yt)
            .stage(&format!("fit {name}"))?;
        let pred = model.predict(&xq)?;
        methods.push(MethodScore {
            method: name.to_string(),
            eq6_error: regression::linf_error(yq.col_as_slice(0), pred.col_as_slice(0))?,
            relative_linf: regression::relative_linf(&yq, &pred)?,
        });
        out.json(&format!("model_{name}.json"), &model.record())?;
    }
    Ok(RegressionReport {
        inputs: vec![s1.labels()[0].clone(), s1.labels()[2].clone()],
        output: s2.labels()[0].clone(),
        n_train: cfg.n_train,
        n_test: cfg.n_test,
        methods,
    })
}

impl Experiment for Mixed {
    fn name(&self) -> &'static str {
        "mixed"
    }

    fn run(&self, cfg: &ExperimentConfig, sim: &Simulation, out: &mut Artifacts) -> Result<ExperimentReport> {
        let (_, streams) = setup(cfg, sim)?;
        let mut report = ExperimentReport::new(cfg, sim);
        analyze_common(cfg, &streams, &mut report, out)?;
        Ok(report)
    }
}

impl Experiment for Causality {
    fn name(&self) -> &'static str {
        self.name
    }

    fn run(&self, cfg: &ExperimentConfig, sim: &Simulation, out: &mut Artifacts) -> Result<ExperimentReport> {
        let (_, streams) = setup(cfg, sim)?;
        let mut report = ExperimentReport::new(cfg, sim);
        analyze_common(cfg, &streams, &mut report, out)?;

        // present common channels of sensor 1 -> shifted common channels of sensor 2
        let common = |k: usize| -> Vec<usize> {
            report.channels[k]
                .verdicts
                .iter()
                .enumerate()
                .filter(|(_, v)| v.class == ChannelClass::Common)
                .map(|(j, _)| j)
                .collect()
        };
        let (c1, c2) = (common(0), common(1));
        if c1.is_empty() || c2.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "{}: no common channels found (sensor 1 {c1:?}, sensor 2 {c2:?})",
                self.name
            )));
        }
        let x = linalg::select_columns(&streams.sensors[0].data, &c1);
        let y = linalg::select_columns(&streams.sensors[1].data, &c2);
        let (train, test) = split_rows(x.nrows(), cfg.train_fraction);
        let model = regression::knn_fit(&linalg::select_rows(&x, &train), &linalg::select_rows(&y, &train), cfg.regression.knn_k)?;
        let truth = linalg::select_rows(&y, &test);
        let pred = model.predict(&linalg::select_rows(&x, &test))?;
        let l1 = streams.sensors[0].labels();
        let l2 = streams.sensors[1].labels();
        report.causality = Some(CausalityReport {
            inputs: c1.iter().map(|&j| l1[j].clone()).collect(),
            outputs: c2.iter().map(|&j| l2[j].clone()).collect(),
            k: cfg.regression.knn_k,
            n_train: train.len(),
            n_test: test.len(),
            relative_linf: regression::relative_linf(&truth, &pred)?,
        });
        if out.dir().is_some() && truth.ncols() >= 1 {
            let svg = plot::scatter_svg(
                truth.col_as_slice(0),
                pred.col_as_slice(0),
                &(0..truth.nrows()).map(|i| i as f64).collect::<Vec<_>>(),
                "held-out shifted channel: truth vs prediction",
                "truth",
                "prediction",
            );
            out.text("causality_prediction.svg", &svg)?;
        }
        Ok(report)
    }
}

impl Experiment for OutputInformed {
    fn name(&self) -> &'static str {
        self.name
    }

    fn run(&self, cfg: &ExperimentConfig, sim: &Simulation, out: &mut Artifacts) -> Result<ExperimentReport> {
        let (_, streams) = setup(cfg, sim)?;
        let mut report = ExperimentReport::new(cfg, sim);
        let stage = common_stage(cfg, &streams)?;
        report.eigenvalues = stage.embedding.eigenvalues.clone();
        report.selected = stage.selection.selected.clone();
        report.llr = Some(stage.selection.report.clone());
        let outputs = stage.embedding.coords(&stage.selection.selected);

        let k = self.sensor;
        let e = embeddings::output_informed_embed(&stage.prepared[k].data, &outputs, &cfg.output_informed)
            .stage("output-informed embedding")?;
        out.embedding(&e, &format!("output_informed_sensor{}", k + 1))?;
        let sel = selection::select_parsimonious(&e, &cfg.output_informed_selection).stage("select")?;
        let common = &streams.common_truth.data;
        let specific = &streams.specific_truth[k].data;
        let mut roles = Vec::new();
        for &idx in &sel.selected {
            let (rc, _) = selection::llr_residuals(&[e.vector(idx)], common, &cfg.selection.llr)?;
            let (rs, _) = selection::llr_residuals(&[e.vector(idx)], specific, &cfg.selection.llr)?;
            roles.push(EigenRole {
                index: idx,
                common_residual: rc[0],
                specific_residual: rs[0],
                role: if rc[0] <= rs[0] {
                    ChannelClass::Common
                } else {
                    ChannelClass::SensorSpecific
                },
            });
        }
        let pair = |class: ChannelClass| -> Vec<usize> {
            roles.iter().filter(|r| r.role == class).map(|r| r.index).take(2).collect()
        };
        let (cp, sp) = (pair(ChannelClass::Common), pair(ChannelClass::SensorSpecific));
        let check = |name: &str, idx: &[usize], target: &Matrix| -> Result<Option<OneToOne>> {
            if idx.len() < 2 {
                return Ok(None);
            }
            two_way_check(name, &e.coords(idx), target, &cfg.consistency_gh, cfg.train_fraction).map(Some)
        };
        let common_pair = check("common_pair_vs_common_state", &cp, common)?;
        let specific_pair = check("specific_pair_vs_specific_state", &sp, specific)?;
        if cp.len() == 2 {
            let c = vec![(streams.common_truth.labels()[0].clone(), streams.common_truth.column(0))];
            plot_coords(out, "common_pair", &e.coords(&cp), ["phi_a", "phi_b"], &c)?;
        }
        if sp.len() == 2 {
            let s = &streams.specific_truth[k];
            let c = vec![(s.labels()[0].clone(), s.column(0))];
            plot_coords(out, "specific_pair", &e.coords(&sp), ["phi_a", "phi_b"], &c)?;
        }
        report.one_to_one.extend(common_pair.iter().cloned());
        report.one_to_one.extend(specific_pair.iter().cloned());
        report.output_informed = Some(OutputInformedReport {
            sensor: k + 1,
            eigenvalues: e.eigenvalues.clone(),
            selected: sel.selected.clone(),
            llr: sel.report,
            roles,
            common_pair,
            specific_pair,
        });
        Ok(report)
    }
}

/// Smoothness split, LLR selection and the one-to-one check for the jointly
/// smooth functions of one pair of streams.
pub fn jsf_analysis(cfg: &ExperimentConfig, label: &str, streams: &Streams, out: &mut Artifacts) -> Result<JsfReport> {
    let prepared = prepare(cfg, streams)?;
    let set: JsfSet = embeddings::jsf(&[&prepared[0].data, &prepared[1].data], &cfg.jsf).stage("jsf")?;
    let (count, ratio) = set.smooth_split();
    let smooth = set.smooth_indices();
    let emb = Embedding {
        eigenvalues: smooth.iter().map(|&m| set.singular_values[m]).collect(),
        vectors: linalg::select_columns(&set.functions, &smooth),
        source: "jsf".into(),
        bandwidths: set.bandwidths.clone(),
    };
    let full = Embedding {
        eigenvalues: set.singular_values[..cfg.jsf.count].to_vec(),
        vectors: set.functions.clone(),
        source: "jsf".into(),
        bandwidths: set.bandwidths.clone(),
    };
    out.embedding(&full, &format!("jsf_{label}"))?;
    let (selected, one_to_one) = if emb.len() >= 3 {
        let sel = selection::select_parsimonious(
            &emb,
            &SelectionOptions {
                eigenvalue_floor: 0.0,
                ..cfg.selection
            },
        )?;
        let coords = emb.coords(&sel.selected);
        let check = if sel.selected.len() >= 2 {
            Some(two_way_check(
                &format!("jsf_{label}_vs_common_state"),
                &coords,
                &streams.common_truth.data,
                &cfg.consistency_gh,
                cfg.train_fraction,
            )?)
        } else {
            None
        };
        let c = vec![(streams.common_truth.labels()[0].clone(), streams.common_truth.column(0))];
        plot_coords(out, &format!("jsf_{label}"), &coords, ["f_a", "f_b"], &c)?;
        (sel.selected.iter().map(|&i| smooth[i]).collect(), check)
    } else {
        (Vec::new(), None)
    };
    Ok(JsfReport {
        data: label.to_string(),
        singular_values: set.singular_values[..cfg.jsf.count].to_vec(),
        max_energies: set.max_energies(),
        smooth_count: count,
        gap_ratio: ratio,
        smooth,
        selected,
        one_to_one,
    })
}

impl Experiment for JsfVariants {
    fn name(&self) -> &'static str {
        "jsf_variants"
    }

    fn run(&self, cfg: &ExperimentConfig, sim: &Simulation, out: &mut Artifacts) -> Result<ExperimentReport> {
        let mut report = ExperimentReport::new(cfg, sim);
        for (label, variant) in [("base", "base"), ("setup1", "causality1")] {
            let vcfg = ExperimentConfig {
                experiment: variant.to_string(),
                ..cfg.clone()
            };
            let (_, streams) = setup(&vcfg, sim)?;
            let r = jsf_analysis(&vcfg, label, &streams, out)?;
            if let Some(c) = &r.one_to_one {
                report.one_to_one.push(c.clone());
            }
            report.jsf.push(r);
        }
        Ok(report)
    }
}

/// Simulates, runs the named experiment and writes its artifacts (when a
/// directory is given), including `report.json`.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: Option<&Path>) -> Result<ExperimentReport> {
    cfg.validate()?;
    let sim = data::simulate(cfg)?;
    run_with_simulation(cfg, &sim, out_dir)
}

pub fn run_with_simulation(cfg: &ExperimentConfig, sim: &Simulation, out_dir: Option<&Path>) -> Result<ExperimentReport> {
    let exp = experiment_by_name(&cfg.experiment)?;
    let mut out = Artifacts::new(out_dir)?;
    out.json("config.json", cfg)?;
    let report = exp.run(cfg, sim, &mut out).stage(exp.name())?;
    finish(report, out)
}
