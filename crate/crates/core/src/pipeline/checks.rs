//! Acceptance checks over experiment reports, and the full reproduction run.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::embeddings::{alternating_operator, diffusion_maps, AlternatingOptions};
use crate::error::{Error, Result};
use crate::kernels::{self, KernelMatrix};
use crate::linalg::{self, Matrix};
use crate::regression::{self, MlpModel};
use crate::selection::ChannelClass;

use super::config::{ExperimentConfig, EXPERIMENTS};
use super::data;
use super::experiments::{run_with_simulation, ExperimentReport};

pub const ONE_TO_ONE_TOL: f64 = 5e-2;
pub const CHANNEL_SEPARATION: f64 = 0.4;
pub const KNN_BAND: (f64, f64) = (3e-2, 3e-1);
pub const GH_BAND: (f64, f64) = (3e-3, 6e-2);
pub const MLP_MAX: f64 = 1e-2;
pub const GH_REFERENCE: f64 = 1.3e-2;
pub const KNN_REFERENCE: f64 = 9.6e-2;
pub const MLP_REFERENCE: f64 = 3.8e-4;
pub const JSF_GAP: f64 = 5.0;
pub const JSF_COUNT: (usize, usize) = (5, 9);
pub const CAUSALITY_TOL: f64 = 5e-2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub criterion: u32,
    pub experiment: String,
    pub quantity: String,
    pub value: String,
    pub expected: String,
    pub pass: bool,
}

impl CheckRow {
    fn new(criterion: u32, experiment: &str, quantity: &str, value: String, expected: String, pass: bool) -> Self {
        Self {
            criterion,
            experiment: experiment.to_string(),
            quantity: quantity.to_string(),
            value,
            expected,
            pass,
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{}: {}={} (expected {}) {}",
            self.experiment,
            self.quantity,
            self.value,
            self.expected,
            if self.pass { "PASS" } else { "FAIL" }
        )
    }
}

fn num(v: f64) -> String {
    format!("{v:e}")
}

fn missing(criterion: u32, experiment: &str, quantity: &str, why: &str) -> CheckRow {
    CheckRow::new(criterion, experiment, quantity, format!("missing ({why})"), "present".into(), false)
}

fn one_to_one_row(criterion: u32, experiment: &str, c: Option<&super::experiments::OneToOne>, quantity: &str) -> CheckRow {
    match c {
        Some(c) => CheckRow::new(
            criterion,
            experiment,
            quantity,
            num(c.worst()),
            format!("< {}", num(ONE_TO_ONE_TOL)),
            c.worst() < ONE_TO_ONE_TOL,
        ),
        None => missing(criterion, experiment, quantity, "no pair to check"),
    }
}

pub fn check_parsimonious(r: &ExperimentReport, criterion: u32) -> Vec<CheckRow> {
    let dim = r.selected.len();
    vec![CheckRow::new(
        criterion,
        &r.experiment,
        "parsimonious_dim",
        dim.to_string(),
        "2".into(),
        dim == 2,
    )]
}

/// Channels 1 and 3 of each sensor are common, 2 and 4 sensor specific,
/// and the residual populations are separated.
pub fn check_channels(r: &ExperimentReport) -> Vec<CheckRow> {
    let mut rows = Vec::new();
    let mut common = Vec::new();
    let mut specific = Vec::new();
    for s in &r.channels {
        let classes: Vec<ChannelClass> = s.verdicts.iter().map(|v| v.class).collect();
        let want: Vec<ChannelClass> = (0..classes.len())
            .map(|j| if j % 2 == 0 { ChannelClass::Common } else { ChannelClass::SensorSpecific })
            .collect();
        rows.push(CheckRow::new(
            2,
            &r.experiment,
            &format!("sensor{}_classes", s.sensor),
            format!("{classes:?}"),
            format!("{want:?}"),
            classes == want,
        ));
        for (j, v) in s.verdicts.iter().enumerate() {
            if j % 2 == 0 { &mut common } else { &mut specific }.push(v.residual);
        }
    }
    let gap = specific.iter().copied().fold(f64::INFINITY, f64::min) - common.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    rows.push(CheckRow::new(
        2,
        &r.experiment,
        "residual_separation",
        num(gap),
        format!(">= {CHANNEL_SEPARATION}"),
        gap >= CHANNEL_SEPARATION,
    ));
    rows
}

pub fn check_common_one_to_one(r: &ExperimentReport, criterion: u32) -> Vec<CheckRow> {
    vec![one_to_one_row(
        criterion,
        &r.experiment,
        r.one_to_one("embedding_vs_common_state"),
        "gh_two_way_relative_linf",
    )]
}

pub fn check_regression(r: &ExperimentReport) -> Vec<CheckRow> {
    let mut rows = Vec::new();
    let band = |name: &str, lo: f64, hi: f64| -> CheckRow {
        match r.method(name) {
            Some(m) => CheckRow::new(
                4,
                &r.experiment,
                &format!("{name}_error"),
                num(m.eq6_error),
                format!("in [{}, {}]", num(lo), num(hi)),
                m.eq6_error >= lo && m.eq6_error <= hi,
            ),
            None => missing(4, &r.experiment, &format!("{name}_error"), "method not run"),
        }
    };
    rows.push(band("knn", KNN_BAND.0, KNN_BAND.1));
    rows.push(band("gh", GH_BAND.0, GH_BAND.1));
    rows.push(match r.method("gh") {
        Some(m) => CheckRow::new(
            4,
            &r.experiment,
            "gh_error",
            num(m.eq6_error),
            format!("≤ 5×{}", num(GH_REFERENCE)),
            m.eq6_error <= 5.0 * GH_REFERENCE,
        ),
        None => missing(4, &r.experiment, "gh_error", "method not run"),
    });
    rows.push(match r.method("mlp") {
        Some(m) => CheckRow::new(
            4,
            &r.experiment,
            "mlp_error",
            num(m.eq6_error),
            format!("≤ {}", num(MLP_MAX)),
            m.eq6_error <= MLP_MAX,
        ),
        None => missing(4, &r.experiment, "mlp_error", "method not run"),
    });
    rows
}

pub fn check_jsf(r: &ExperimentReport) -> Vec<CheckRow> {
    let Some(j) = r.jsf.iter().find(|j| j.data == "base") else {
        return vec![missing(5, &r.experiment, "jsf", "no base analysis")];
    };
    vec![
        CheckRow::new(5, &r.experiment, "jsf_gap_ratio", num(j.gap_ratio), format!(">= {JSF_GAP}"), j.gap_ratio >= JSF_GAP),
        CheckRow::new(
            5,
            &r.experiment,
            "jsf_smooth_count",
            j.smooth_count.to_string(),
            format!("{}..={}", JSF_COUNT.0, JSF_COUNT.1),
            (JSF_COUNT.0..=JSF_COUNT.1).contains(&j.smooth_count),
        ),
        CheckRow::new(
            5,
            &r.experiment,
            "jsf_selected",
            j.selected.len().to_string(),
            "2".into(),
            j.selected.len() == 2,
        ),
        one_to_one_row(5, &r.experiment, j.one_to_one.as_ref(), "jsf_gh_two_way_relative_linf"),
    ]
}

pub fn check_mixed(r: &ExperimentReport) -> Vec<CheckRow> {
    let mut rows = check_parsimonious(r, 6);
    rows.extend(check_common_one_to_one(r, 6));
    let classes: Vec<ChannelClass> = r.channels.iter().flat_map(|s| s.verdicts.iter().map(|v| v.class)).collect();
    let all_specific = !classes.is_empty() && classes.iter().all(|c| *c == ChannelClass::SensorSpecific);
    let n_common = classes.iter().filter(|c| **c == ChannelClass::Common).count();
    rows.push(CheckRow::new(
        6,
        &r.experiment,
        "mixed_channels_common",
        n_common.to_string(),
        "0".into(),
        all_specific,
    ));
    rows
}

pub fn check_output_informed(r: &ExperimentReport) -> Vec<CheckRow> {
    let Some(o) = &r.output_informed else {
        return vec![missing(7, &r.experiment, "output_informed", "no report")];
    };
    vec![
        CheckRow::new(
            7,
            &r.experiment,
            "unique_eigenvectors",
            o.selected.len().to_string(),
            "4".into(),
            o.selected.len() == 4,
        ),
        one_to_one_row(7, &r.experiment, o.common_pair.as_ref(), "common_pair_relative_linf"),
        one_to_one_row(7, &r.experiment, o.specific_pair.as_ref(), "specific_pair_relative_linf"),
    ]
}

pub fn check_causality(r: &ExperimentReport) -> Vec<CheckRow> {
    match &r.causality {
        Some(c) => vec![CheckRow::new(
            8,
            &r.experiment,
            "knn_shift_relative_linf",
            num(c.relative_linf),
            format!("< {}", num(CAUSALITY_TOL)),
            c.relative_linf < CAUSALITY_TOL,
        )],
        None => vec![missing(8, &r.experiment, "knn_shift_relative_linf", "no causality report")],
    }
}

/// Rows for every criterion that `r` speaks to.
pub fn check_report(r: &ExperimentReport) -> Vec<CheckRow> {
    match r.experiment.as_str() {
        "base" => {
            let mut rows = check_parsimonious(r, 1);
            rows.extend(check_channels(r));
            rows.extend(check_common_one_to_one(r, 3));
            rows.extend(check_regression(r));
            rows
        }
        "jsf_variants" => check_jsf(r),
        "mixed" => check_mixed(r),
        "output_informed_s1" | "output_informed_s2" => check_output_informed(r),
        "causality1" | "causality2" => check_causality(r),
        _ => Vec::new(),
    }
}

fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            worst = worst.max((a[(i, j)] - b[(i, j)]).abs());
        }
    }
    worst
}

fn arc(n: usize, phase: f64) -> Matrix {
    Matrix::from_fn(n, 2, |i, j| {
        let t = phase + 2.5 * i as f64 / n as f64;
        if j == 0 {
            t.cos()
        } else {
            t.sin()
        }
    })
}

/// Small numerical self-checks of the building blocks.
pub fn numerical_oracles() -> Result<Vec<CheckRow>> {
    let mut rows = Vec::new();
    let mut push = |q: &str, v: f64, tol: f64| {
        rows.push(CheckRow::new(9, "oracles", q, num(v), format!("<= {}", num(tol)), v <= tol));
    };

    let x = arc(60, 0.1);
    let k = kernels::gaussian_affinity(&x, 0.4)?;
    let asym = max_abs_diff(&k.w, &k.w.transpose().to_owned());
    push("kernel_asymmetry", asym, 0.0);
    let p = kernels::column_normalize(&k)?;
    let colsum = (0..p.p.ncols())
        .map(|j| (p.p.col_as_slice(j).iter().sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max);
    push("column_sum_deviation", colsum, 1e-12);

    // identical sensors: alternating spectrum is the squared diffusion spectrum
    let ad = crate::embeddings::alternating_diffusion(&p, &p, 6, &AlternatingOptions::default())?;
    let dm = diffusion_maps(&p, 6)?;
    let squared_gap = ad
        .eigenvalues
        .iter()
        .zip(&dm.eigenvalues)
        .map(|(a, d)| (a - d * d).abs())
        .fold(0.0, f64::max);
    push("identical_sensor_spectrum", squared_gap, 1e-8);

    // 3x3 product against explicit sums
    let w1 = linalg::from_rows(3, 3, &[1.0, 0.5, 0.2, 0.5, 1.0, 0.4, 0.2, 0.4, 1.0])?;
    let w2 = linalg::from_rows(3, 3, &[1.0, 0.1, 0.7, 0.1, 1.0, 0.3, 0.7, 0.3, 1.0])?;
    let p1 = kernels::column_normalize(&KernelMatrix { w: w1.clone(), bandwidth: 1.0 })?;
    let p2 = kernels::column_normalize(&KernelMatrix { w: w2.clone(), bandwidth: 1.0 })?;
    let prod = alternating_operator(&p1, &p2)?;
    let col = |w: &Matrix, i: usize, j: usize| w[(i, j)] / (0..3).map(|r| w[(r, j)]).sum::<f64>();
    let brute = Matrix::from_fn(3, 3, |i, j| (0..3).map(|m| col(&w2, i, m) * col(&w1, m, j)).sum());
    push("alternating_3x3_deviation", max_abs_diff(&prod, &brute), 1e-12);

    // Nystrom restriction
    let f = Matrix::from_fn(60, 1, |i, _| (3.0 * x[(i, 0)]).sin());
    let gh = regression::gh_fit(&x, &f, 12, 0.5, 1e-8)?;
    let restr = max_abs_diff(&gh.predict(&x)?, &gh.training_projection());
    push("nystrom_restriction", restr, 1e-8);

    // MLP gradient against central differences
    let model = MlpModel::init(&[2, 10, 10, 1], (0.125, 1.0 / 3.0), 7);
    let xs: Vec<Vec<f64>> = (0..5).map(|i| vec![0.3 * i as f64 - 0.6, (i as f64).sin()]).collect();
    let ys: Vec<Vec<f64>> = (0..5).map(|i| vec![(0.7 * i as f64).cos()]).collect();
    let alphas = model.inference_alphas();
    let (_, grad) = model.loss_and_gradient(&xs, &ys, &alphas);
    let theta = model.params();
    let mut worst: f64 = 0.0;
    let h = 1e-6;
    let mut m = model.clone();
    for i in 0..theta.len() {
        let mut t = theta.clone();
        t[i] += h;
        m.set_params(&t);
        let lp = m.loss_and_gradient(&xs, &ys, &alphas).0;
        t[i] -= 2.0 * h;
        m.set_params(&t);
        let lm = m.loss_and_gradient(&xs, &ys, &alphas).0;
        let fd = (lp - lm) / (2.0 * h);
        worst = worst.max((fd - grad[i]).abs() / grad[i].abs().max(fd.abs()).max(1e-8));
    }
    push("mlp_gradient_relative", worst, 1e-4);

    // RK4 on the harmonic oscillator over one period
    let osc = |_t: f64, s: &[f64], out: &mut [f64]| {
        out[0] = s[1];
        out[1] = -s[0];
    };
    let two_pi = 2.0 * std::f64::consts::PI;
    let err = |dt: f64| -> Result<f64> {
        let tr = crate::dynamics::integrate(osc, &[1.0, 0.0], 0.0, two_pi, dt)?;
        let end = tr.last().ok_or(Error::InsufficientData { needed: 1, available: 0 })?;
        Ok(((end[0] - 1.0).powi(2) + end[1].powi(2)).sqrt())
    };
    let (e1, e2) = (err(0.01)?, err(0.005)?);
    push("rk4_period_error", e1, 1e-6);
    let ratio = e1 / e2;
    rows.push(CheckRow::new(
        9,
        "oracles",
        "rk4_halving_ratio",
        num(ratio),
        "in [12, 20]".into(),
        (12.0..=20.0).contains(&ratio),
    ));
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub seed: u64,
    pub rows: Vec<CheckRow>,
    pub failures: BTreeMap<String, String>,
    pub reference: BTreeMap<String, f64>,
}

impl Summary {
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.rows.iter().all(|r| r.pass)
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# Reproduction summary\n");
        let _ = writeln!(s, "seed: {}\n", self.seed);
        let _ = writeln!(s, "| criterion | check | result |");
        let _ = writeln!(s, "|---|---|---|");
        for r in &self.rows {
            let _ = writeln!(s, "| {} | {} | {} |", r.criterion, r.line(), if r.pass { "PASS" } else { "FAIL" });
        }
        if !self.failures.is_empty() {
            let _ = writeln!(s, "\n## Failed experiments\n");
            for (k, v) in &self.failures {
                let _ = writeln!(s, "- {k}: {v}");
            }
        }
        let _ = writeln!(s, "\n## Reference values\n");
        for (k, v) in &self.reference {
            let _ = writeln!(s, "- {k}: {v:e}");
        }
        let _ = writeln!(s, "\noverall: {}", if self.passed() { "PASS" } else { "FAIL" });
        s
    }
}

fn reference_values() -> BTreeMap<String, f64> {
    BTreeMap::from([
        ("knn_error".to_string(), KNN_REFERENCE),
        ("gh_error".to_string(), GH_REFERENCE),
        ("mlp_error".to_string(), MLP_REFERENCE),
        ("parsimonious_dim".to_string(), 2.0),
        ("jsf_smooth_count".to_string(), 7.0),
    ])
}

/// Runs every experiment under `base` (with its experiment name replaced),
/// each into its own subdirectory, and writes `summary.json` and
/// `summary.md`. Experiment errors are recorded, not propagated.
pub fn reproduce_all(base: &ExperimentConfig, out_dir: &Path, parallel: bool) -> Result<Summary> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let sim = data::simulate(base)?;
    let run_one = |name: &str| -> (String, Result<ExperimentReport>) {
        let cfg = ExperimentConfig {
            experiment: name.to_string(),
            ..base.clone()
        };
        info!("running {name}");
        (name.to_string(), run_with_simulation(&cfg, &sim, Some(&out_dir.join(name))))
    };
    let results: Vec<(String, Result<ExperimentReport>)> = if parallel {
        std::thread::scope(|s| {
            let handles: Vec<_> = EXPERIMENTS.iter().map(|n| s.spawn(|| run_one(n))).collect();
            handles.into_iter().map(|h| h.join().expect("experiment thread panicked")).collect()
        })
    } else {
        EXPERIMENTS.iter().map(|n| run_one(n)).collect()
    };

    let mut rows = Vec::new();
    let mut failures = BTreeMap::new();
    for (name, res) in results {
        match res {
            Ok(r) => rows.extend(check_report(&r)),
            Err(e) => {
                warn!("{name} failed: {e}");
                failures.insert(name, e.to_string());
            }
        }
    }
    match numerical_oracles() {
        Ok(r) => rows.extend(r),
        Err(e) => {
            failures.insert("oracles".into(), e.to_string());
        }
    }
    rows.sort_by_key(|r| r.criterion);
    let summary = Summary {
        seed: base.seed,
        rows,
        failures,
        reference: reference_values(),
    };
    let json = out_dir.join("summary.json");
    std::fs::write(&json, serde_json::to_string_pretty(&summary)?).map_err(|e| Error::io(&json, e))?;
    let md = out_dir.join("summary.md");
    std::fs::write(&md, summary.to_markdown()).map_err(|e| Error::io(&md, e))?;
    Ok(summary)
}
