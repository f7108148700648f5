//! End-to-end runs at reduced size: artifacts, determinism, degenerate
//! mixing and the reproduction summary.

use std::path::Path;

use mfz_core::pipeline::{
    self, experiment_by_name, run_experiment, run_with_simulation, ExperimentConfig, ExperimentReport, MixedLayout,
    MixingChoice, EXPERIMENTS,
};
use mfz_core::sensors::SensorStream;

fn small(name: &str) -> ExperimentConfig {
    ExperimentConfig {
        experiment: name.into(),
        n_samples: 300,
        plots: false,
        ..ExperimentConfig::default()
    }
}

fn read_report(dir: &Path) -> ExperimentReport {
    let text = std::fs::read_to_string(dir.join("report.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn registry_knows_every_experiment() {
    for name in EXPERIMENTS {
        assert_eq!(experiment_by_name(name).unwrap().name(), name);
    }
    assert!(experiment_by_name("nope").is_err());
    assert!(ExperimentConfig::named("nope").is_err());
}

#[test]
fn base_run_writes_a_readable_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        plots: true,
        ..small("base")
    };
    let report = run_experiment(&cfg, Some(dir.path())).unwrap();
    assert!(!report.files.is_empty());
    for f in &report.files {
        assert!(f.exists(), "missing {}", f.display());
    }
    assert!(report.files.iter().any(|f| f.extension().is_some_and(|e| e == "svg")));

    let back = read_report(dir.path());
    assert_eq!(back, report);
    let cfg_back = ExperimentConfig::load(&dir.path().join("config.json")).unwrap();
    assert_eq!(cfg_back, cfg);

    let s1 = SensorStream::read(dir.path(), "sensor1").unwrap();
    assert_eq!(s1.len(), cfg.n_samples);
    assert_eq!(s1.dim(), 4);
    assert_eq!(report.selected.first(), Some(&1));
    assert!(report.regression.is_some());
}

#[test]
fn reports_are_deterministic() {
    let cfg = small("base");
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let mut ra = run_experiment(&cfg, Some(a.path())).unwrap();
    let mut rb = run_experiment(&cfg, Some(b.path())).unwrap();
    ra.files.clear();
    rb.files.clear();
    assert_eq!(serde_json::to_string(&ra).unwrap(), serde_json::to_string(&rb).unwrap());
}

#[test]
fn identity_mixing_matches_base() {
    let base = small("base");
    let sim = pipeline::simulate(&base).unwrap();
    let rb = run_with_simulation(&base, &sim, None).unwrap();
    let mixed = ExperimentConfig {
        mixing: MixingChoice::Identity,
        mixed_layout: MixedLayout::Base,
        ..small("mixed")
    };
    let rm = run_with_simulation(&mixed, &sim, None).unwrap();
    assert_eq!(rb.selected, rm.selected);
    for (a, b) in rb.eigenvalues.iter().zip(&rm.eigenvalues) {
        assert!((a - b).abs() < 1e-8, "{a} vs {b}");
    }
    for (sa, sb) in rb.channels.iter().zip(&rm.channels) {
        for (ca, cb) in sa.verdicts.iter().zip(&sb.verdicts) {
            assert!((ca.residual - cb.residual).abs() < 1e-8);
            assert_eq!(ca.class, cb.class);
        }
    }
    let (ga, gb) = (
        rb.one_to_one("embedding_vs_common_state").unwrap(),
        rm.one_to_one("embedding_vs_common_state").unwrap(),
    );
    assert!((ga.worst() - gb.worst()).abs() < 1e-8);
}

#[test]
fn summary_is_byte_identical_across_runs() {
    let cfg = small("base");
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let sa = pipeline::reproduce_all(&cfg, a.path(), false).unwrap();
    let sb = pipeline::reproduce_all(&cfg, b.path(), true).unwrap();
    assert!(sa.failures.is_empty(), "{:?}", sa.failures);
    for name in ["summary.json", "summary.md"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert!(x == y, "{name} differs between runs");
    }
    assert_eq!(sa.rows.len(), sb.rows.len());
    assert!(sa.rows.iter().any(|r| r.line().starts_with("base: parsimonious_dim=")));
}
