use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;

use mfz_core::embeddings;
use mfz_core::pipeline::experiments::{self, Artifacts};
use mfz_core::pipeline::{self, data, ExperimentConfig};
use mfz_core::selection;

#[derive(Parser)]
#[command(name = "mfz", version, about = "Common-variable discovery across two sensors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the three systems and write sampled trajectories.
    Simulate(Common),
    /// Build the sensor streams of an experiment.
    Assemble(Common),
    /// Compute a common embedding of the two sensors.
    Embed {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "alternating")]
        method: String,
    },
    /// Jointly smooth functions with the smoothness split.
    Jsf(Common),
    /// Parsimonious eigenvector selection and channel classification.
    Select(Common),
    /// Fit the regressors on the cross-sensor task.
    Learn(Common),
    /// Run one named experiment end to end.
    Run(Common),
    /// Run every experiment and check the acceptance criteria.
    Reproduce {
        #[command(flatten)]
        common: Common,
        /// Run experiments on separate threads.
        #[arg(long)]
        parallel: bool,
    },
}

#[derive(Args)]
struct Common {
    /// JSON configuration; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    experiment: Option<String>,
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(e) = &self.experiment {
            cfg.experiment = e.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn print_json<T: serde::Serialize>(v: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn setup(c: &Common) -> Result<(ExperimentConfig, data::Simulation, data::Streams, Artifacts)> {
    let cfg = c.config()?;
    let sim = data::simulate(&cfg)?;
    let layout = data::layout(&cfg, sim.period);
    let streams = data::assemble_streams(&cfg, &sim, &layout)?;
    let mut out = Artifacts::new(Some(&c.out))?;
    out.json("config.json", &cfg)?;
    Ok((cfg, sim, streams, out))
}

fn simulate(c: &Common) -> Result<()> {
    let cfg = c.config()?;
    let sim = data::simulate(&cfg)?;
    std::fs::create_dir_all(&c.out).with_context(|| format!("creating {}", c.out.display()))?;
    for (id, traj) in &sim.trajectories {
        traj.write_csv(&c.out.join(format!("trajectory_{id}.csv")))?;
    }
    print_json(&serde_json::json!({
        "period": sim.period,
        "sample_interval": sim.interval,
        "samples": sim.trajectories.values().next().map_or(0, |t| t.len()),
    }))
}

fn assemble(c: &Common) -> Result<()> {
    let (_, _, streams, mut out) = setup(c)?;
    out.stream(&streams.sensors[0], "sensor1")?;
    out.stream(&streams.sensors[1], "sensor2")?;
    out.stream(&streams.common_truth, "common_state")?;
    out.stream(&streams.specific_truth[0], "specific_state1")?;
    out.stream(&streams.specific_truth[1], "specific_state2")?;
    print_files(out.into_files())
}

fn print_files(files: Vec<PathBuf>) -> Result<()> {
    print_json(&serde_json::json!({ "files": files }))
}

fn embed(c: &Common, method: &str) -> Result<()> {
    let (cfg, _, streams, mut out) = setup(c)?;
    let prepared = experiments::prepare(&cfg, &streams)?;
    let embedder = embeddings::embedder_by_name(method)?;
    let e = embedder.embed(&[&prepared[0].data, &prepared[1].data], &experiments::common_params(&cfg))?;
    out.embedding(&e, &format!("{method}_embedding"))?;
    print_json(&serde_json::json!({ "eigenvalues": e.eigenvalues, "files": out.into_files() }))
}

fn jsf(c: &Common) -> Result<()> {
    let (cfg, _, streams, mut out) = setup(c)?;
    let r = experiments::jsf_analysis(&cfg, &cfg.experiment, &streams, &mut out)?;
    out.json("jsf_report.json", &r)?;
    print_json(&r)
}

fn select(c: &Common) -> Result<()> {
    let (cfg, _, streams, mut out) = setup(c)?;
    let stage = experiments::common_stage(&cfg, &streams)?;
    let coords = stage.embedding.coords(&stage.selection.selected);
    let mut verdicts = Vec::new();
    for s in &streams.sensors {
        verdicts.push(selection::channel_identifiability(
            &s.data,
            &s.labels(),
            &coords,
            cfg.channel_threshold,
            &cfg.selection.llr,
        )?);
    }
    let result = serde_json::json!({
        "eigenvalues": stage.embedding.eigenvalues,
        "selected": stage.selection.selected,
        "llr": stage.selection.report,
        "channels": verdicts,
    });
    out.json("selection.json", &result)?;
    print_json(&result)
}

fn learn(c: &Common) -> Result<()> {
    let (cfg, _, streams, mut out) = setup(c)?;
    let r = experiments::regression_task(&cfg, &streams, &mut out)?;
    out.json("regression.json", &r)?;
    print_json(&r)
}

fn run(c: &Common) -> Result<()> {
    let cfg = c.config()?;
    let r = pipeline::run_experiment(&cfg, Some(&c.out))?;
    for row in pipeline::check_report(&r) {
        println!("{}", row.line());
    }
    println!("report: {}", c.out.join("report.json").display());
    Ok(())
}

fn reproduce(c: &Common, parallel: bool) -> Result<bool> {
    let cfg = c.config()?;
    let summary = pipeline::reproduce_all(&cfg, Path::new(&c.out), parallel)?;
    for row in &summary.rows {
        println!("{}", row.line());
    }
    for (name, err) in &summary.failures {
        println!("{name}: ERROR {err}");
    }
    info!("summary written to {}", c.out.display());
    Ok(summary.passed())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(c) => simulate(c).map(|_| true),
        Command::Assemble(c) => assemble(c).map(|_| true),
        Command::Embed { common, method } => embed(common, method).map(|_| true),
        Command::Jsf(c) => jsf(c).map(|_| true),
        Command::Select(c) => select(c).map(|_| true),
        Command::Learn(c) => learn(c).map(|_| true),
        Command::Run(c) => run(c).map(|_| true),
        Command::Reproduce { common, parallel } => reproduce(common, *parallel),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
