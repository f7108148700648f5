//! Simulation and channel layouts shared by the experiments.

use log::info;

use crate::dynamics::{self, DynamicalSystem, Forced, Lorenz, Oscillating, SystemId};
use crate::error::{Result, StageContext};
use crate::sensors::{self, ChannelSpec, SensorStream, TrajectorySet};

use super::config::{ExperimentConfig, MixedLayout};

/// Sampled trajectories of the three systems on a shared sample index.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub trajectories: TrajectorySet,
    pub period: f64,
    /// Time between samples of the surface-reaction systems.
    pub interval: f64,
}

/// Samples kept beyond `n_samples` so delayed and shifted channels can be
/// formed without running off either end.
fn margin(cfg: &ExperimentConfig, period: f64) -> usize {
    let shifts = [
        cfg.delta_t.unwrap_or(period / 4.0),
        cfg.tau.unwrap_or(250.0),
        250.0 + 100.0,
        period,
    ];
    let longest = shifts.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    (2.0 * longest / cfg.sample_interval).ceil() as usize + 8
}

pub fn simulate(cfg: &ExperimentConfig) -> Result<Simulation> {
    let period = match cfg.period {
        Some(p) => p,
        None => dynamics::oscillator_period(&cfg.oscillator, cfg.dt).stage("period estimate")?,
    };
    let len = cfg.n_samples + margin(cfg, period);
    let stride = cfg.stride();
    let interval = stride as f64 * cfg.dt;
    let burn = cfg.burn_in_periods * period;
    info!("period {period:.3}, sampling {len} points every {interval} time units");

    let mut trajectories = TrajectorySet::new();
    let surface: [(SystemId, Box<dyn DynamicalSystem>); 2] = [
        (SystemId::X, Box::new(Oscillating(cfg.oscillator))),
        (SystemId::Y, Box::new(Forced(cfg.forcing))),
    ];
    let burn_steps = (burn / cfg.dt).round();
    for (id, sys) in surface {
        let t_end = (burn_steps + (len * stride) as f64) * cfg.dt;
        let traj = dynamics::integrate_system(sys.as_ref(), &sys.initial_state(), t_end, cfg.dt)
            .stage(&format!("integrate {id}"))?;
        let sampled = dynamics::sample(&traj, burn_steps * cfg.dt, stride, len).stage(&format!("sample {id}"))?;
        trajectories.insert(id, sampled);
    }

    let lz = Lorenz(cfg.lorenz);
    let lstride = cfg.lorenz_stride();
    let lburn = (cfg.lorenz_burn_in / cfg.lorenz_dt).round();
    let t_end = (lburn + (len * lstride) as f64) * cfg.lorenz_dt;
    let traj = dynamics::integrate_system(&lz, &lz.initial_state(), t_end, cfg.lorenz_dt).stage("integrate Z")?;
    let sampled = dynamics::sample(&traj, lburn * cfg.lorenz_dt, lstride, len).stage("sample Z")?;
    trajectories.insert(SystemId::Z, sampled);

    Ok(Simulation {
        trajectories,
        period,
        interval,
    })
}

/// Channel lists for both sensors plus the reference variables an
/// experiment is scored against.
#[derive(Debug, Clone)]
pub struct Layout {
    pub sensors: [Vec<ChannelSpec>; 2],
    /// The common system's state at the present time.
    pub common_truth: Vec<ChannelSpec>,
    /// Variables of each sensor's extraneous system as that sensor sees them.
    pub specific_truth: [Vec<ChannelSpec>; 2],
    /// Clean channels underlying mixed sensors (same as `sensors` otherwise).
    pub clean: [Vec<ChannelSpec>; 2],
    pub mixed: bool,
}

fn ch(source: SystemId, variable: usize, offset: i64) -> ChannelSpec {
    ChannelSpec::new(source, variable, offset)
}

const A: usize = 0;
const B: usize = 1;
const LORENZ_Y: usize = 1;

/// Delay-embedded base layout: sensor 1 sees species A of the common and
/// forced systems, sensor 2 sees species B of the common system and the
/// Lorenz `y` variable; every channel is paired with a delayed copy.
fn base_layout(delay: i64) -> Layout {
    let s1 = vec![ch(SystemId::X, A, 0), ch(SystemId::Y, A, 0), ch(SystemId::X, A, -delay), ch(SystemId::Y, A, -delay)];
    let s2 = vec![
        ch(SystemId::X, B, 0),
        ch(SystemId::Z, LORENZ_Y, 0),
        ch(SystemId::X, B, -delay),
        ch(SystemId::Z, LORENZ_Y, -delay),
    ];
    Layout {
        clean: [s1.clone(), s2.clone()],
        sensors: [s1, s2],
        common_truth: vec![ch(SystemId::X, A, 0), ch(SystemId::X, B, 0)],
        specific_truth: [
            vec![ch(SystemId::Y, A, 0), ch(SystemId::Y, A, -delay)],
            vec![ch(SystemId::Z, LORENZ_Y, 0), ch(SystemId::Z, LORENZ_Y, -delay)],
        ],
        mixed: false,
    }
}

/// Full-state layout: sensor 1 sees both species of the common and forced
/// systems now, sensor 2 sees both species of the common system and Lorenz
/// `x, y`, all `shift` samples in the future.
fn state_layout(shift: i64) -> Layout {
    let s1 = vec![ch(SystemId::X, A, 0), ch(SystemId::X, B, 0), ch(SystemId::Y, A, 0), ch(SystemId::Y, B, 0)];
    let s2 = vec![ch(SystemId::X, A, shift), ch(SystemId::X, B, shift), ch(SystemId::Z, 0, shift), ch(SystemId::Z, 1, shift)];
    Layout {
        clean: [s1.clone(), s2.clone()],
        sensors: [s1, s2],
        common_truth: vec![ch(SystemId::X, A, 0), ch(SystemId::X, B, 0)],
        specific_truth: [
            vec![ch(SystemId::Y, A, 0), ch(SystemId::Y, B, 0)],
            vec![ch(SystemId::Z, 0, shift), ch(SystemId::Z, 1, shift)],
        ],
        mixed: false,
    }
}

/// Delayed species A for sensor 1; sensor 2 sees species B of the common
/// system and Lorenz `y`, shifted into the future, with delayed copies.
fn shifted_delay_layout(delay: i64, shift: i64) -> Layout {
    let s1 = vec![ch(SystemId::X, A, 0), ch(SystemId::Y, A, 0), ch(SystemId::X, A, -delay), ch(SystemId::Y, A, -delay)];
    let s2 = vec![
        ch(SystemId::X, B, shift),
        ch(SystemId::Z, LORENZ_Y, shift),
        ch(SystemId::X, B, shift - delay),
        ch(SystemId::Z, LORENZ_Y, shift - delay),
    ];
    Layout {
        clean: [s1.clone(), s2.clone()],
        sensors: [s1, s2],
        common_truth: vec![ch(SystemId::X, A, 0), ch(SystemId::X, B, 0)],
        specific_truth: [
            vec![ch(SystemId::Y, A, 0), ch(SystemId::Y, A, -delay)],
            vec![ch(SystemId::Z, LORENZ_Y, shift), ch(SystemId::Z, LORENZ_Y, shift - delay)],
        ],
        mixed: false,
    }
}

/// Resolved delay and shift, in samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Offsets {
    pub delay: i64,
    pub shift: i64,
}

pub fn offsets(cfg: &ExperimentConfig, period: f64) -> Offsets {
    let (delta, tau) = match cfg.experiment.as_str() {
        "causality2" => (cfg.delta_t.unwrap_or(100.0), cfg.tau.unwrap_or(250.0)),
        "mixed" | "causality1" => (cfg.delta_t.unwrap_or(period / 4.0), cfg.tau.unwrap_or(200.0)),
        _ => (cfg.delta_t.unwrap_or(period / 4.0), cfg.tau.unwrap_or(0.0)),
    };
    Offsets {
        delay: cfg.to_samples(delta),
        shift: cfg.to_samples(tau),
    }
}

pub fn layout(cfg: &ExperimentConfig, period: f64) -> Layout {
    let o = offsets(cfg, period);
    match cfg.experiment.as_str() {
        "mixed" => {
            let mut l = match cfg.mixed_layout {
                MixedLayout::States => state_layout(o.shift),
                MixedLayout::Base => base_layout(o.delay),
            };
            l.mixed = true;
            l
        }
        "causality1" => state_layout(o.shift),
        "causality2" => shifted_delay_layout(o.delay, o.shift),
        _ => base_layout(o.delay),
    }
}

/// Streams of one experiment, all on the same rows.
#[derive(Debug, Clone)]
pub struct Streams {
    /// What each sensor reports (mixed when the layout says so).
    pub sensors: [SensorStream; 2],
    /// The clean channels behind each sensor.
    pub clean: [SensorStream; 2],
    pub common_truth: SensorStream,
    pub specific_truth: [SensorStream; 2],
}

pub fn assemble_streams(cfg: &ExperimentConfig, sim: &Simulation, layout: &Layout) -> Result<Streams> {
    let lists = vec![
        layout.clean[0].clone(),
        layout.clean[1].clone(),
        layout.common_truth.clone(),
        layout.specific_truth[0].clone(),
        layout.specific_truth[1].clone(),
    ];
    let all = sensors::assemble_aligned(&sim.trajectories, &lists).stage("assemble")?;
    let n = cfg.n_samples;
    let mut it = all.into_iter().map(|s| s.head(n));
    let mut next = || it.next().expect("five streams requested").stage("assemble");
    let clean = [next()?, next()?];
    let common_truth = next()?;
    let specific_truth = [next()?, next()?];
    let sensors = if layout.mixed {
        let m = cfg.mixing_matrices();
        [
            sensors::apply_mixing(&clean[0], &m[0]).stage("mix sensor 1")?,
            sensors::apply_mixing(&clean[1], &m[1]).stage("mix sensor 2")?,
        ]
    } else {
        clean.clone()
    };
    Ok(Streams {
        sensors,
        clean,
        common_truth,
        specific_truth,
    })
}
