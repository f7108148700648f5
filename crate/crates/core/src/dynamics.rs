//! ODE models and fixed-step integration.
//!
//! Three systems are provided: an autonomous surface-reaction model with a
//! limit cycle (`X`), the same model with a periodically forced adsorption
//! rate (`Y`, quasiperiodic) and the Lorenz system (`Z`, chaotic).

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TakoudisParams {
    pub gamma1: f64,
    pub gamma2: f64,
    pub alpha1: f64,
    pub alpha2: f64,
}

impl Default for TakoudisParams {
    fn default() -> Self {
        Self {
            gamma1: 0.001,
            gamma2: 0.002,
            alpha1: 0.016,
            alpha2: 0.0278,
        }
    }
}

impl TakoudisParams {
    pub fn validate(&self) -> Result<()> {
        let all = [self.gamma1, self.gamma2, self.alpha1, self.alpha2];
        if all.iter().all(|v| *v > 0.0 && v.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "rate constants must be positive: {self:?}"
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForcingParams {
    pub alpha1: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    #[serde(rename = "A0")]
    pub a0: f64,
    #[serde(rename = "A")]
    pub a: f64,
    pub omega: f64,
}

impl Default for ForcingParams {
    fn default() -> Self {
        Self {
            alpha1: 0.019,
            gamma1: 0.001,
            gamma2: 0.002,
            a0: 0.028,
            a: 0.002097,
            omega: 0.01722,
        }
    }
}

impl ForcingParams {
    pub fn validate(&self) -> Result<()> {
        let rates = [self.alpha1, self.gamma1, self.gamma2];
        if !rates.iter().all(|v| *v > 0.0) || !(self.a0 > self.a && self.a >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "forcing parameters must satisfy positive rates and A0 > A >= 0: {self:?}"
            )));
        }
        Ok(())
    }

    /// Effective adsorption rate of species B at time `t`.
    pub fn alpha2_at(&self, t: f64) -> f64 {
        self.a0 + self.a * (self.omega * t).cos()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LorenzParams {
    pub sigma: f64,
    pub beta: f64,
    pub rho: f64,
}

impl Default for LorenzParams {
    fn default() -> Self {
        Self {
            sigma: 10.0,
            beta: 8.0 / 3.0,
            rho: 28.0,
        }
    }
}

impl LorenzParams {
    pub fn validate(&self) -> Result<()> {
        if [self.sigma, self.beta, self.rho].iter().all(|v| *v > 0.0) {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "Lorenz parameters must be positive: {self:?}"
            )))
        }
    }
}

pub fn takoudis_rhs(state: [f64; 2], p: &TakoudisParams) -> [f64; 2] {
    takoudis_with_alpha2(state, p.gamma1, p.gamma2, p.alpha1, p.alpha2)
}

pub fn forced_takoudis_rhs(state: [f64; 2], t: f64, p: &ForcingParams) -> [f64; 2] {
    takoudis_with_alpha2(state, p.gamma1, p.gamma2, p.alpha1, p.alpha2_at(t))
}

fn takoudis_with_alpha2(s: [f64; 2], g1: f64, g2: f64, a1: f64, a2: f64) -> [f64; 2] {
    let [ta, tb] = s;
    let vacant = 1.0 - ta - tb;
    let reaction = ta * tb * vacant * vacant;
    [
        a1 * vacant - g1 * ta - reaction,
        a2 * vacant - g2 * tb - reaction,
    ]
}

pub fn lorenz_rhs(state: [f64; 3], p: &LorenzParams) -> [f64; 3] {
    let [x, y, z] = state;
    [
        p.sigma * (y - x),
        x * (p.rho - z) - y,
        x * y - p.beta * z,
    ]
}

/// A named vector field with default integration settings.
pub trait DynamicalSystem: Send + Sync {
    fn name(&self) -> &'static str;
    fn dim(&self) -> usize;
    fn rhs(&self, t: f64, state: &[f64], out: &mut [f64]);
    fn initial_state(&self) -> Vec<f64>;
    fn default_dt(&self) -> f64;
    fn variable_names(&self) -> &'static [&'static str];
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Oscillating(pub TakoudisParams);

#[derive(Debug, Clone, Copy, Default)]
pub struct Forced(pub ForcingParams);

#[derive(Debug, Clone, Copy, Default)]
pub struct Lorenz(pub LorenzParams);

impl DynamicalSystem for Oscillating {
    fn name(&self) -> &'static str {
        "X"
    }
    fn dim(&self) -> usize {
        2
    }
    fn rhs(&self, _t: f64, s: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&takoudis_rhs([s[0], s[1]], &self.0));
    }
    fn initial_state(&self) -> Vec<f64> {
        vec![0.3, 0.3]
    }
    fn default_dt(&self) -> f64 {
        0.1
    }
    fn variable_names(&self) -> &'static [&'static str] {
        &["thetaA", "thetaB"]
    }
}

impl DynamicalSystem for Forced {
    fn name(&self) -> &'static str {
        "Y"
    }
    fn dim(&self) -> usize {
        2
    }
    fn rhs(&self, t: f64, s: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&forced_takoudis_rhs([s[0], s[1]], t, &self.0));
    }
    fn initial_state(&self) -> Vec<f64> {
        vec![0.3, 0.3]
    }
    fn default_dt(&self) -> f64 {
        0.1
    }
    fn variable_names(&self) -> &'static [&'static str] {
        &["thetaA", "thetaB"]
    }
}

impl DynamicalSystem for Lorenz {
    fn name(&self) -> &'static str {
        "Z"
    }
    fn dim(&self) -> usize {
        3
    }
    fn rhs(&self, _t: f64, s: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&lorenz_rhs([s[0], s[1], s[2]], &self.0));
    }
    fn initial_state(&self) -> Vec<f64> {
        vec![1.0, 1.0, 1.0]
    }
    fn default_dt(&self) -> f64 {
        0.005
    }
    fn variable_names(&self) -> &'static [&'static str] {
        &["x", "y", "z"]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SystemId {
    X,
    Y,
    Z,
}

impl SystemId {
    pub const ALL: [SystemId; 3] = [SystemId::X, SystemId::Y, SystemId::Z];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "X" | "x" => Ok(SystemId::X),
            "Y" | "y" => Ok(SystemId::Y),
            "Z" | "z" => Ok(SystemId::Z),
            other => Err(Error::UnknownName {
                kind: "system",
                name: other.to_string(),
            }),
        }
    }

    /// The system with default parameters.
    pub fn system(self) -> Box<dyn DynamicalSystem> {
        match self {
            SystemId::X => Box::new(Oscillating::default()),
            SystemId::Y => Box::new(Forced::default()),
            SystemId::Z => Box::new(Lorenz::default()),
        }
    }
}

impl std::fmt::Display for SystemId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SystemId::X => "X",
            SystemId::Y => "Y",
            SystemId::Z => "Z",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub dt: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states.first().map_or(0, Vec::len)
    }

    pub fn component(&self, k: usize) -> Vec<f64> {
        self.states.iter().map(|s| s[k]).collect()
    }

    pub fn last(&self) -> Option<&[f64]> {
        self.states.last().map(Vec::as_slice)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for k in 0..self.dim() {
            let _ = write!(out, ",s{k}");
        }
        out.push('\n');
        for (t, s) in self.times.iter().zip(&self.states) {
            let _ = write!(out, "{t:.16e}");
            for v in s {
                let _ = write!(out, ",{v:.16e}");
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty file".into()))?;
        let ncols = header.split(',').count();
        if ncols < 2 || !header.starts_with('t') {
            return Err(Error::Parse(format!("bad trajectory header `{header}`")));
        }
        let mut times = Vec::new();
        let mut states = Vec::new();
        for (lineno, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let vals = line
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse(format!("row {}: {e}", lineno + 2)))?;
            if vals.len() != ncols {
                return Err(Error::DimensionMismatch {
                    expected: ncols,
                    actual: vals.len(),
                });
            }
            times.push(vals[0]);
            states.push(vals[1..].to_vec());
        }
        let dt = if times.len() > 1 { times[1] - times[0] } else { 0.0 };
        Ok(Self { times, states, dt })
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text)
    }
}

/// Classical fixed-step fourth-order Runge-Kutta integration from `t0` to
/// `t0 + t_end`.
///
/// The step is shrunk, if needed, to the largest value not exceeding `dt`
/// that divides `t_end` into whole steps, so the last state sits exactly at
/// `t0 + t_end`. The recorded `dt` is the step actually used.
pub fn integrate<F>(rhs: F, x0: &[f64], t0: f64, t_end: f64, dt: f64) -> Result<Trajectory>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    if !(dt > 0.0) || !(t_end > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "dt and t_end must be positive (dt = {dt}, t_end = {t_end})"
        )));
    }
    let steps = ((t_end / dt) - 1e-9).ceil().max(1.0) as usize;
    let dt = t_end / steps as f64;
    let dim = x0.len();
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut x = x0.to_vec();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; dim], vec![0.0; dim], vec![0.0; dim], vec![0.0; dim]);
    let mut tmp = vec![0.0; dim];
    times.push(t0);
    states.push(x.clone());
    for step in 1..=steps {
        let t = t0 + (step - 1) as f64 * dt;
        rhs(t, &x, &mut k1);
        for i in 0..dim {
            tmp[i] = x[i] + 0.5 * dt * k1[i];
        }
        rhs(t + 0.5 * dt, &tmp, &mut k2);
        for i in 0..dim {
            tmp[i] = x[i] + 0.5 * dt * k2[i];
        }
        rhs(t + 0.5 * dt, &tmp, &mut k3);
        for i in 0..dim {
            tmp[i] = x[i] + dt * k3[i];
        }
        rhs(t + dt, &tmp, &mut k4);
        for i in 0..dim {
            x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        let time = t0 + step as f64 * dt;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState { step, time });
        }
        times.push(time);
        states.push(x.clone());
    }
    Ok(Trajectory { times, states, dt })
}

pub fn integrate_system(
    system: &dyn DynamicalSystem,
    x0: &[f64],
    t_end: f64,
    dt: f64,
) -> Result<Trajectory> {
    if x0.len() != system.dim() {
        return Err(Error::DimensionMismatch {
            expected: system.dim(),
            actual: x0.len(),
        });
    }
    integrate(|t, s, out| system.rhs(t, s, out), x0, 0.0, t_end, dt)
}

/// Drops `burn_in` time units, then keeps every `stride`-th state until `n`
/// samples are collected.
pub fn sample(traj: &Trajectory, burn_in: f64, stride: usize, n: usize) -> Result<Trajectory> {
    if stride == 0 {
        return Err(Error::InvalidArgument("stride must be positive".into()));
    }
    let start = if burn_in <= 0.0 {
        0
    } else {
        (burn_in / traj.dt).round() as usize
    };
    let needed = if n == 0 { start } else { start + (n - 1) * stride + 1 };
    if needed > traj.len() {
        return Err(Error::InsufficientData {
            needed,
            available: traj.len(),
        });
    }
    let idx = (0..n).map(|k| start + k * stride);
    let (times, states) = idx.map(|i| (traj.times[i], traj.states[i].clone())).unzip();
    Ok(Trajectory {
        times,
        states,
        dt: traj.dt * stride as f64,
    })
}

/// Mean period of a scalar series, measured between successive upward
/// crossings of its mean (crossing times linearly interpolated).
pub fn estimate_period(values: &[f64], dt: f64) -> Option<f64> {
    if values.len() < 3 {
        return None;
    }
    let m = values.iter().sum::<f64>() / values.len() as f64;
    let crossings: Vec<f64> = values
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[0] < m && w[1] >= m)
        .map(|(i, w)| (i as f64 + (m - w[0]) / (w[1] - w[0])) * dt)
        .collect();
    if crossings.len() < 2 {
        return None;
    }
    let span = crossings[crossings.len() - 1] - crossings[0];
    Some(span / (crossings.len() - 1) as f64)
}

/// Integrates the limit-cycle system long enough to settle and returns its
/// measured period.
pub fn oscillator_period(p: &TakoudisParams, dt: f64) -> Result<f64> {
    let sys = Oscillating(*p);
    let traj = integrate_system(&sys, &sys.initial_state(), 20_000.0, dt)?;
    let tail = &traj.component(0)[traj.len() / 2..];
    estimate_period(tail, dt).ok_or(Error::InsufficientData {
        needed: 2,
        available: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oscillator(_t: f64, s: &[f64], out: &mut [f64]) {
        out[0] = s[1];
        out[1] = -s[0];
    }

    fn endpoint_error(dt: f64) -> f64 {
        let tr = integrate(oscillator, &[1.0, 0.0], 0.0, 1.0, dt).unwrap();
        let s = tr.last().unwrap();
        ((s[0] - 1f64.cos()).powi(2) + (s[1] + 1f64.sin()).powi(2)).sqrt()
    }

    #[test]
    fn vacancy_term_vanishes_on_full_coverage() {
        let p = TakoudisParams {
            gamma1: 0.0,
            gamma2: 0.0,
            alpha1: 0.3,
            alpha2: 0.7,
        };
        assert_eq!(takoudis_rhs([0.5, 0.5], &p), [0.0, 0.0]);
    }

    #[test]
    fn forcing_extremes() {
        let p = ForcingParams::default();
        assert_eq!(p.alpha2_at(0.0), p.a0 + p.a);
        let at_pi = p.alpha2_at(std::f64::consts::PI / p.omega);
        assert!((at_pi - (p.a0 - p.a)).abs() < 1e-15);
    }

    #[test]
    fn lorenz_hand_values() {
        let p = LorenzParams::default();
        assert_eq!(lorenz_rhs([0.0; 3], &p), [0.0; 3]);
        let v = lorenz_rhs([1.0, 1.0, 1.0], &p);
        assert_eq!(v[0], 0.0);
        assert_eq!(v[1], 26.0);
        assert!((v[2] + 5.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn harmonic_oscillator_full_period() {
        let two_pi = 2.0 * std::f64::consts::PI;
        let tr = integrate(oscillator, &[1.0, 0.0], 0.0, two_pi, 0.01).unwrap();
        let s = tr.last().unwrap();
        assert!((s[0] - 1.0).abs() < 1e-6 && s[1].abs() < 1e-6, "{s:?}");
    }

    #[test]
    fn fourth_order_convergence() {
        let ratio = endpoint_error(0.1) / endpoint_error(0.05);
        assert!((12.0..=20.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn zero_field_is_constant() {
        let tr = integrate(|_, _, o: &mut [f64]| o.fill(0.0), &[0.2, -3.0], 0.0, 5.0, 0.5).unwrap();
        assert!(tr.states.iter().all(|s| s == &[0.2, -3.0]));
        assert_eq!(tr.len(), 11);
    }

    #[test]
    fn blow_up_is_reported() {
        let err = integrate(|_, s, o: &mut [f64]| o[0] = s[0] * s[0], &[1.0], 0.0, 10.0, 0.5).unwrap_err();
        assert!(matches!(err, Error::NonFiniteState { .. }));
    }

    #[test]
    fn sample_identity_and_shortfall() {
        let tr = integrate(oscillator, &[1.0, 0.0], 0.0, 1.0, 0.1).unwrap();
        let same = sample(&tr, 0.0, 1, tr.len()).unwrap();
        assert_eq!(same.states, tr.states);
        let err = sample(&tr, 0.5, 2, 10).unwrap_err();
        assert!(matches!(err, Error::InsufficientData { .. }));
    }

    #[test]
    fn trajectory_csv_roundtrip() {
        let tr = integrate(oscillator, &[1.0, 0.0], 0.0, 1.0, 0.1).unwrap();
        let back = Trajectory::from_csv(&tr.to_csv()).unwrap();
        assert_eq!(back.states, tr.states);
        assert_eq!(back.times, tr.times);
        assert!(tr.to_csv().starts_with("t,s0,s1\n"));
    }

    #[test]
    fn parameter_validation() {
        assert!(TakoudisParams::default().validate().is_ok());
        assert!(ForcingParams { a: 0.1, ..Default::default() }.validate().is_err());
        assert!(LorenzParams { rho: -1.0, ..Default::default() }.validate().is_err());
    }
}
