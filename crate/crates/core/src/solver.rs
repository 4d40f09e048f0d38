//! Time integration of `u_tt - Lap u + u = f(u)` on the torus.
//!
//! One step is the symmetric composition
//! `linear(dt/2) . kick(dt) . linear(dt/2)`: the linear Klein-Gordon flow is
//! solved exactly per Fourier mode (`omega_k = sqrt(1 + |k|^2)`), and the kick
//! `v += dt f(u)` solves `u_t = 0, v_t = f(u)` exactly. The same machinery
//! advances the damped equation by swapping in the exact damped-oscillator
//! propagator.

use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::spectral::Spectral;
use crate::field::State;
use crate::functionals::{diagnostics_with_tail_margin, DiagnosticsRecord, DEFAULT_TAIL_MARGIN};
use crate::nonlinearity::NonlinearityModel;

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub dt_init: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub t_end: f64,
    /// Blow-up is declared once `max |u|` exceeds this.
    pub blowup_amp_threshold: f64,
    /// ... or once `G` exceeds this multiple of `G(0)`.
    pub blowup_norm_factor: f64,
    /// Diagnostics cadence in accepted steps.
    pub sample_every: usize,
    pub safety: f64,
    /// Evaluate `f(u)` on the 3/2-padded grid.
    pub dealias: bool,
    /// Half-width of the support of compactly supported data, centered in the
    /// torus. When set, the run stops once `t > L/2 - half_span`, the time up
    /// to which the periodic solution coincides with the whole-space one.
    pub support_half_span: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt_init: 1e-3,
            dt_min: 1e-12,
            dt_max: 1e-3,
            t_end: 1.0,
            blowup_amp_threshold: 1e6,
            blowup_norm_factor: 1e6,
            sample_every: 10,
            safety: 0.8,
            dealias: false,
            support_half_span: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::SolverConfig(msg));
        if !(self.dt_min > 0.0 && self.dt_min <= self.dt_init && self.dt_init <= self.dt_max) {
            return bad(format!(
                "need 0 < dt_min <= dt_init <= dt_max, got {} / {} / {}",
                self.dt_min, self.dt_init, self.dt_max
            ));
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return bad(format!("t_end = {} must be a finite nonnegative time", self.t_end));
        }
        if self.sample_every == 0 {
            return bad("sample_every must be at least 1".into());
        }
        if !(self.safety > 0.0) {
            return bad(format!("safety = {} must be positive", self.safety));
        }
        if !(self.blowup_amp_threshold > 0.0 && self.blowup_norm_factor > 1.0) {
            return bad("blow-up thresholds must be positive (norm factor > 1)".into());
        }
        if let Some(r) = self.support_half_span {
            if !(r >= 0.0) {
                return bad(format!("support half span {r} must be nonnegative"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Outcome {
    ReachedHorizon,
    /// `t_detect` is the first state past a threshold; the last regular
    /// state was at `t_last_regular`. The true blow-up time exceeds both.
    BlowupDetected { t_detect: f64, t_last_regular: f64 },
    StepUnderflow { t: f64 },
    PropagationHorizonExceeded { t: f64 },
}

impl Outcome {
    pub fn label(&self) -> &'static str {
        match self {
            Outcome::ReachedHorizon => "reached_horizon",
            Outcome::BlowupDetected { .. } => "blowup_detected",
            Outcome::StepUnderflow { .. } => "step_underflow",
            Outcome::PropagationHorizonExceeded { .. } => "propagation_horizon_exceeded",
        }
    }

    pub fn t_detect(&self) -> Option<f64> {
        match *self {
            Outcome::BlowupDetected { t_detect, .. } => Some(t_detect),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct TrajectoryResult {
    pub records: Vec<DiagnosticsRecord>,
    pub outcome: Outcome,
    pub steps: usize,
    pub final_dt: f64,
    pub wall_time: Duration,
    /// `||u(t)||^2` at every accepted step, for time integrals along the run.
    pub mass_history: Vec<(f64, f64)>,
}

#[derive(Serialize)]
struct Summary<'a> {
    #[serde(flatten)]
    outcome: &'a Outcome,
    steps: usize,
    final_dt: f64,
    records: usize,
    wall_time_s: f64,
}

impl TrajectoryResult {
    /// The run summary as a JSON object.
    pub fn summary_json(&self) -> String {
        let s = Summary {
            outcome: &self.outcome,
            steps: self.steps,
            final_dt: self.final_dt,
            records: self.records.len(),
            wall_time_s: self.wall_time.as_secs_f64(),
        };
        serde_json::to_string_pretty(&s).expect("summary serializes")
    }
}

/// The exactly solvable linear part of the split.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LinearFlow {
    /// `u_tt - Lap u + u = 0`.
    KleinGordon,
    /// `u_tt + a u_t - Lap u + u = 0`.
    Damped { a: f64 },
}

impl LinearFlow {
    /// `[a, b; c, d]` with `(u, v)(t) = [a, b; c, d] (u, v)(0)` for a mode of
    /// frequency `omega = sqrt(1 + |k|^2)`.
    pub fn mode_matrix(&self, k_sq: f64, t: f64) -> [f64; 4] {
        let omega_sq = 1.0 + k_sq;
        match *self {
            LinearFlow::Damped { a } if a != 0.0 => damped_mode_matrix(omega_sq, a, t),
            _ => {
                let omega = omega_sq.sqrt();
                let (s, c) = (omega * t).sin_cos();
                [c, s / omega, -omega * s, c]
            }
        }
    }
}

/// Exact propagator of `x'' + a x' + omega^2 x = 0`, covering the under-,
/// critically and over-damped branches.
fn damped_mode_matrix(omega_sq: f64, a: f64, t: f64) -> [f64; 4] {
    let mu = 0.5 * a;
    let disc = omega_sq - mu * mu;
    // c(t) and s(t) = sin(beta t)/beta (or its hyperbolic / linear limit)
    let (c, s) = if disc > 0.0 {
        let beta = disc.sqrt();
        let (sn, cs) = (beta * t).sin_cos();
        (cs, sn / beta)
    } else if disc < 0.0 {
        let gamma = (-disc).sqrt();
        ((gamma * t).cosh(), (gamma * t).sinh() / gamma)
    } else {
        (1.0, t)
    };
    let decay = (-mu * t).exp();
    [
        decay * (c + mu * s),
        decay * s,
        -decay * omega_sq * s,
        decay * (c - mu * s),
    ]
}

/// Reusable split-step integrator bound to one grid.
pub struct Integrator {
    spectral: Arc<Spectral>,
    flow: LinearFlow,
    dealias: bool,
    cached: Option<(u64, Vec<[f64; 4]>)>,
}

impl Integrator {
    pub fn new(grid: &crate::field::Grid, flow: LinearFlow) -> Self {
        Self { spectral: grid.spectral(), flow, dealias: false, cached: None }
    }

    pub fn with_dealias(mut self, dealias: bool) -> Self {
        self.dealias = dealias;
        self
    }

    /// Advances the linear subsystem by `tau` (any sign).
    pub fn linear(&mut self, state: &mut State, tau: f64) {
        if tau == 0.0 {
            return;
        }
        let key = tau.to_bits();
        if self.cached.as_ref().map(|(k, _)| *k) != Some(key) {
            let table = self.spectral.k_sq().iter().map(|&k2| self.flow.mode_matrix(k2, tau)).collect();
            self.cached = Some((key, table));
        }
        let table = &self.cached.as_ref().expect("table cached above").1;
        self.spectral.apply_mode_matrix(state.u.values_mut(), state.v.values_mut(), table);
    }

    /// `v += dt f(u)`.
    pub fn kick(&self, state: &mut State, model: &NonlinearityModel, dt: f64) {
        if self.dealias {
            let fu = self.spectral.dealiased_map(state.u.values(), |s| model.f(s));
            for (v, f) in state.v.values_mut().iter_mut().zip(fu) {
                *v += dt * f;
            }
        } else {
            for (v, &u) in state.v.values_mut().iter_mut().zip(state.u.values()) {
                *v += dt * model.f(u);
            }
        }
    }

    /// One Strang step; `t` advances by `dt`.
    pub fn step(&mut self, state: &mut State, model: &NonlinearityModel, dt: f64) {
        self.linear(state, 0.5 * dt);
        self.kick(state, model, dt);
        self.linear(state, 0.5 * dt);
        state.t += dt;
    }
}

/// Exact linear Klein-Gordon flow over `dt`.
pub fn linear_flow(state: &State, dt: f64) -> State {
    let mut out = state.clone();
    Integrator::new(state.grid(), LinearFlow::KleinGordon).linear(&mut out, dt);
    out
}

/// `v <- v + dt f(u)`; `u` and `t` unchanged.
pub fn nonlinear_kick(state: &State, model: &NonlinearityModel, dt: f64) -> State {
    let mut out = state.clone();
    Integrator::new(state.grid(), LinearFlow::KleinGordon).kick(&mut out, model, dt);
    out
}

/// One second-order Strang step of the undamped equation.
pub fn step(state: &State, model: &NonlinearityModel, dt: f64) -> State {
    let mut out = state.clone();
    Integrator::new(state.grid(), LinearFlow::KleinGordon).step(&mut out, model, dt);
    out
}

/// Step size from the local nonlinear frequency `sqrt(1 + max |f'(u)|)`.
fn step_law(state: &State, model: &NonlinearityModel, safety: f64) -> f64 {
    let stiffness = state.u.values().iter().fold(0.0_f64, |m, &u| m.max(model.derivative(u).abs()));
    safety / (1.0 + stiffness).sqrt()
}

/// Integrates the undamped equation.
pub fn run(state0: &State, model: &NonlinearityModel, config: &SolverConfig) -> Result<TrajectoryResult> {
    run_with_flow(state0, model, config, LinearFlow::KleinGordon)
}

/// Integrates with an arbitrary linear flow (the damped module reuses this).
pub fn run_with_flow(
    state0: &State,
    model: &NonlinearityModel,
    config: &SolverConfig,
    flow: LinearFlow,
) -> Result<TrajectoryResult> {
    config.validate()?;
    let started = Instant::now();
    let grid = *state0.grid();
    let half_length = 0.5 * grid.length();

    let mut tail_margin = DEFAULT_TAIL_MARGIN;
    let mut horizon = f64::INFINITY;
    if let Some(span) = config.support_half_span {
        let gap = half_length - span;
        if gap <= 0.0 {
            return Err(Error::Precondition(format!(
                "support half span {span} leaves no room inside the torus of half length {half_length}"
            )));
        }
        horizon = gap;
        tail_margin = (gap / grid.length()).min(0.49);
        for (name, f) in [("u0", &state0.u), ("u1", &state0.v)] {
            let tail = f.boundary_tail_mass(tail_margin)?;
            if tail > 1e-12 {
                return Err(Error::Precondition(format!(
                    "{name} carries tail mass {tail:e} outside its declared support"
                )));
            }
        }
    }

    let record = |s: &State| diagnostics_with_tail_margin(s, model, tail_margin);
    let mut integrator = Integrator::new(&grid, flow).with_dealias(config.dealias);
    let mut state = state0.clone();
    let mut records = vec![record(&state)];
    let mut mass_history = vec![(state.t, records[0].g)];
    let g0 = records[0].g;
    let t_end = state0.t + config.t_end;
    let mut steps = 0;
    let mut dt = config.dt_init;
    let mut outcome = Outcome::ReachedHorizon;

    while state.t < t_end {
        let law = step_law(&state, model, config.safety);
        if law < config.dt_min {
            outcome = Outcome::StepUnderflow { t: state.t };
            break;
        }
        dt = if steps == 0 { config.dt_init.min(law) } else { law.min(config.dt_max) };
        // Land exactly on t_end rather than leaving a sliver step.
        let last = state.t + dt >= t_end || t_end - (state.t + dt) < 1e-9 * dt;
        if last {
            dt = t_end - state.t;
        }
        let t_prev = state.t;
        integrator.step(&mut state, model, dt);
        if last {
            state.t = t_end;
        }
        steps += 1;

        let g = state.u.l2_norm_sq();
        mass_history.push((state.t, g));
        let u_max = state.u.max_abs();
        let blown = !state.is_finite()
            || !(u_max <= config.blowup_amp_threshold)
            || (g0 > 0.0 && !(g <= config.blowup_norm_factor * g0));
        if blown {
            outcome = Outcome::BlowupDetected { t_detect: state.t, t_last_regular: t_prev };
            break;
        }
        if state.t > horizon {
            outcome = Outcome::PropagationHorizonExceeded { t: state.t };
            break;
        }
        if steps % config.sample_every == 0 {
            records.push(record(&state));
        }
    }
    if records.last().map(|r| r.t) != Some(state.t) {
        records.push(record(&state));
    }
    Ok(TrajectoryResult {
        records,
        outcome,
        steps,
        final_dt: dt,
        wall_time: started.elapsed(),
        mass_history,
    })
}
