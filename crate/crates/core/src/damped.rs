//! `u_tt + a u_t - Δu + u = b |u|^(p-1) u` with linear damping.
//!
//! The linear part including damping is integrated exactly per mode, so the
//! split step is the undamped one with a different mode matrix. Blow-up is
//! tracked through the modified auxiliary function
//! `G(t) = ||u||^2 + ∫_0^t ||u||^2 dτ + (T0 - t) ||u0||^2`.
//! Results are monitored demonstrations; no time bound is certified.

use serde::Serialize;

use crate::certifier::blowup_time_bound;
use crate::error::{Error, Result};
use crate::field::{Field, State};
use crate::functionals::{format_float, DiagnosticsRecord};
use crate::initial_data::{check_static_conditions, StaticCertificate};
use crate::nonlinearity::NonlinearityModel;
use crate::solver::{run_with_flow, Integrator, LinearFlow, SolverConfig, TrajectoryResult};

pub const DAMPED_HEADER: &str = "t,E,I,J,G,dG,ddG,u_max,tail,concavity_gap,G_damped,dG_damped";

/// Label attached to every damped result.
pub const DEMONSTRATION_LABEL: &str = "monitored demonstration";

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DampedConfig {
    /// Damping coefficient `a >= 0`.
    pub a: f64,
    /// Horizon constant of the modified `G`; `None` picks twice the undamped
    /// tangent-line bound of the data.
    pub t0: Option<f64>,
}

/// One Strang step of the damped equation.
pub fn damped_step(state: &State, model: &NonlinearityModel, a: f64, dt: f64) -> State {
    let mut out = state.clone();
    Integrator::new(state.grid(), LinearFlow::Damped { a }).step(&mut out, model, dt);
    out
}

/// `½(||v||^2 + ||u||^2 + ||grad u||^2)`.
pub fn linear_energy(state: &State) -> f64 {
    0.5 * (state.v.l2_norm_sq() + state.u.l2_norm_sq() + state.u.grad_norm_sq())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DampedG {
    pub t: f64,
    pub g: f64,
    /// `2 <u, v> + ||u||^2 - ||u0||^2`.
    pub dg: f64,
}

/// Modified `G` at every record. The time integral is a trapezoid sum over
/// `mass_history`, which must contain every record time.
pub fn damped_g(records: &[DiagnosticsRecord], mass_history: &[(f64, f64)], t0: f64) -> Vec<DampedG> {
    let Some(&(t_start, mass0)) = mass_history.first() else { return Vec::new() };
    let mut out = Vec::with_capacity(records.len());
    let mut integral = 0.0;
    let mut k = 0;
    for r in records {
        while k + 1 < mass_history.len() && mass_history[k].0 < r.t {
            let (ta, ma) = mass_history[k];
            let (tb, mb) = mass_history[k + 1];
            integral += 0.5 * (ma + mb) * (tb - ta);
            k += 1;
        }
        let s = r.t - t_start;
        out.push(DampedG { t: r.t, g: r.g + integral + (t0 - s) * mass0, dg: r.dg + r.g - mass0 });
    }
    out
}

#[derive(Clone, Debug)]
pub struct DampedReport {
    pub config: DampedConfig,
    pub t0: f64,
    /// The four static conditions with the damped energy; a working
    /// hypothesis, not a proven criterion for the damped equation.
    pub static_part: StaticCertificate,
    pub result: TrajectoryResult,
    pub series: Vec<DampedG>,
    /// Finite records with `I >= 0`.
    pub nehari_violations: usize,
    /// Consecutive finite records where the modified `G` does not grow.
    pub growth_violations: usize,
}

impl DampedReport {
    pub fn label(&self) -> &'static str {
        DEMONSTRATION_LABEL
    }

    pub fn csv(&self) -> String {
        let mut s = String::with_capacity(256 * self.series.len());
        s.push_str(DAMPED_HEADER);
        s.push('\n');
        for (r, d) in self.result.records.iter().zip(&self.series) {
            s.push_str(&r.to_csv_row());
            s.push(',');
            s.push_str(&format_float(d.g));
            s.push(',');
            s.push_str(&format_float(d.dg));
            s.push('\n');
        }
        s
    }
}

pub fn damped_blowup_run(
    u0: &Field,
    u1: &Field,
    model: &NonlinearityModel,
    config: DampedConfig,
    solver_config: &SolverConfig,
) -> Result<DampedReport> {
    if !(config.a >= 0.0) {
        return Err(Error::Precondition(format!("damping a = {} must be nonnegative", config.a)));
    }
    let static_part = check_static_conditions(u0, u1, model)?;
    let t0 = match config.t0 {
        Some(t0) if t0 > 0.0 => t0,
        Some(t0) => return Err(Error::Precondition(format!("T0 = {t0} must be positive"))),
        None => {
            let dg0 = 2.0 * static_part.inner;
            2.0 * blowup_time_bound(static_part.mass, dg0, model.epsilon)?.t_derived
        }
    };
    let state = State::new(u0.clone(), u1.clone(), 0.0)?;
    let result = run_with_flow(&state, model, solver_config, LinearFlow::Damped { a: config.a })?;
    let series = damped_g(&result.records, &result.mass_history, t0);

    let finite: Vec<usize> = (0..result.records.len()).filter(|&i| result.records[i].is_finite()).collect();
    let nehari_violations = finite.iter().filter(|&&i| result.records[i].nehari >= 0.0).count();
    let growth_violations = finite.windows(2).filter(|w| series[w[1]].g <= series[w[0]].g).count();
    Ok(DampedReport { config, t0, static_part, result, series, nehari_violations, growth_violations })
}
