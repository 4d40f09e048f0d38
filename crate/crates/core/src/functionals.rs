//! Scalar functionals of a state: energy, Nehari functional, action and the
//! auxiliary `G(t) = ||u(t)||^2` with its first two time derivatives.
//!
//! `G''` is never obtained by differentiating a time series. Along solutions
//! `G'' / 2 = ||u_t||^2 - I(u)`, and that identity is how it is evaluated.

use crate::field::{Field, State};
use crate::nonlinearity::NonlinearityModel;

/// Margin fraction used for the `tail` diagnostic unless a caller overrides it.
pub const DEFAULT_TAIL_MARGIN: f64 = 0.1;

/// Header of the diagnostics CSV.
pub const DIAGNOSTICS_HEADER: &str = "t,E,I,J,G,dG,ddG,u_max,tail,concavity_gap";

/// Every functional evaluated at one instant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub energy: f64,
    pub nehari: f64,
    /// Action level; `None` for custom nonlinearities where it is undefined.
    pub action: Option<f64>,
    pub g: f64,
    pub dg: f64,
    pub ddg: f64,
    pub u_max: f64,
    pub tail: f64,
    /// `G'' G - ((4 + eps)/4) G'^2`.
    pub concavity_gap: f64,
}

impl DiagnosticsRecord {
    /// One CSV row, 17 significant digits, `NaN` for an undefined action.
    pub fn to_csv_row(&self) -> String {
        [
            self.t,
            self.energy,
            self.nehari,
            self.action.unwrap_or(f64::NAN),
            self.g,
            self.dg,
            self.ddg,
            self.u_max,
            self.tail,
            self.concavity_gap,
        ]
        .iter()
        .map(|x| format_float(*x))
        .collect::<Vec<_>>()
        .join(",")
    }

    pub fn is_finite(&self) -> bool {
        [self.energy, self.nehari, self.g, self.dg, self.ddg, self.u_max, self.concavity_gap]
            .iter()
            .all(|x| x.is_finite())
    }
}

/// Shortest exact-enough rendering used for every float written to disk.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AuxiliaryG {
    pub g: f64,
    pub dg: f64,
    pub ddg: f64,
}

/// `||u||^2 + ||grad u||^2`.
fn h1_sq(u: &Field) -> f64 {
    u.l2_norm_sq() + u.grad_norm_sq()
}

/// `E = (||v||^2 + ||u||^2 + ||grad u||^2 - 2 int F(u)) / 2`.
pub fn energy(state: &State, model: &NonlinearityModel) -> f64 {
    0.5 * (state.v.l2_norm_sq() + h1_sq(&state.u) - 2.0 * state.u.integrate_map(|s| model.antiderivative(s)))
}

/// `I(u) = ||u||^2 + ||grad u||^2 - int f(u) u`.
pub fn nehari(u: &Field, model: &NonlinearityModel) -> f64 {
    h1_sq(u) - u.integrate_map(|s| model.f(s) * s)
}

/// `J(u) = (||u||^2 + ||grad u||^2)/2 - int |u|^(p+1) / (p+1)`.
pub fn action(u: &Field, p: f64) -> f64 {
    0.5 * h1_sq(u) - u.integrate_map(|s| s.abs().powf(p + 1.0)) / (p + 1.0)
}

/// `G = ||u||^2`, `G' = 2 <u, v>`, `G'' = 2 (||v||^2 - I(u))`.
pub fn g_and_derivatives(state: &State, model: &NonlinearityModel) -> AuxiliaryG {
    let g = state.u.l2_norm_sq();
    let dg = 2.0 * inner(&state.u, &state.v);
    let ddg = 2.0 * (state.v.l2_norm_sq() - nehari(&state.u, model));
    AuxiliaryG { g, dg, ddg }
}

fn inner(a: &Field, b: &Field) -> f64 {
    a.inner_product(b).expect("state fields share a grid")
}

pub fn concavity_gap(aux: &AuxiliaryG, epsilon: f64) -> f64 {
    aux.ddg * aux.g - (4.0 + epsilon) / 4.0 * aux.dg * aux.dg
}

pub fn diagnostics(state: &State, model: &NonlinearityModel) -> DiagnosticsRecord {
    diagnostics_with_tail_margin(state, model, DEFAULT_TAIL_MARGIN)
}

/// Evaluates the full record, sharing the spectral gradient between `E`, `I` and `J`.
pub fn diagnostics_with_tail_margin(
    state: &State,
    model: &NonlinearityModel,
    tail_margin: f64,
) -> DiagnosticsRecord {
    let u = &state.u;
    let u_sq = u.l2_norm_sq();
    let grad_sq = u.grad_norm_sq();
    let v_sq = state.v.l2_norm_sq();
    let potential = u.integrate_map(|s| model.antiderivative(s));
    let work = u.integrate_map(|s| model.f(s) * s);
    let h1 = u_sq + grad_sq;

    let nehari = h1 - work;
    let aux = AuxiliaryG { g: u_sq, dg: 2.0 * inner(u, &state.v), ddg: 2.0 * (v_sq - nehari) };
    let action = model.power_params().map(|_| 0.5 * h1 - potential);
    DiagnosticsRecord {
        t: state.t,
        energy: 0.5 * (v_sq + h1 - 2.0 * potential),
        nehari,
        action,
        g: aux.g,
        dg: aux.dg,
        ddg: aux.ddg,
        u_max: u.max_abs(),
        tail: u.boundary_tail_mass(tail_margin).unwrap_or(f64::NAN),
        concavity_gap: concavity_gap(&aux, model.epsilon),
    }
}
