//! Positive radial solutions of `-Δu + u = u^p` and the threshold level
//! `d = J(ū)`.
//!
//! In one dimension the solitary wave is known in closed form. For `n = 2, 3`
//! the radial ODE `u'' + (n-1)/r u' - u + u^p = 0` is shot from the origin and
//! the initial height bisected between trajectories that cross zero and
//! trajectories that turn back up.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{Field, Grid, State};
use crate::functionals::{action, diagnostics, energy, nehari, DEFAULT_TAIL_MARGIN};
use crate::nonlinearity::NonlinearityModel;
use crate::solver::{self, Outcome, SolverConfig};

/// Largest tail mass fraction tolerated near the torus boundary.
pub const TAIL_LIMIT: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct GroundState {
    pub profile: Field,
    /// `J(ū)`.
    pub d: f64,
    pub p: f64,
    pub n: usize,
    /// `ū(0)`.
    pub center: f64,
    /// `I(ū)` on the lattice.
    pub nehari: f64,
    /// `||u||^2 + ||grad u||^2`.
    pub h1_sq: f64,
    /// `||-Δū + ū - ū^p|| / ||ū||`.
    pub residual: f64,
}

impl GroundState {
    fn from_profile(profile: Field, p: f64, center: f64) -> Result<Self> {
        let tail = profile.boundary_tail_mass(DEFAULT_TAIL_MARGIN)?;
        if tail > TAIL_LIMIT {
            return Err(Error::TailTooLarge { tail, limit: TAIL_LIMIT });
        }
        let model = NonlinearityModel::power(p)?;
        let h1_sq = profile.l2_norm_sq() + profile.grad_norm_sq();
        Ok(Self {
            d: action(&profile, p),
            p,
            n: profile.grid().dim(),
            center,
            nehari: nehari(&profile, &model),
            h1_sq,
            residual: elliptic_residual(&profile, p),
            profile,
        })
    }

    /// `|I(ū)| / (||ū||^2 + ||grad ū||^2)`.
    pub fn relative_nehari(&self) -> f64 {
        self.nehari.abs() / self.h1_sq
    }
}

/// `||-Δu + u - |u|^(p-1) u|| / ||u||` with the spectral Laplacian.
pub fn elliptic_residual(u: &Field, p: f64) -> f64 {
    let lap = u.laplacian();
    let r: Vec<f64> = u
        .values()
        .iter()
        .zip(lap.values())
        .map(|(&x, &l)| -l + x - x.abs().powf(p - 1.0) * x)
        .collect();
    let r = Field::from_values(*u.grid(), r).expect("same grid");
    (r.l2_norm_sq() / u.l2_norm_sq()).sqrt()
}

/// `((p+1)/2)^(1/(p-1)) sech^(2/(p-1))((p-1) x / 2)`.
pub fn soliton_1d(p: f64, x: f64) -> f64 {
    let amp = ((p + 1.0) / 2.0).powf(1.0 / (p - 1.0));
    amp * (1.0 / ((p - 1.0) * x / 2.0).cosh()).powf(2.0 / (p - 1.0))
}

fn check_exponent(p: f64, n: usize) -> Result<()> {
    if !(1..=3).contains(&n) {
        return Err(Error::Precondition(format!("dimension {n} not in 1..=3")));
    }
    let upper = if n <= 2 { f64::INFINITY } else { (n as f64 + 2.0) / (n as f64 - 2.0) };
    if !(p > 1.0 && p < upper) {
        return Err(Error::Precondition(format!(
            "no positive ground state for p = {p} in dimension {n} (need 1 < p < {upper})"
        )));
    }
    Ok(())
}

/// Closed-form solitary wave sampled on a 1-D grid, accepted only if its
/// discrete elliptic residual is below `tol`.
pub fn solve_ground_state_1d(p: f64, grid: &Grid, tol: f64) -> Result<GroundState> {
    if grid.dim() != 1 {
        return Err(Error::Precondition("the closed form is one-dimensional".into()));
    }
    check_exponent(p, 1)?;
    let profile = Field::from_fn(*grid, |x| soliton_1d(p, x[0]));
    let gs = GroundState::from_profile(profile, p, soliton_1d(p, 0.0))?;
    if !(gs.residual <= tol) {
        return Err(Error::ToleranceNotReached { tol, iterations: 0 });
    }
    Ok(gs)
}

#[derive(Clone, Debug)]
pub struct ShootingOptions {
    pub r_max: f64,
    /// Tail level: the profile must have decayed below `tol * ū(0)` by `r_max`.
    pub tol: f64,
    /// Initial heights `(undershoot, overshoot)`; searched for when `None`.
    pub bracket: Option<(f64, f64)>,
    pub max_bisections: usize,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        Self { r_max: 40.0, tol: 1e-6, bracket: None, max_bisections: 80 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Shot {
    /// Crossed zero: the initial height is too large.
    Over,
    /// Turned back up while positive: too small.
    Under,
    /// Neither before `r_max`.
    Undecided,
}

const R_START: f64 = 1e-4;
const MAX_STEP: f64 = 0.01;

/// One radial trajectory sampled at every accepted step.
struct Trajectory {
    r: Vec<f64>,
    u: Vec<f64>,
    du: Vec<f64>,
    shot: Shot,
}

fn rhs(n: usize, p: f64, r: f64, y: [f64; 2]) -> [f64; 2] {
    let [u, du] = y;
    [du, -(n as f64 - 1.0) / r * du + u - u.abs().powf(p - 1.0) * u]
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

fn shoot(n: usize, p: f64, a: f64, r_max: f64, keep: bool) -> Trajectory {
    let c2 = (a - a.abs().powf(p - 1.0) * a) / (2.0 * n as f64);
    let mut r = R_START;
    let mut y = [a + c2 * r * r, 2.0 * c2 * r];
    let mut out = Trajectory { r: vec![r], u: vec![y[0]], du: vec![y[1]], shot: Shot::Undecided };
    let (rtol, atol) = (1e-12, 1e-16 * a.abs().max(1.0));
    let mut h: f64 = 1e-3;
    let mut k = [[0.0; 2]; 7];
    while r < r_max {
        h = h.min(MAX_STEP).min(r_max - r);
        k[0] = rhs(n, p, r, y);
        for s in 1..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s) {
                ys[0] += h * A[s][j] * kj[0];
                ys[1] += h * A[s][j] * kj[1];
            }
            k[s] = rhs(n, p, r + C[s] * h, ys);
        }
        let mut y5 = y;
        let mut err: f64 = 0.0;
        for c in 0..2 {
            let (mut d5, mut d4) = (0.0, 0.0);
            for s in 0..7 {
                d5 += B5[s] * k[s][c];
                d4 += B4[s] * k[s][c];
            }
            y5[c] = y[c] + h * d5;
            let scale = atol + rtol * y[c].abs().max(y5[c].abs());
            err = err.max((h * (d5 - d4)).abs() / scale);
        }
        if err <= 1.0 {
            r += h;
            y = y5;
            if keep {
                out.r.push(r);
                out.u.push(y[0]);
                out.du.push(y[1]);
            }
            if y[0] < 0.0 {
                out.shot = Shot::Over;
                break;
            }
            if y[1] > 0.0 {
                out.shot = Shot::Under;
                break;
            }
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
    }
    out
}

/// Decaying solution of `w'' + (n-1)/r w' - w = 0`, i.e. `r^(-ν) K_ν(r)`
/// up to a constant, from the large-argument expansion.
fn linear_tail(n: usize, r: f64) -> f64 {
    let nu = (n as f64 - 2.0) / 2.0;
    let mu = 4.0 * nu * nu;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..=6 {
        let odd = (2 * k - 1) as f64;
        term *= (mu - odd * odd) / (k as f64 * 8.0 * r);
        sum += term;
    }
    r.powf(-nu - 0.5) * (-r).exp() * sum
}

/// Radial ground-state profile: sampled core plus matched exponential tail.
#[derive(Clone, Debug)]
pub struct RadialProfile {
    pub n: usize,
    pub p: f64,
    pub center: f64,
    r: Vec<f64>,
    u: Vec<f64>,
    du: Vec<f64>,
    tail_scale: f64,
}

impl RadialProfile {
    /// Radius where the sampled core ends and the matched tail starts.
    pub fn cutoff(&self) -> f64 {
        *self.r.last().unwrap()
    }

    /// Cubic Hermite interpolation inside the core, asymptotic tail outside.
    pub fn eval(&self, r: f64) -> f64 {
        if r <= self.r[0] {
            let c2 = (self.center - self.center.powf(self.p)) / (2.0 * self.n as f64);
            return self.center + c2 * r * r;
        }
        if r >= self.cutoff() {
            return self.tail_scale * linear_tail(self.n, r);
        }
        let i = self.r.partition_point(|&x| x <= r) - 1;
        let (r0, r1) = (self.r[i], self.r[i + 1]);
        let h = r1 - r0;
        let t = (r - r0) / h;
        let (t2, t3) = (t * t, t * t * t);
        (2.0 * t3 - 3.0 * t2 + 1.0) * self.u[i]
            + (t3 - 2.0 * t2 + t) * h * self.du[i]
            + (-2.0 * t3 + 3.0 * t2) * self.u[i + 1]
            + (t3 - t2) * h * self.du[i + 1]
    }
}

fn classify(n: usize, p: f64, a: f64, r_max: f64) -> Shot {
    shoot(n, p, a, r_max, false).shot
}

/// Shoots the radial ODE and bisects the initial height.
pub fn shoot_radial(p: f64, n: usize, opts: &ShootingOptions) -> Result<RadialProfile> {
    check_exponent(p, n)?;
    let r_max = opts.r_max;
    let (mut lo, mut hi) = match opts.bracket {
        Some((lo, hi)) => {
            let (sl, sh) = (classify(n, p, lo, r_max), classify(n, p, hi, r_max));
            if sl != Shot::Under || sh != Shot::Over {
                return Err(Error::NonBracketing {
                    lo,
                    hi,
                    reason: format!("endpoints classify as {sl:?} and {sh:?}"),
                });
            }
            (lo, hi)
        }
        None => auto_bracket(n, p, r_max)?,
    };
    let mut iterations = 0;
    while iterations < opts.max_bisections {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match classify(n, p, mid, r_max) {
            Shot::Over => hi = mid,
            Shot::Under => lo = mid,
            Shot::Undecided => {
                lo = mid;
                break;
            }
        }
        iterations += 1;
    }
    if hi - lo > 1e-12 * hi {
        return Err(Error::ToleranceNotReached { tol: 1e-12, iterations });
    }

    let center = lo;
    let traj = shoot(n, p, center, r_max, true);
    let cut_level = 1e-6 * center;
    let end = traj.u.iter().position(|&u| u < cut_level).unwrap_or(traj.u.len());
    if end == traj.u.len() {
        return Err(Error::TailTooLarge { tail: traj.u[end - 1] / center, limit: opts.tol });
    }
    let end = end + 1;
    let (r, u, du) = (traj.r[..end].to_vec(), traj.u[..end].to_vec(), traj.du[..end].to_vec());
    let rc = r[end - 1];
    let tail_scale = u[end - 1] / linear_tail(n, rc);
    let profile = RadialProfile { n, p, center, r, u, du, tail_scale };
    let at_edge = profile.eval(r_max) / center;
    if at_edge > opts.tol {
        return Err(Error::TailTooLarge { tail: at_edge, limit: opts.tol });
    }
    Ok(profile)
}

fn auto_bracket(n: usize, p: f64, r_max: f64) -> Result<(f64, f64)> {
    // Heights at or just above 1 oscillate about the constant solution u = 1.
    let lo = 1.0 + 1e-3;
    if classify(n, p, lo, r_max) != Shot::Under {
        return Err(Error::NonBracketing { lo, hi: lo, reason: "lower end does not undershoot".into() });
    }
    let mut hi = 2.0;
    for _ in 0..60 {
        if classify(n, p, hi, r_max) == Shot::Over {
            return Ok((lo, hi));
        }
        hi *= 2.0;
    }
    Err(Error::NonBracketing { lo, hi, reason: "no overshooting height found".into() })
}

/// Shooting result resampled onto the lattice, centered at the origin.
pub fn solve_ground_state_radial(p: f64, grid: &Grid, opts: &ShootingOptions) -> Result<GroundState> {
    let profile = shoot_radial(p, grid.dim(), opts)?;
    let field = Field::from_fn(*grid, |x| profile.eval((x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()));
    GroundState::from_profile(field, p, profile.center)
}

/// Closed form in one dimension, shooting otherwise.
pub fn solve_ground_state(p: f64, grid: &Grid) -> Result<GroundState> {
    if grid.dim() == 1 {
        solve_ground_state_1d(p, grid, 1e-8)
    } else {
        solve_ground_state_radial(p, grid, &ShootingOptions::default())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DichotomyRow {
    pub lambda: f64,
    pub energy: f64,
    pub nehari: f64,
    pub outcome: Outcome,
    /// `max_t G(t) / G(0)` over the recorded samples.
    pub max_g_ratio: f64,
}

/// Runs `u0 = λ ū`, `u1 = 0` for every `λ` (in parallel, rows in input order).
pub fn dichotomy_experiment(
    ground: &GroundState,
    lambdas: &[f64],
    config: &SolverConfig,
) -> Result<Vec<DichotomyRow>> {
    if lambdas.iter().any(|&l| l == 1.0) {
        return Err(Error::Precondition("λ = 1 lies on the Nehari manifold".into()));
    }
    let model = NonlinearityModel::power(ground.p)?;
    lambdas
        .par_iter()
        .map(|&lambda| {
            let u0 = ground.profile.scaled(lambda);
            let state = State::new(u0.clone(), Field::zeros(*u0.grid()), 0.0)?;
            let e0 = energy(&state, &model);
            let i0 = nehari(&u0, &model);
            let result = solver::run(&state, &model, config)?;
            let g0 = diagnostics(&state, &model).g;
            let max_g = result.records.iter().map(|r| r.g).fold(g0, f64::max);
            Ok(DichotomyRow { lambda, energy: e0, nehari: i0, outcome: result.outcome, max_g_ratio: max_g / g0 })
        })
        .collect()
}
