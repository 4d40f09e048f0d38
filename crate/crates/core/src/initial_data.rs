//! Initial pairs `(u0, u1)`.
//!
//! Bumps are stamped on the lattice inside their support box, so a bump
//! translated by whole grid cells has bit-identical samples. That makes
//! replicated data exactly additive in every functional.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{Field, Grid, State};
use crate::functionals::{energy, nehari};
use crate::ground_state::solve_ground_state;
use crate::nonlinearity::NonlinearityModel;

/// Radius (in widths) where `exp(-r^2/w^2)` drops below `1e-14`.
pub const GAUSSIAN_CUTOFF: f64 = 5.677_643_628_300_219;

const MIN_POINTS_ACROSS: f64 = 8.0;

#[derive(Clone, Debug, PartialEq)]
pub enum Profile {
    /// `sin(2 pi k x_0 / L)`; periodic, no support.
    FourierMode { k: usize },
    /// `exp(-|x|^2 / w^2)`, set to zero beyond `GAUSSIAN_CUTOFF * w`.
    GaussianBump { width: f64 },
    /// `((1 + cos(pi r / R)) / 2)^2` for `r < R`.
    CosineBump { radius: f64 },
    /// Ground state of `-Δu + u = u^p` on the grid; treated as periodic.
    SolitonScaled { p: f64 },
    /// `count` copies of `base` on a cubic lattice of spacing `separation`.
    MultiBump { count: usize, separation: f64, base: Box<Profile> },
}

impl Profile {
    /// Support radius of a compact profile.
    pub fn support_radius(&self) -> Option<f64> {
        match self {
            Profile::GaussianBump { width } => Some(GAUSSIAN_CUTOFF * width),
            Profile::CosineBump { radius } => Some(*radius),
            _ => None,
        }
    }

    fn radial(&self, r: f64) -> f64 {
        match *self {
            Profile::GaussianBump { width } => (-(r * r) / (width * width)).exp(),
            Profile::CosineBump { radius } => {
                let c = 0.5 * (1.0 + (std::f64::consts::PI * r / radius).cos());
                c * c
            }
            _ => unreachable!("radial() is only called on compact bumps"),
        }
    }

    /// Diameter-like scale that must be resolved by the lattice.
    fn width(&self) -> Option<f64> {
        match *self {
            Profile::GaussianBump { width } => Some(2.0 * width),
            Profile::CosineBump { radius } => Some(2.0 * radius),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DataRecipe {
    pub profile: Profile,
    /// `λ`.
    pub amplitude: f64,
    /// `σ`, with `u1 = σ u0`.
    pub velocity_ratio: f64,
}

#[derive(Clone, Debug)]
pub struct InitialData {
    pub u0: Field,
    pub u1: Field,
    /// Distance from the origin to the far edge of the support, per axis.
    pub support_half_span: Option<f64>,
}

impl InitialData {
    pub fn state(&self) -> State {
        State::new(self.u0.clone(), self.u1.clone(), 0.0).expect("realized on one grid")
    }
}

fn check_resolution(profile: &Profile, grid: &Grid) -> Result<()> {
    if let Some(width) = profile.width() {
        let points = width / grid.spacing();
        if points < MIN_POINTS_ACROSS {
            return Err(Error::Resolution { points, width });
        }
    }
    Ok(())
}

/// Adds `amplitude * profile(|x - c|)` over the support box around the
/// lattice point with per-axis offsets `center` (in cells from the origin).
fn stamp(values: &mut [f64], grid: &Grid, profile: &Profile, radius: f64, center: [i64; 3], amplitude: f64) {
    let n = grid.points() as i64;
    let h = grid.spacing();
    let reach = (radius / h).ceil() as i64;
    let dim = grid.dim();
    let side = (2 * reach + 1) as usize;
    let count = side.pow(dim as u32);
    for local in 0..count {
        let mut rem = local;
        let mut flat = 0usize;
        let mut r2 = 0.0;
        for axis in 0..dim {
            let off = (rem % side) as i64 - reach;
            rem /= side;
            let idx = (n / 2 + center[axis] + off).rem_euclid(n) as usize;
            flat = flat * grid.points() + idx;
            let d = off as f64 * h;
            r2 += d * d;
        }
        let r = r2.sqrt();
        if r < radius {
            values[flat] += amplitude * profile.radial(r);
        }
    }
}

/// Bump centers of a multi-bump layout, in cells from the origin.
fn lattice_centers(count: usize, separation: f64, grid: &Grid) -> Vec<[i64; 3]> {
    let dim = grid.dim();
    let mut side: usize = 1;
    while side.pow(dim as u32) < count {
        side += 1;
    }
    let h = grid.spacing();
    (0..count)
        .map(|site| {
            let mut c = [0i64; 3];
            let mut rem = site;
            for axis in (0..dim).rev() {
                let i = rem % side;
                rem /= side;
                let x = (i as f64 - (side as f64 - 1.0) / 2.0) * separation;
                c[axis] = (x / h).round() as i64;
            }
            c
        })
        .collect()
}

/// Samples `u0 = λ φ` and `u1 = σ u0` on the grid.
pub fn realize(recipe: &DataRecipe, grid: &Grid) -> Result<InitialData> {
    let lambda = recipe.amplitude;
    let half = 0.5 * grid.length();
    let h = grid.spacing();
    let (u0, span) = match &recipe.profile {
        Profile::FourierMode { k } => {
            if *k == 0 {
                return Err(Error::Precondition("Fourier mode index must be positive".into()));
            }
            let points = grid.points() as f64 / *k as f64;
            if points < MIN_POINTS_ACROSS {
                return Err(Error::Resolution { points, width: grid.length() / *k as f64 });
            }
            let wave = 2.0 * std::f64::consts::PI * *k as f64 / grid.length();
            (Field::from_fn(*grid, |x| lambda * (wave * x[0]).sin()), None)
        }
        Profile::SolitonScaled { p } => (solve_ground_state(*p, grid)?.profile.scaled(lambda), None),
        bump @ (Profile::GaussianBump { .. } | Profile::CosineBump { .. }) => {
            check_resolution(bump, grid)?;
            let radius = bump.support_radius().unwrap();
            if radius >= half {
                return Err(Error::Support(format!("radius {radius} does not fit in half length {half}")));
            }
            let mut values = vec![0.0; grid.len()];
            stamp(&mut values, grid, bump, radius, [0; 3], lambda);
            (Field::from_values(*grid, values)?, Some(radius))
        }
        Profile::MultiBump { count, separation, base } => {
            let radius = base.support_radius().ok_or_else(|| {
                Error::Precondition("multi-bump replication needs a compact base profile".into())
            })?;
            check_resolution(base, grid)?;
            if *count == 0 {
                return Err(Error::Precondition("multi-bump count must be positive".into()));
            }
            if *count > 1 && *separation < 2.0 * radius + 2.0 * h {
                return Err(Error::Precondition(format!(
                    "separation {separation} lets bumps of radius {radius} overlap"
                )));
            }
            let centers = lattice_centers(*count, *separation, grid);
            let reach = centers
                .iter()
                .flat_map(|c| c[..grid.dim()].iter().map(|&i| (i as f64 * h).abs()))
                .fold(0.0, f64::max);
            let span = reach + radius;
            if span >= half {
                return Err(Error::Support(format!("bump group spans {span}, torus half length is {half}")));
            }
            let mut values = vec![0.0; grid.len()];
            for c in &centers {
                stamp(&mut values, grid, base, radius, *c, lambda);
            }
            (Field::from_values(*grid, values)?, Some(span))
        }
    };
    let u1 = u0.scaled(recipe.velocity_ratio);
    Ok(InitialData { u0, u1, support_half_span: span })
}

/// The four static blow-up conditions with the values they were decided on.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StaticCertificate {
    pub epsilon: f64,
    pub energy: f64,
    pub mass: f64,
    pub nehari: f64,
    pub inner: f64,
    /// `(2 (2 + eps) / eps) E(0)`.
    pub threshold: f64,
    pub energy_positive: bool,
    pub mass_above_threshold: bool,
    pub nehari_negative: bool,
    pub inner_positive: bool,
}

impl StaticCertificate {
    pub fn all_pass(&self) -> bool {
        self.energy_positive && self.mass_above_threshold && self.nehari_negative && self.inner_positive
    }

    /// `(label, pass)` in condition order.
    pub fn conditions(&self) -> [(&'static str, bool); 4] {
        [
            ("E(0) > 0", self.energy_positive),
            ("||u0||^2 >= threshold", self.mass_above_threshold),
            ("I(u0) < 0", self.nehari_negative),
            ("<u0, u1> > 0", self.inner_positive),
        ]
    }
}

pub fn mass_threshold_factor(epsilon: f64) -> f64 {
    2.0 * (2.0 + epsilon) / epsilon
}

pub fn check_static_conditions(u0: &Field, u1: &Field, model: &NonlinearityModel) -> Result<StaticCertificate> {
    let state = State::new(u0.clone(), u1.clone(), 0.0)?;
    let e = energy(&state, model);
    let mass = u0.l2_norm_sq();
    let i = nehari(u0, model);
    let inner = u0.inner_product(u1)?;
    let threshold = mass_threshold_factor(model.epsilon) * e;
    Ok(StaticCertificate {
        epsilon: model.epsilon,
        energy: e,
        mass,
        nehari: i,
        inner,
        threshold,
        energy_positive: e > 0.0,
        mass_above_threshold: mass >= threshold,
        nehari_negative: i < 0.0,
        inner_positive: inner > 0.0,
    })
}

#[derive(Clone, Debug)]
pub struct SynthesisOptions {
    /// Single-bump profile; replicated with spacing equal to the cell length.
    pub base: Profile,
    /// Scanned in order; the first with a nonempty window is used.
    pub sigma_candidates: Vec<f64>,
    /// Relative distance kept from the mass-threshold boundary.
    pub margin: f64,
    /// Energy aimed at, as a multiple of the target.
    pub overshoot: f64,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        Self {
            base: Profile::FourierMode { k: 1 },
            sigma_candidates: vec![0.1, 0.25, 0.5, 1.0],
            margin: 1e-3,
            overshoot: 1.02,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Synthesis {
    pub recipe: DataRecipe,
    /// The cell grid, or the enlarged torus holding every copy.
    pub grid: Grid,
    pub data: InitialData,
    pub certificate: StaticCertificate,
    pub copies: usize,
}

/// Scale-free integrals of the base profile at unit amplitude.
struct BaseIntegrals {
    mass: f64,
    grad: f64,
    /// `int F(φ)`.
    potential: f64,
    p: f64,
}

impl BaseIntegrals {
    fn energy(&self, lambda: f64, sigma: f64) -> f64 {
        let l2 = lambda * lambda;
        0.5 * l2 * (sigma * sigma * self.mass + self.mass + self.grad) - lambda.powf(self.p + 1.0) * self.potential
    }

    /// `[λ_lo, λ_hi)` where all four conditions hold and `E` decreases in `λ`.
    fn window(&self, sigma: f64, epsilon: f64, margin: f64) -> Option<(f64, f64)> {
        let (a, b, q, p) = (self.mass, self.grad, self.potential, self.p);
        let quad = sigma * sigma * a + a + b;
        let root = |x: f64| x.powf(1.0 / (p - 1.0));
        let nehari = root((a + b) / ((p + 1.0) * q));
        let peak = root(quad / ((p + 1.0) * q));
        let mass = root((0.5 * quad - a / mass_threshold_factor(epsilon)).max(0.0) / q);
        let zero = root(0.5 * quad / q);
        let lo = nehari.max(peak).max(mass) * (1.0 + margin);
        (sigma > 0.0 && lo < zero).then_some((lo, zero))
    }
}

/// Data passing all four conditions with `E(0)` in `[target, 1.05 target]`.
///
/// A single bump of the base profile is tuned on `cell`; when its largest
/// admissible energy is too small, copies are laid out on a cubic lattice of
/// spacing `cell.length()` and the torus is enlarged to hold them.
pub fn synthesize_certified(
    model: &NonlinearityModel,
    cell: &Grid,
    target: f64,
    opts: &SynthesisOptions,
) -> Result<Synthesis> {
    if !(target > 0.0) {
        return Err(Error::Precondition(format!("target energy {target} must be positive")));
    }
    let (p, _) = model
        .power_params()
        .ok_or_else(|| Error::Precondition("synthesis needs a pure power model".into()))?;
    let unit = realize(&DataRecipe { profile: opts.base.clone(), amplitude: 1.0, velocity_ratio: 0.0 }, cell)?;
    let base = BaseIntegrals {
        mass: unit.u0.l2_norm_sq(),
        grad: unit.u0.grad_norm_sq(),
        potential: unit.u0.integrate_map(|s| model.antiderivative(s)),
        p,
    };

    let (sigma, (lo, hi)) = opts
        .sigma_candidates
        .iter()
        .find_map(|&s| base.window(s, model.epsilon, opts.margin).map(|w| (s, w)))
        .ok_or_else(|| {
            Error::Infeasible(format!("empty amplitude window for every σ in {:?}", opts.sigma_candidates))
        })?;
    let e_max = base.energy(lo, sigma);
    let aim = opts.overshoot * target;

    let dim = cell.dim();
    let mut side = 1usize;
    while (side.pow(dim as u32) as f64) * e_max < aim {
        side += 1;
    }
    let copies = side.pow(dim as u32);
    let per_copy = aim / copies as f64;

    // E decreases on [lo, hi): bisect for the per-copy energy.
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if base.energy(mid, sigma) > per_copy {
            a = mid;
        } else {
            b = mid;
        }
    }
    let lambda = a;

    let (grid, profile) = if copies == 1 {
        (*cell, opts.base.clone())
    } else {
        let grid = Grid::new(dim, side as f64 * cell.length(), side * cell.points())?;
        let profile = match &opts.base {
            Profile::FourierMode { k } => Profile::FourierMode { k: k * side },
            compact if compact.support_radius().is_some() => Profile::MultiBump {
                count: copies,
                separation: cell.length(),
                base: Box::new(compact.clone()),
            },
            other => {
                return Err(Error::Precondition(format!("{other:?} cannot be replicated")));
            }
        };
        (grid, profile)
    };
    let recipe = DataRecipe { profile, amplitude: lambda, velocity_ratio: sigma };
    let data = realize(&recipe, &grid)?;
    let certificate = check_static_conditions(&data.u0, &data.u1, model)?;
    if !certificate.all_pass() || certificate.energy < target || certificate.energy > 1.05 * target {
        return Err(Error::Infeasible(format!(
            "closed-loop check failed: E(0) = {} for target {target} ({copies} copies, λ = {lambda}, σ = {sigma})",
            certificate.energy
        )));
    }
    Ok(Synthesis { recipe, grid, data, certificate, copies })
}

/// `u0 = λ ū`, `u1 = 0`.
pub fn synthesize_subthreshold(p: f64, grid: &Grid, lambda: f64) -> Result<InitialData> {
    if lambda == 1.0 {
        return Err(Error::Precondition("λ = 1 puts the data on the Nehari manifold".into()));
    }
    realize(&DataRecipe { profile: Profile::SolitonScaled { p }, amplitude: lambda, velocity_ratio: 0.0 }, grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn cubic() -> NonlinearityModel {
        NonlinearityModel::power(3.0).unwrap()
    }

    fn sine_grid() -> Grid {
        Grid::new(1, 2.0 * PI, 64).unwrap()
    }

    fn sine(lambda: f64, sigma: f64) -> InitialData {
        let r = DataRecipe { profile: Profile::FourierMode { k: 1 }, amplitude: lambda, velocity_ratio: sigma };
        realize(&r, &sine_grid()).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn fourier_mode_samples() {
        let d = sine(2.0, 0.1);
        let g = sine_grid();
        for i in 0..64 {
            let x = g.coordinate(i);
            assert!((d.u0.values()[i] - 2.0 * x.sin()).abs() < 1e-15);
            assert!((d.u1.values()[i] - 0.2 * x.sin()).abs() < 1e-15);
        }
        assert_eq!(d.support_half_span, None);
    }

    #[test]
    fn gaussian_peak_is_amplitude() {
        let g = Grid::new(2, 20.0, 64).unwrap();
        let r = DataRecipe { profile: Profile::GaussianBump { width: 1.5 }, amplitude: 3.0, velocity_ratio: 0.0 };
        let d = realize(&r, &g).unwrap();
        assert_eq!(d.u0.max_abs(), 3.0);
        assert!(d.u1.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn support_and_resolution_errors() {
        let g = Grid::new(1, 10.0, 64).unwrap();
        let too_wide = DataRecipe { profile: Profile::CosineBump { radius: 5.0 }, amplitude: 1.0, velocity_ratio: 0.0 };
        assert!(matches!(realize(&too_wide, &g), Err(Error::Support(_))));
        let too_thin = DataRecipe { profile: Profile::CosineBump { radius: 0.3 }, amplitude: 1.0, velocity_ratio: 0.0 };
        assert!(matches!(realize(&too_thin, &g), Err(Error::Resolution { .. })));
        let crowded = DataRecipe {
            profile: Profile::MultiBump { count: 2, separation: 1.5, base: Box::new(Profile::CosineBump { radius: 1.0 }) },
            amplitude: 1.0,
            velocity_ratio: 0.0,
        };
        assert!(matches!(realize(&crowded, &g), Err(Error::Precondition(_))));
    }

    #[test]
    fn two_bumps_double_every_functional() {
        let model = cubic();
        let base = Profile::GaussianBump { width: 1.0 };
        let one = realize(&DataRecipe { profile: base.clone(), amplitude: 2.1, velocity_ratio: 0.1 }, &Grid::new(1, 16.0, 128).unwrap()).unwrap();
        let multi = DataRecipe {
            profile: Profile::MultiBump { count: 2, separation: 16.0, base: Box::new(base) },
            amplitude: 2.1,
            velocity_ratio: 0.1,
        };
        let two = realize(&multi, &Grid::new(1, 32.0, 256).unwrap()).unwrap();
        let a = check_static_conditions(&one.u0, &one.u1, &model).unwrap();
        let b = check_static_conditions(&two.u0, &two.u1, &model).unwrap();
        assert!(rel(b.mass, 2.0 * a.mass) < 1e-12);
        assert!(rel(b.energy, 2.0 * a.energy) < 1e-10);
        assert!(rel(b.nehari, 2.0 * a.nehari) < 1e-10);
        assert!(rel(b.inner, 2.0 * a.inner) < 1e-12);
    }

    #[test]
    fn certified_sine_values_match_closed_forms() {
        let (l2, sigma): (f64, f64) = (4.1, 0.1);
        let d = sine(l2.sqrt(), sigma);
        let c = check_static_conditions(&d.u0, &d.u1, &cubic()).unwrap();
        let e = 0.5 * PI * (sigma * sigma * l2 + 2.0 * l2 - 3.0 * l2 * l2 / 8.0);
        assert!(rel(c.energy, e) < 1e-12);
        assert!((c.energy - 3.043).abs() < 1e-3);
        assert!(rel(c.mass, l2 * PI) < 1e-12);
        assert!(rel(c.nehari, 2.0 * l2 * PI - 0.75 * l2 * l2 * PI) < 1e-12);
        assert!(rel(c.inner, 0.41 * PI) < 1e-12);
        assert!(c.all_pass());
    }

    #[test]
    fn failing_certificates() {
        let c = check_static_conditions(&sine(0.1, 0.0).u0, &sine(0.1, 0.0).u1, &cubic()).unwrap();
        assert!(!c.nehari_negative && !c.inner_positive);
        let d = sine(2.0, -0.1);
        let c = check_static_conditions(&d.u0, &d.u1, &cubic()).unwrap();
        assert!(!c.inner_positive && c.nehari_negative);
        let z = Field::zeros(sine_grid());
        let c = check_static_conditions(&z, &z, &cubic()).unwrap();
        assert!(!c.energy_positive);
    }

    #[test]
    fn sine_window_matches_algebra() {
        // Sine family, p = 3: admissible iff 4 + 8σ²/3 <= λ² < 16/3 + 8σ²/3.
        let model = cubic();
        for &sigma in &[0.1, 0.5, 1.0] {
            for i in 0..200 {
                let l2 = 3.5 + 0.015 * i as f64;
                let d = sine(l2.sqrt(), sigma);
                let c = check_static_conditions(&d.u0, &d.u1, &model).unwrap();
                let lo = 4.0 + 8.0 * sigma * sigma / 3.0;
                let hi = 16.0 / 3.0 + 8.0 * sigma * sigma / 3.0;
                if (l2 - lo).abs() > 1e-9 && (l2 - hi).abs() > 1e-9 {
                    assert_eq!(c.all_pass(), l2 >= lo && l2 < hi, "σ = {sigma}, λ² = {l2}");
                }
            }
        }
    }

    #[test]
    fn synthesizes_single_sine_for_small_target() {
        let s = synthesize_certified(&cubic(), &sine_grid(), 3.0, &SynthesisOptions::default()).unwrap();
        assert_eq!(s.copies, 1);
        assert_eq!(s.recipe.velocity_ratio, 0.1);
        let l2 = s.recipe.amplitude.powi(2);
        assert!((4.0..4.2).contains(&l2), "λ² = {l2}");
        assert!(s.certificate.energy >= 3.0 && s.certificate.energy <= 3.15);
    }

    #[test]
    fn synthesizes_by_replication() {
        let target = 400.0 / 3.0;
        let s = synthesize_certified(&cubic(), &sine_grid(), target, &SynthesisOptions::default()).unwrap();
        assert!(s.copies > 1);
        assert_eq!(s.grid.length(), s.copies as f64 * 2.0 * PI);
        assert!(s.certificate.all_pass());
        assert!(s.certificate.energy >= target && s.certificate.energy <= 1.05 * target);

        let opts = SynthesisOptions { base: Profile::GaussianBump { width: 1.0 }, ..Default::default() };
        let cell = Grid::new(1, 16.0, 128).unwrap();
        let s = synthesize_certified(&cubic(), &cell, target, &opts).unwrap();
        assert!(s.copies > 1 && s.certificate.all_pass());
        assert!(s.data.support_half_span.unwrap() < 0.5 * s.grid.length());
    }

    #[test]
    fn synthesis_preconditions() {
        let opts = SynthesisOptions::default();
        assert!(synthesize_certified(&cubic(), &sine_grid(), 0.0, &opts).is_err());
        assert!(synthesize_certified(&cubic(), &sine_grid(), -1.0, &opts).is_err());
    }

    #[test]
    fn subthreshold_closed_forms() {
        let g = Grid::new(1, 60.0, 1024).unwrap();
        let model = cubic();
        for (lambda, e_expected) in [(1.2, 1.0752), (0.5, (16.0 / 3.0) * (0.125 - 0.015625))] {
            let d = synthesize_subthreshold(3.0, &g, lambda).unwrap();
            let c = check_static_conditions(&d.u0, &d.u1, &model).unwrap();
            assert!((c.energy - e_expected).abs() < 1e-10, "{} vs {e_expected}", c.energy);
            assert!(c.energy < 4.0 / 3.0);
            assert_eq!(c.nehari < 0.0, lambda > 1.0);
        }
        assert!(synthesize_subthreshold(3.0, &g, 1.0).is_err());
    }
}
