//! The nonlinear source term `f(u)` and its antiderivative `F(u)`.
//!
//! Every blow-up statement in this crate relies on the superlinearity
//! condition `f(s) s >= (2 + eps) F(s)`. For the pure power `b |s|^(p-1) s`
//! the ratio `f(s) s / F(s)` equals `p + 1` identically, so the largest
//! admissible margin is `eps = p - 1`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A closed-form nonlinearity supplied by the caller.
///
/// The pair is trusted to satisfy `F' = f`; [`NonlinearityModel::verify_superlinearity`]
/// and the quadrature tests only sample it, so the superlinearity condition is
/// checked on a finite grid and never for every real `s`.
#[derive(Clone)]
pub struct CustomNonlinearity {
    pub name: String,
    f: ScalarFn,
    antiderivative: ScalarFn,
    derivative: Option<ScalarFn>,
}

impl CustomNonlinearity {
    pub fn new(
        name: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        antiderivative: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            f: Arc::new(f),
            antiderivative: Arc::new(antiderivative),
            derivative: None,
        }
    }

    /// Attach an exact `f'`; otherwise a centered difference is used.
    pub fn with_derivative(mut self, df: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.derivative = Some(Arc::new(df));
        self
    }
}

impl fmt::Debug for CustomNonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomNonlinearity")
            .field("name", &self.name)
            .finish_non_exhaustive()
    }
}

#[derive(Clone, Debug)]
pub enum NonlinearityKind {
    /// `f(s) = b |s|^(p-1) s`, `F(s) = b |s|^(p+1) / (p+1)`.
    PurePower { p: f64, b: f64 },
    Custom(CustomNonlinearity),
}

#[derive(Clone, Debug)]
pub struct NonlinearityModel {
    pub kind: NonlinearityKind,
    /// Superlinearity margin in `f(s) s >= (2 + eps) F(s)`.
    pub epsilon: f64,
    /// Growth exponent used by the local-existence checks.
    pub p: f64,
}

/// Outcome of the sampled superlinearity check.
#[derive(Clone, Debug, PartialEq)]
pub struct SuperlinearityReport {
    pub ok: bool,
    /// Largest margin for which the inequality holds on the sample grid.
    pub max_eps: f64,
    /// First sample point violating the inequality at the model's margin.
    pub violation: Option<f64>,
}

/// The clause of the local-existence hypotheses that failed.
#[derive(Clone, Debug, PartialEq)]
pub enum LocalExistenceViolation {
    UnsupportedDimension(usize),
    NonzeroAtOrigin(f64),
    ExponentOutOfRange { p: f64, n: usize, upper: f64 },
    GrowthBound { lambda1: f64, lambda2: f64 },
}

impl fmt::Display for LocalExistenceViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::UnsupportedDimension(n) => write!(f, "dimension {n} is not in {{1, 2, 3}}"),
            Self::NonzeroAtOrigin(v) => write!(f, "f(0) = {v} is not zero"),
            Self::ExponentOutOfRange { p, n, upper } => {
                write!(f, "exponent p = {p} outside 1 < p < {upper} required for n = {n}")
            }
            Self::GrowthBound { lambda1, lambda2 } => write!(
                f,
                "Lipschitz growth bound fails near ({lambda1}, {lambda2}) for every sampled constant"
            ),
        }
    }
}

/// Relative tolerance for the superlinearity inequality.
const SUPERLINEAR_REL_TOL: f64 = 1e-9;
/// Points where `|F(s)|` is below this are skipped (the inequality reads 0 >= 0).
const SUPERLINEAR_F_FLOOR: f64 = 1e-300;

impl NonlinearityModel {
    /// Pure power model. `epsilon = None` selects the maximal margin `p - 1`.
    pub fn pure_power(p: f64, b: f64, epsilon: Option<f64>) -> Result<Self> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::InvalidModel(format!("exponent p = {p} must exceed 1")));
        }
        if !(b > 0.0) || !b.is_finite() {
            return Err(Error::InvalidModel(format!("coefficient b = {b} must be positive")));
        }
        let epsilon = epsilon.unwrap_or(p - 1.0);
        if !(epsilon > 0.0) {
            return Err(Error::InvalidModel(format!("margin eps = {epsilon} must be positive")));
        }
        Ok(Self { kind: NonlinearityKind::PurePower { p, b }, epsilon, p })
    }

    /// `|s|^(p-1) s` with the maximal margin.
    pub fn power(p: f64) -> Result<Self> {
        Self::pure_power(p, 1.0, None)
    }

    pub fn custom(nonlinearity: CustomNonlinearity, p: f64, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::InvalidModel(format!("margin eps = {epsilon} must be positive")));
        }
        let f0 = (nonlinearity.f)(0.0);
        if f0 != 0.0 {
            return Err(Error::InvalidModel(format!("f(0) = {f0} must vanish")));
        }
        Ok(Self { kind: NonlinearityKind::Custom(nonlinearity), epsilon, p })
    }

    /// `f = 0`: the linear Klein-Gordon equation.
    pub fn zero() -> Self {
        let nl = CustomNonlinearity::new("zero", |_| 0.0, |_| 0.0).with_derivative(|_| 0.0);
        Self { kind: NonlinearityKind::Custom(nl), epsilon: 1.0, p: 2.0 }
    }

    /// `(p, b)` for pure power models.
    pub fn power_params(&self) -> Option<(f64, f64)> {
        match self.kind {
            NonlinearityKind::PurePower { p, b } => Some((p, b)),
            NonlinearityKind::Custom(_) => None,
        }
    }

    #[inline]
    pub fn f(&self, s: f64) -> f64 {
        match &self.kind {
            NonlinearityKind::PurePower { p, b } => b * s.abs().powf(p - 1.0) * s,
            NonlinearityKind::Custom(c) => (c.f)(s),
        }
    }

    #[inline]
    pub fn antiderivative(&self, s: f64) -> f64 {
        match &self.kind {
            NonlinearityKind::PurePower { p, b } => b * s.abs().powf(p + 1.0) / (p + 1.0),
            NonlinearityKind::Custom(c) => (c.antiderivative)(s),
        }
    }

    /// `f'(s)`, used by the adaptive step law.
    #[inline]
    pub fn derivative(&self, s: f64) -> f64 {
        match &self.kind {
            NonlinearityKind::PurePower { p, b } => p * b * s.abs().powf(p - 1.0),
            NonlinearityKind::Custom(c) => match &c.derivative {
                Some(df) => df(s),
                None => {
                    let h = 1e-6 * s.abs().max(1.0);
                    ((c.f)(s + h) - (c.f)(s - h)) / (2.0 * h)
                }
            },
        }
    }

    /// Samples `f(s) s >= (2 + eps) F(s)` on a symmetric grid in `[-s_max, s_max]`:
    /// `n_samples` log-spaced magnitudes from `1e-6 s_max` to `s_max`, their
    /// negatives, and zero.
    pub fn verify_superlinearity(&self, s_max: f64, n_samples: usize) -> Result<SuperlinearityReport> {
        if n_samples < 2 {
            return Err(Error::Precondition("verify_superlinearity needs at least 2 samples".into()));
        }
        if !(s_max > 0.0) {
            return Err(Error::Precondition(format!("s_max = {s_max} must be positive")));
        }
        let lo = (s_max * 1e-6).ln();
        let hi = s_max.ln();
        let step = (hi - lo) / (n_samples - 1) as f64;
        let magnitudes = (0..n_samples).map(|i| (lo + step * i as f64).exp());
        let samples = std::iter::once(0.0).chain(magnitudes.flat_map(|m| [m, -m]));

        let mut min_ratio = f64::INFINITY;
        let mut violation = None;
        for s in samples {
            let big_f = self.antiderivative(s);
            if big_f.abs() < SUPERLINEAR_F_FLOOR {
                continue;
            }
            let lhs = self.f(s) * s;
            let rhs = (2.0 + self.epsilon) * big_f;
            if lhs < rhs - SUPERLINEAR_REL_TOL * rhs.abs() && violation.is_none() {
                violation = Some(s);
            }
            if big_f > 0.0 {
                min_ratio = min_ratio.min(lhs / big_f);
            }
        }
        Ok(SuperlinearityReport { ok: violation.is_none(), max_eps: min_ratio - 2.0, violation })
    }

    /// Hypotheses of the local existence theory: `f(0) = 0`, the growth bound
    /// `|f(a) - f(b)| <= c (|a|^(p-1) + |b|^(p-1)) |a - b|`, and
    /// `1 < p < n / (n - 2)` for `n = 3` (any `p > 1` for `n <= 2`).
    pub fn verify_local_existence_hypotheses(
        &self,
        n: usize,
    ) -> std::result::Result<(), LocalExistenceViolation> {
        if !(1..=3).contains(&n) {
            return Err(LocalExistenceViolation::UnsupportedDimension(n));
        }
        let f0 = self.f(0.0);
        if f0 != 0.0 {
            return Err(LocalExistenceViolation::NonzeroAtOrigin(f0));
        }
        let upper = if n <= 2 { f64::INFINITY } else { n as f64 / (n as f64 - 2.0) };
        if !(self.p > 1.0 && self.p < upper) {
            return Err(LocalExistenceViolation::ExponentOutOfRange { p: self.p, n, upper });
        }
        if let NonlinearityKind::Custom(_) = self.kind {
            self.check_growth_bound()?;
        }
        Ok(())
    }

    /// Estimates the growth-bound constant on a sample grid and fails if it is
    /// not finite (or absurdly large, which signals growth faster than `p`).
    fn check_growth_bound(&self) -> std::result::Result<(), LocalExistenceViolation> {
        let pts: Vec<f64> = (-40..=40).map(|i| f64::from(i) * 0.25).collect();
        let mut c_max: f64 = 0.0;
        let mut worst = (0.0, 0.0);
        for (i, &a) in pts.iter().enumerate() {
            for &b in &pts[i + 1..] {
                let weight = (a.abs().powf(self.p - 1.0) + b.abs().powf(self.p - 1.0)) * (a - b).abs();
                let diff = (self.f(a) - self.f(b)).abs();
                if weight == 0.0 {
                    continue;
                }
                let c = diff / weight;
                if !(c <= c_max) {
                    c_max = c;
                    worst = (a, b);
                }
            }
        }
        // Near the origin the ratio of a function growing like |s|^q with q < p
        // diverges; a bounded estimate is what the hypothesis asks for.
        if c_max.is_finite() && c_max < 1e6 {
            Ok(())
        } else {
            Err(LocalExistenceViolation::GrowthBound { lambda1: worst.0, lambda2: worst.1 })
        }
    }
}
