//! Verdict on a blow-up run: the static conditions, the time bound from the
//! concavity argument, and the inequalities that argument needs along the
//! computed trajectory.
//!
//! With `α = ε/4` the function `G^(-α)` is concave, so it lies below its
//! tangent at `t = 0`, which vanishes at `4 G(0) / (ε G'(0))`. The bound
//! `ε G(0) / (4 G'(0))` is reported next to it for comparison only.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::functionals::DiagnosticsRecord;
use crate::initial_data::{check_static_conditions, StaticCertificate};
use crate::nonlinearity::NonlinearityModel;
use crate::solver::{self, Outcome, SolverConfig, TrajectoryResult};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BlowupBound {
    /// `4 G0 / (eps G0')`.
    pub t_derived: f64,
    /// `eps G0 / (4 G0')`, the reciprocal form. Smaller than `t_derived` by
    /// `16 / eps^2` and not enforced; reported for comparison only.
    pub t_alternative: f64,
}

pub fn blowup_time_bound(g0: f64, dg0: f64, eps: f64) -> Result<BlowupBound> {
    if !(g0 > 0.0 && dg0 > 0.0 && eps > 0.0) {
        return Err(Error::Precondition(format!(
            "bound needs G(0) > 0, G'(0) > 0, eps > 0 (got {g0}, {dg0}, {eps})"
        )));
    }
    Ok(BlowupBound { t_derived: 4.0 * g0 / (eps * dg0), t_alternative: eps * g0 / (4.0 * dg0) })
}

/// Tolerances of the trajectory monitors. All are pinned; change them only
/// together with the acceptance tests.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MonitorTolerances {
    /// Concavity gap may dip to `-concavity_rel * (|G'' G| + G'^2)`.
    pub concavity_rel: f64,
    /// Second difference of `G^(-α)` may reach
    /// `convexity_rel * (|g1| + |g2| + |g3|) / (t3 - t1)^2`.
    pub convexity_rel: f64,
    /// Absolute slack on the tangent-line bound for `G^(-α)`.
    pub chord_abs: f64,
}

impl Default for MonitorTolerances {
    fn default() -> Self {
        Self { concavity_rel: 1e-9, convexity_rel: 1e-10, chord_abs: 1e-6 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MonitorKind {
    NehariNonNegative,
    DgNonPositive,
    ConcavityGap,
    /// Discrete `(G^(-α))'' > tol`.
    Convexity,
    GNotIncreasing,
    MassBelowThreshold,
    /// `G^(-α)` above its tangent line at `t = 0`.
    Chord,
    /// Blow-up detected after the derived bound.
    BoundExceeded,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub kind: MonitorKind,
    pub t: f64,
    pub value: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct TrajectoryReport {
    pub records_checked: usize,
    pub violations: Vec<Violation>,
}

impl TrajectoryReport {
    pub fn count(&self, kind: MonitorKind) -> usize {
        self.violations.iter().filter(|v| v.kind == kind).count()
    }

    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Per-record and per-triple checks: `I < 0`, `G' > 0`, the concavity gap,
/// the discrete second difference of `G^(-α)`, and strict growth of `G`.
/// Non-finite records are skipped.
pub fn monitor_trajectory(records: &[DiagnosticsRecord], eps: f64, tol: &MonitorTolerances) -> TrajectoryReport {
    let alpha = eps / 4.0;
    let recs: Vec<&DiagnosticsRecord> = records.iter().filter(|r| r.is_finite()).collect();
    let mut out = TrajectoryReport { records_checked: recs.len(), violations: Vec::new() };
    let mut flag = |kind, t, value| out.violations.push(Violation { kind, t, value });

    for r in &recs {
        if r.nehari >= 0.0 {
            flag(MonitorKind::NehariNonNegative, r.t, r.nehari);
        }
        if r.dg <= 0.0 {
            flag(MonitorKind::DgNonPositive, r.t, r.dg);
        }
        let scale = (r.ddg * r.g).abs() + r.dg * r.dg;
        if r.concavity_gap < -tol.concavity_rel * scale {
            flag(MonitorKind::ConcavityGap, r.t, r.concavity_gap);
        }
    }
    for w in recs.windows(2) {
        if w[1].g <= w[0].g {
            flag(MonitorKind::GNotIncreasing, w[1].t, w[1].g - w[0].g);
        }
    }
    for w in recs.windows(3) {
        let (t1, t2, t3) = (w[0].t, w[1].t, w[2].t);
        let (g1, g2, g3) = (w[0].g.powf(-alpha), w[1].g.powf(-alpha), w[2].g.powf(-alpha));
        let second = 2.0 * ((g3 - g2) / (t3 - t2) - (g2 - g1) / (t2 - t1)) / (t3 - t1);
        let limit = tol.convexity_rel * (g1.abs() + g2.abs() + g3.abs()) / ((t3 - t1) * (t3 - t1));
        if second > limit {
            flag(MonitorKind::Convexity, t2, second);
        }
    }
    out
}

/// Checks that need the initial data: `G(t) > threshold` for `t > 0` and the
/// tangent-line bound `G(t)^(-α) <= G(0)^(-α) (1 - t / t_derived) + tol`.
pub fn monitor_against_bound(
    records: &[DiagnosticsRecord],
    eps: f64,
    threshold: f64,
    bound: &BlowupBound,
    tol: &MonitorTolerances,
) -> Vec<Violation> {
    let alpha = eps / 4.0;
    let Some(first) = records.first() else { return Vec::new() };
    let (t0, head) = (first.t, first.g.powf(-alpha));
    let mut out = Vec::new();
    for r in records.iter().filter(|r| r.is_finite()) {
        let s = r.t - t0;
        if s > 0.0 && r.g <= threshold {
            out.push(Violation { kind: MonitorKind::MassBelowThreshold, t: r.t, value: r.g });
        }
        let excess = r.g.powf(-alpha) - head * (1.0 - s / bound.t_derived);
        if excess > tol.chord_abs {
            out.push(Violation { kind: MonitorKind::Chord, t: r.t, value: excess });
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    CertifiedBlowup,
    StaticFail,
    MonitorViolation,
    Inconclusive,
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::CertifiedBlowup => "certified_blowup",
            Verdict::StaticFail => "static_fail",
            Verdict::MonitorViolation => "monitor_violation",
            Verdict::Inconclusive => "inconclusive",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Verdict::CertifiedBlowup => 0,
            Verdict::StaticFail => 2,
            Verdict::MonitorViolation => 3,
            Verdict::Inconclusive => 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlowupCertificate {
    #[serde(rename = "static")]
    pub static_part: StaticCertificate,
    pub alpha: f64,
    pub bound: Option<BlowupBound>,
    pub trajectory: TrajectoryReport,
    pub outcome: Option<Outcome>,
    pub verdict: Verdict,
}

/// Static failure first, then any monitor violation (including detection
/// after the derived bound), then detection within the bound. A run that
/// never detects blow-up is inconclusive.
pub fn assemble(
    static_part: StaticCertificate,
    bound: Option<BlowupBound>,
    mut trajectory: TrajectoryReport,
    outcome: Option<Outcome>,
) -> BlowupCertificate {
    let alpha = static_part.epsilon / 4.0;
    if let (Some(b), Some(Outcome::BlowupDetected { t_detect, .. })) = (bound, outcome) {
        if t_detect > b.t_derived {
            trajectory.violations.push(Violation { kind: MonitorKind::BoundExceeded, t: t_detect, value: b.t_derived });
        }
    }
    let verdict = if !static_part.all_pass() {
        Verdict::StaticFail
    } else if !trajectory.is_clean() {
        Verdict::MonitorViolation
    } else {
        match (outcome, bound) {
            (Some(Outcome::BlowupDetected { .. }), Some(_)) => Verdict::CertifiedBlowup,
            _ => Verdict::Inconclusive,
        }
    };
    BlowupCertificate { static_part, alpha, bound, trajectory, outcome, verdict }
}

/// Static check, solver run, monitors and verdict in one call. The solver is
/// run even when the static part fails so the outcome is always reported.
pub fn certify(
    u0: &Field,
    u1: &Field,
    model: &NonlinearityModel,
    config: &SolverConfig,
    tol: &MonitorTolerances,
) -> Result<(BlowupCertificate, TrajectoryResult)> {
    let static_part = check_static_conditions(u0, u1, model)?;
    let state = crate::field::State::new(u0.clone(), u1.clone(), 0.0)?;
    let result = solver::run(&state, model, config)?;
    Ok((certify_trajectory(static_part, &result, model.epsilon, tol), result))
}

/// Verdict for a trajectory that was already computed.
pub fn certify_trajectory(
    static_part: StaticCertificate,
    result: &TrajectoryResult,
    eps: f64,
    tol: &MonitorTolerances,
) -> BlowupCertificate {
    let bound = result.records.first().and_then(|r| blowup_time_bound(r.g, r.dg, eps).ok());
    let mut trajectory = monitor_trajectory(&result.records, eps, tol);
    if let Some(b) = &bound {
        trajectory.violations.extend(monitor_against_bound(&result.records, eps, static_part.threshold, b, tol));
    }
    assemble(static_part, bound, trajectory, Some(result.outcome))
}

impl BlowupCertificate {
    /// Human-readable report.
    pub fn report(&self) -> String {
        let mut s = String::new();
        let st = &self.static_part;
        let mark = |ok: bool| if ok { "pass" } else { "FAIL" };
        let _ = writeln!(s, "static conditions (eps = {}):", st.epsilon);
        let values = [st.energy, st.mass, st.nehari, st.inner];
        for ((label, ok), v) in st.conditions().iter().zip(values) {
            let _ = writeln!(s, "  {:<24} {:>5}   value {v:.17e}", label, mark(*ok));
        }
        let _ = writeln!(s, "  threshold {:.17e}", st.threshold);
        let _ = writeln!(s, "alpha = {}", self.alpha);
        match &self.bound {
            Some(b) => {
                let _ = writeln!(s, "t_bound_derived    = {:.17e}", b.t_derived);
                let _ = writeln!(s, "t_bound_alternative = {:.17e}", b.t_alternative);
            }
            None => {
                let _ = writeln!(s, "no time bound (G'(0) <= 0)");
            }
        }
        if let Some(o) = &self.outcome {
            let _ = writeln!(s, "solver outcome: {}", o.label());
            if let Some(t) = o.t_detect() {
                let _ = writeln!(s, "t_detect = {t:.17e}");
            }
        }
        let _ = writeln!(
            s,
            "monitors: {} records, {} violations",
            self.trajectory.records_checked,
            self.trajectory.violations.len()
        );
        for v in self.trajectory.violations.iter().take(20) {
            let _ = writeln!(s, "  {:?} at t = {:.17e} (value {:.17e})", v.kind, v.t, v.value);
        }
        let _ = writeln!(s, "verdict: {}", self.verdict.label());
        s
    }

    /// `key=value` lines for scripts.
    pub fn key_values(&self) -> String {
        let st = &self.static_part;
        let mut kv = vec![
            ("verdict", self.verdict.label().to_string()),
            ("epsilon", format!("{:.17e}", st.epsilon)),
            ("alpha", format!("{:.17e}", self.alpha)),
            ("E0", format!("{:.17e}", st.energy)),
            ("G0", format!("{:.17e}", st.mass)),
            ("I0", format!("{:.17e}", st.nehari)),
            ("inner0", format!("{:.17e}", st.inner)),
            ("threshold", format!("{:.17e}", st.threshold)),
            ("tc1", st.energy_positive.to_string()),
            ("tc2", st.mass_above_threshold.to_string()),
            ("tc3", st.nehari_negative.to_string()),
            ("tc4", st.inner_positive.to_string()),
            ("violations", self.trajectory.violations.len().to_string()),
        ];
        if let Some(b) = &self.bound {
            kv.push(("t_bound_derived", format!("{:.17e}", b.t_derived)));
            kv.push(("t_bound_alternative", format!("{:.17e}", b.t_alternative)));
        }
        if let Some(o) = &self.outcome {
            kv.push(("outcome", o.label().to_string()));
            if let Some(t) = o.t_detect() {
                kv.push(("t_detect", format!("{t:.17e}")));
            }
        }
        kv.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn record(t: f64, g: f64, dg: f64, ddg: f64, nehari: f64) -> DiagnosticsRecord {
        DiagnosticsRecord {
            t,
            energy: 1.0,
            nehari,
            action: None,
            g,
            dg,
            ddg,
            u_max: 1.0,
            tail: 0.0,
            concavity_gap: ddg * g - 1.5 * dg * dg,
        }
    }

    fn passing_static() -> StaticCertificate {
        StaticCertificate {
            epsilon: 2.0,
            energy: 1.0,
            mass: 5.0,
            nehari: -1.0,
            inner: 1.0,
            threshold: 4.0,
            energy_positive: true,
            mass_above_threshold: true,
            nehari_negative: true,
            inner_positive: true,
        }
    }

    #[test]
    fn bound_examples() {
        let b = blowup_time_bound(4.1 * PI, 0.82 * PI, 2.0).unwrap();
        assert!((b.t_derived - 10.0).abs() < 1e-12);
        assert!((b.t_alternative - 2.5).abs() < 1e-12);
        let b = blowup_time_bound(1.0, 1.0, 1.0).unwrap();
        assert_eq!((b.t_derived, b.t_alternative), (4.0, 0.25));
        let b = blowup_time_bound(3.0, 7.0, 4.0).unwrap();
        assert_eq!(b.t_derived, b.t_alternative);
        assert!(blowup_time_bound(1.0, 0.0, 2.0).is_err());
        assert!(blowup_time_bound(-1.0, 1.0, 2.0).is_err());
        assert!(blowup_time_bound(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn bound_ratio_is_sixteen_over_eps_squared() {
        for eps in [0.5, 1.0, 2.0, 4.0, 0.1, 7.3] {
            let b = blowup_time_bound(2.7, 0.3, eps).unwrap();
            assert!((b.t_derived / b.t_alternative - 16.0 / (eps * eps)).abs() < 1e-12 * 16.0 / (eps * eps));
        }
    }

    #[test]
    fn constant_records_violate_dg_everywhere() {
        let recs: Vec<_> = (0..5).map(|i| record(i as f64, 1.0, 0.0, 0.0, -1.0)).collect();
        let rep = monitor_trajectory(&recs, 2.0, &MonitorTolerances::default());
        assert_eq!(rep.count(MonitorKind::DgNonPositive), 5);
        assert_eq!(rep.count(MonitorKind::GNotIncreasing), 4);
        assert_eq!(rep.count(MonitorKind::NehariNonNegative), 0);
    }

    #[test]
    fn exact_blowup_profile_is_clean() {
        // G = c/(T - t)^(1/alpha) makes G^(-alpha) linear, the borderline case.
        let (c, big_t, alpha) = (2.0_f64, 3.0_f64, 0.5_f64);
        let recs: Vec<_> = (0..50)
            .map(|i| {
                let t = 0.05 * i as f64;
                let g = c / (big_t - t).powf(1.0 / alpha);
                let dg = g * (1.0 / alpha) / (big_t - t);
                let ddg = dg * (1.0 / alpha + 1.0) / (big_t - t);
                record(t, g, dg, ddg, -1.0)
            })
            .collect();
        let rep = monitor_trajectory(&recs, 4.0 * alpha, &MonitorTolerances::default());
        assert!(rep.is_clean(), "{:?}", rep.violations.first());
        let b = blowup_time_bound(recs[0].g, recs[0].dg, 2.0).unwrap();
        assert!((b.t_derived - big_t).abs() < 1e-12);
        assert!(monitor_against_bound(&recs, 2.0, 0.0, &b, &MonitorTolerances::default()).is_empty());
    }

    #[test]
    fn convex_bump_in_g_power_is_flagged() {
        // G^(-alpha) = 1 + t^2 is convex.
        let recs: Vec<_> = (0..5)
            .map(|i| {
                let t = i as f64 * 0.1;
                record(t, (1.0 + t * t).powf(-2.0), 1.0, 1e3, -1.0)
            })
            .collect();
        let rep = monitor_trajectory(&recs, 2.0, &MonitorTolerances::default());
        assert_eq!(rep.count(MonitorKind::Convexity), 3);
    }

    #[test]
    fn verdict_rules() {
        let detect = |t| Some(Outcome::BlowupDetected { t_detect: t, t_last_regular: t - 1e-3 });
        let bound = Some(BlowupBound { t_derived: 10.0, t_alternative: 2.5 });
        let clean = TrajectoryReport::default();

        assert_eq!(assemble(passing_static(), bound, clean.clone(), detect(9.2)).verdict, Verdict::CertifiedBlowup);
        let late = assemble(passing_static(), bound, clean.clone(), detect(10.5));
        assert_eq!(late.verdict, Verdict::MonitorViolation);
        assert_eq!(late.trajectory.count(MonitorKind::BoundExceeded), 1);
        let horizon = Some(Outcome::PropagationHorizonExceeded { t: 3.0 });
        assert_eq!(assemble(passing_static(), bound, clean.clone(), horizon).verdict, Verdict::Inconclusive);
        let reached = Some(Outcome::ReachedHorizon);
        assert_eq!(assemble(passing_static(), bound, clean.clone(), reached).verdict, Verdict::Inconclusive);

        let mut failing = passing_static();
        failing.inner_positive = false;
        let dirty = TrajectoryReport {
            records_checked: 1,
            violations: vec![Violation { kind: MonitorKind::ConcavityGap, t: 0.0, value: -1.0 }],
        };
        assert_eq!(assemble(failing, bound, dirty.clone(), detect(1.0)).verdict, Verdict::StaticFail);
        assert_eq!(assemble(passing_static(), bound, dirty, detect(1.0)).verdict, Verdict::MonitorViolation);
    }

    #[test]
    fn exit_codes() {
        let codes: Vec<i32> = [Verdict::CertifiedBlowup, Verdict::StaticFail, Verdict::MonitorViolation, Verdict::Inconclusive]
            .iter()
            .map(Verdict::exit_code)
            .collect();
        assert_eq!(codes, [0, 2, 3, 4]);
    }

    #[test]
    fn reports_render() {
        let c = assemble(passing_static(), Some(BlowupBound { t_derived: 10.0, t_alternative: 2.5 }), TrajectoryReport::default(), None);
        assert!(c.report().contains("verdict: inconclusive"));
        assert!(c.key_values().lines().any(|l| l == "verdict=inconclusive"));
        assert!(c.key_values().contains("t_bound_derived=1.00000000000000000e1"));
        assert!(serde_json::to_string(&c).unwrap().contains("\"static\""));
    }
}
