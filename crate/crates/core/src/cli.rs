//! The `kgblow` command line: INI run configurations, subcommand dispatch and
//! deterministic output files.
//!
//! ```ini
//! [equation]
//! kind = kg            ; or damped, with a = ... and optional t0 = ...
//! [model]
//! p = 3
//! b = 1
//! eps = auto
//! [grid]
//! n = 1
//! L = 2pi
//! N = 512
//! [data]
//! profile = fourier_mode
//! k = 1
//! amplitude_sq = 4.1
//! sigma = 0.1
//! [solver]
//! t_end = 20
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Parser, Subcommand};
use ini::Ini;
use rayon::prelude::*;

use crate::certifier::{self, BlowupCertificate, MonitorTolerances, Verdict};
use crate::damped::{damped_blowup_run, DampedConfig, DampedReport};
use crate::error::{Error, Result};
use crate::field::{self as field_io, Grid};
use crate::functionals::{format_float, DIAGNOSTICS_HEADER};
use crate::ground_state::{solve_ground_state_1d, solve_ground_state_radial, GroundState, ShootingOptions};
use crate::initial_data::{
    check_static_conditions, realize, synthesize_certified, DataRecipe, InitialData, Profile, StaticCertificate,
    SynthesisOptions,
};
use crate::nonlinearity::{LocalExistenceViolation, NonlinearityModel};
use crate::solver::{self, SolverConfig, TrajectoryResult};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 2;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_UNSUPPORTED: i32 = 65;

pub const SWEEP_HEADER: &str =
    "index,lambda,sigma,p,a,target_energy,E0,I0,outcome,t_detect,t_bound_derived,verdict,error";

#[derive(Clone, Debug, PartialEq)]
pub enum Equation {
    KleinGordon,
    Damped { a: f64, t0: Option<f64> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    pub p: f64,
    pub b: f64,
    /// `None` means `eps = p - 1`.
    pub eps: Option<f64>,
}

impl ModelSpec {
    pub fn build(&self) -> Result<NonlinearityModel> {
        NonlinearityModel::pure_power(self.p, self.b, self.eps)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum DataSpec {
    Recipe(DataRecipe),
    /// Synthesize certified data of this energy from `base`.
    Synthesize { target_energy: f64, base: Profile },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    /// Parameter name to values, in a fixed order.
    pub axes: Vec<(String, Vec<f64>)>,
}

impl SweepSpec {
    /// Cartesian product, last axis fastest. Empty when no axis is declared
    /// or any axis is empty.
    pub fn points(&self) -> Vec<Vec<(String, f64)>> {
        if self.axes.is_empty() || self.axes.iter().any(|(_, v)| v.is_empty()) {
            return Vec::new();
        }
        let mut out: Vec<Vec<(String, f64)>> = vec![Vec::new()];
        for (name, values) in &self.axes {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    values.iter().map(move |&v| {
                        let mut p = prefix.clone();
                        p.push((name.clone(), v));
                        p
                    })
                })
                .collect();
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub equation: Equation,
    pub model: ModelSpec,
    pub grid: Grid,
    pub data: DataSpec,
    pub solver: SolverConfig,
    /// Stop at the finite-propagation horizon of compact data.
    pub enforce_horizon: bool,
    pub out_dir: Option<PathBuf>,
    pub write_fields: bool,
    pub sweep: SweepSpec,
}

/// Reals with an optional `pi` factor: `2pi`, `0.5*pi`, `pi`, `-1e-3`.
pub fn parse_real(s: &str) -> Result<f64> {
    let t = s.trim();
    let bad = || Error::Config(format!("not a number: {s:?}"));
    let value = if let Some(head) = t.strip_suffix("pi") {
        let head = head.trim().trim_end_matches('*').trim();
        let factor = match head {
            "" => 1.0,
            "-" => -1.0,
            h => h.parse::<f64>().map_err(|_| bad())?,
        };
        factor * std::f64::consts::PI
    } else {
        t.parse::<f64>().map_err(|_| bad())?
    };
    if value.is_finite() { Ok(value) } else { Err(bad()) }
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',').map(str::trim).filter(|x| !x.is_empty()).map(parse_real).collect()
}

/// Key/value pairs of one section; keys must be consumed exactly once.
struct Section {
    name: String,
    entries: BTreeMap<String, String>,
}

impl Section {
    fn take(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key)
    }

    fn real(&mut self, key: &str) -> Result<Option<f64>> {
        self.take(key).map(|v| parse_real(&v).map_err(|e| self.context(key, e))).transpose()
    }

    fn real_or(&mut self, key: &str, default: f64) -> Result<f64> {
        Ok(self.real(key)?.unwrap_or(default))
    }

    fn count(&mut self, key: &str) -> Result<Option<usize>> {
        self.take(key)
            .map(|v| {
                v.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Config(format!("[{}] {key}: expected a nonnegative integer, got {v:?}", self.name)))
            })
            .transpose()
    }

    fn flag(&mut self, key: &str) -> Result<Option<bool>> {
        self.take(key)
            .map(|v| match v.trim() {
                "true" | "yes" | "1" => Ok(true),
                "false" | "no" | "0" => Ok(false),
                other => Err(Error::Config(format!("[{}] {key}: expected a boolean, got {other:?}", self.name))),
            })
            .transpose()
    }

    fn context(&self, key: &str, e: Error) -> Error {
        Error::Config(format!("[{}] {key}: {e}", self.name))
    }

    fn finish(self) -> Result<()> {
        match self.entries.keys().next() {
            Some(k) => Err(Error::Config(format!("unknown key [{}] {k}", self.name))),
            None => Ok(()),
        }
    }
}

const SECTIONS: [&str; 7] = ["equation", "model", "grid", "data", "solver", "output", "sweep"];
const SWEEP_AXES: [&str; 5] = ["lambda", "sigma", "p", "a", "target_energy"];

impl FromStr for RunConfig {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let mut sections: BTreeMap<String, Section> = BTreeMap::new();
        for (name, props) in ini.iter() {
            let Some(name) = name else {
                if let Some((k, _)) = props.iter().next() {
                    return Err(Error::Config(format!("key {k:?} outside any section")));
                }
                continue;
            };
            if !SECTIONS.contains(&name) {
                return Err(Error::Config(format!("unknown section [{name}]")));
            }
            let sec = sections
                .entry(name.to_string())
                .or_insert_with(|| Section { name: name.to_string(), entries: BTreeMap::new() });
            for (k, v) in props.iter() {
                if sec.entries.insert(k.to_string(), v.to_string()).is_some() {
                    return Err(Error::Config(format!("duplicate key [{name}] {k}")));
                }
            }
        }
        let mut section = |name: &str| {
            sections.remove(name).unwrap_or_else(|| Section { name: name.to_string(), entries: BTreeMap::new() })
        };

        let mut eq = section("equation");
        let equation = match eq.take("kind").as_deref().map(str::trim) {
            None | Some("kg") => Equation::KleinGordon,
            Some("damped") => Equation::Damped {
                a: eq.real("a")?.ok_or_else(|| Error::Config("[equation] damped needs a".into()))?,
                t0: eq.real("t0")?,
            },
            Some(other) => return Err(Error::Config(format!("[equation] kind: unknown equation {other:?}"))),
        };
        eq.finish()?;

        let mut m = section("model");
        if let Some(kind) = m.take("kind") {
            if kind.trim() != "pure_power" {
                return Err(Error::Config(format!(
                    "[model] kind: only pure_power is configurable, got {kind:?}"
                )));
            }
        }
        let model = ModelSpec {
            p: m.real_or("p", 3.0)?,
            b: m.real_or("b", 1.0)?,
            eps: match m.take("eps") {
                None => None,
                Some(v) if v.trim() == "auto" => None,
                Some(v) => Some(parse_real(&v).map_err(|e| m.context("eps", e))?),
            },
        };
        m.finish()?;
        let margin = model.build()?.verify_superlinearity(10.0, 1000)?;
        if !margin.ok {
            return Err(Error::Config(format!(
                "[model] eps = {:?} fails f(s)s >= (2 + eps)F(s); the largest admissible margin is {}",
                model.eps, margin.max_eps
            )));
        }

        let mut g = section("grid");
        let grid = Grid::new(
            g.count("n")?.unwrap_or(1),
            g.real_or("L", 2.0 * std::f64::consts::PI)?,
            g.count("N")?.unwrap_or(512),
        )?;
        g.finish()?;

        let mut d = section("data");
        let profile_name = d.take("profile").unwrap_or_else(|| "fourier_mode".into());
        let base = match profile_name.trim() {
            "fourier_mode" => Profile::FourierMode { k: d.count("k")?.unwrap_or(1) },
            "gaussian_bump" => Profile::GaussianBump { width: d.real_or("width", 1.0)? },
            "cosine_bump" => Profile::CosineBump { radius: d.real_or("radius", 1.0)? },
            "soliton_scaled" => Profile::SolitonScaled { p: model.p },
            other => return Err(Error::Config(format!("[data] profile: unknown profile {other:?}"))),
        };
        let copies = d.count("copies")?;
        let separation = d.real("separation")?;
        let amplitude = match (d.real("amplitude")?, d.real("amplitude_sq")?) {
            (Some(_), Some(_)) => {
                return Err(Error::Config("[data] give amplitude or amplitude_sq, not both".into()));
            }
            (Some(a), None) => Some(a),
            (None, Some(a2)) if a2 >= 0.0 => Some(a2.sqrt()),
            (None, Some(a2)) => return Err(Error::Config(format!("[data] amplitude_sq {a2} is negative"))),
            (None, None) => None,
        };
        let sigma = d.real("sigma")?;
        let target = d.real("target_energy")?;
        d.finish()?;
        let data = match target {
            Some(target_energy) => {
                if amplitude.is_some() || sigma.is_some() || copies.is_some() {
                    return Err(Error::Config(
                        "[data] target_energy chooses amplitude, sigma and copies itself".into(),
                    ));
                }
                DataSpec::Synthesize { target_energy, base }
            }
            None => {
                let profile = match copies {
                    Some(count) => Profile::MultiBump {
                        count,
                        separation: separation
                            .ok_or_else(|| Error::Config("[data] copies needs separation".into()))?,
                        base: Box::new(base),
                    },
                    None => base,
                };
                DataSpec::Recipe(DataRecipe {
                    profile,
                    amplitude: amplitude.unwrap_or(1.0),
                    velocity_ratio: sigma.unwrap_or(0.0),
                })
            }
        };

        let mut s = section("solver");
        let defaults = SolverConfig::default();
        let solver = SolverConfig {
            dt_init: s.real_or("dt_init", defaults.dt_init)?,
            dt_min: s.real_or("dt_min", defaults.dt_min)?,
            dt_max: s.real_or("dt_max", defaults.dt_max)?,
            t_end: s.real_or("t_end", defaults.t_end)?,
            blowup_amp_threshold: s.real_or("blowup_amp_threshold", defaults.blowup_amp_threshold)?,
            blowup_norm_factor: s.real_or("blowup_norm_factor", defaults.blowup_norm_factor)?,
            sample_every: s.count("sample_every")?.unwrap_or(defaults.sample_every),
            safety: s.real_or("safety", defaults.safety)?,
            dealias: s.flag("dealias")?.unwrap_or(defaults.dealias),
            support_half_span: None,
        };
        let enforce_horizon = s.flag("enforce_horizon")?.unwrap_or(true);
        s.finish()?;
        solver.validate()?;

        let mut o = section("output");
        let out_dir = o.take("dir").map(|d| PathBuf::from(d.trim()));
        let write_fields = o.flag("write_fields")?.unwrap_or(false);
        o.finish()?;

        let mut sw = section("sweep");
        let mut axes = Vec::new();
        for name in SWEEP_AXES {
            if let Some(v) = sw.take(name) {
                axes.push((name.to_string(), parse_list(&v).map_err(|e| sw.context(name, e))?));
            }
        }
        sw.finish()?;

        Ok(RunConfig {
            equation,
            model,
            grid,
            data,
            solver,
            enforce_horizon,
            out_dir,
            write_fields,
            sweep: SweepSpec { axes },
        })
    }
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path.as_ref())
            .map_err(|e| Error::Config(format!("{}: {e}", path.as_ref().display())))?;
        text.parse()
    }

    /// Copy with one sweep parameter applied.
    pub fn with_parameter(&self, name: &str, value: f64) -> Result<Self> {
        let mut c = self.clone();
        match (name, &mut c.data) {
            ("lambda", DataSpec::Recipe(r)) => r.amplitude = value,
            ("sigma", DataSpec::Recipe(r)) => r.velocity_ratio = value,
            ("p", data) => {
                c.model.p = value;
                if let DataSpec::Recipe(DataRecipe { profile: Profile::SolitonScaled { p }, .. }) = data {
                    *p = value;
                }
            }
            ("a", _) => {
                let t0 = match c.equation {
                    Equation::Damped { t0, .. } => t0,
                    Equation::KleinGordon => None,
                };
                c.equation = if value == 0.0 { Equation::KleinGordon } else { Equation::Damped { a: value, t0 } };
            }
            ("target_energy", data) => {
                let base = match data {
                    DataSpec::Recipe(r) => r.profile.clone(),
                    DataSpec::Synthesize { base, .. } => base.clone(),
                };
                *data = DataSpec::Synthesize { target_energy: value, base };
            }
            (other, DataSpec::Synthesize { .. }) if other == "lambda" || other == "sigma" => {
                return Err(Error::Config(format!("{other} cannot be swept together with target_energy")));
            }
            (other, _) => return Err(Error::Config(format!("unknown sweep parameter {other:?}"))),
        }
        Ok(c)
    }
}

/// Model, grid and realized data, validated before any time stepping.
pub struct Prepared {
    pub model: NonlinearityModel,
    pub grid: Grid,
    pub data: InitialData,
    pub recipe: DataRecipe,
    pub solver: SolverConfig,
}

pub fn prepare(config: &RunConfig) -> Result<Prepared> {
    let model = config.model.build()?;
    let (grid, data, recipe) = match &config.data {
        DataSpec::Recipe(recipe) => (config.grid, realize(recipe, &config.grid)?, recipe.clone()),
        DataSpec::Synthesize { target_energy, base } => {
            let opts = SynthesisOptions { base: base.clone(), ..Default::default() };
            let s = synthesize_certified(&model, &config.grid, *target_energy, &opts)?;
            (s.grid, s.data, s.recipe)
        }
    };
    let mut solver = config.solver.clone();
    if config.enforce_horizon {
        solver.support_half_span = data.support_half_span;
    }
    Ok(Prepared { model, grid, data, recipe, solver })
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(contents.as_bytes())?;
    Ok(())
}

pub fn diagnostics_csv(result: &TrajectoryResult) -> String {
    let mut s = String::with_capacity(200 * (result.records.len() + 1));
    s.push_str(DIAGNOSTICS_HEADER);
    s.push('\n');
    for r in &result.records {
        s.push_str(&r.to_csv_row());
        s.push('\n');
    }
    s
}

/// What one configuration produced.
pub enum RunProduct {
    Undamped { certificate: BlowupCertificate, result: TrajectoryResult },
    Damped(DampedReport),
}

impl RunProduct {
    pub fn result(&self) -> &TrajectoryResult {
        match self {
            RunProduct::Undamped { result, .. } => result,
            RunProduct::Damped(r) => &r.result,
        }
    }

    pub fn static_part(&self) -> &StaticCertificate {
        match self {
            RunProduct::Undamped { certificate, .. } => &certificate.static_part,
            RunProduct::Damped(r) => &r.static_part,
        }
    }

    /// Verdict; damped runs use the same codes but are never more than a
    /// monitored demonstration.
    pub fn verdict(&self) -> Verdict {
        match self {
            RunProduct::Undamped { certificate, .. } => certificate.verdict,
            RunProduct::Damped(r) => {
                if !r.static_part.all_pass() {
                    Verdict::StaticFail
                } else if r.nehari_violations + r.growth_violations > 0 {
                    Verdict::MonitorViolation
                } else if r.result.outcome.t_detect().is_some() {
                    Verdict::CertifiedBlowup
                } else {
                    Verdict::Inconclusive
                }
            }
        }
    }

    /// Damped runs report `blowup_observed` instead of `certified_blowup`.
    pub fn verdict_label(&self) -> &'static str {
        match (self, self.verdict()) {
            (RunProduct::Damped(_), Verdict::CertifiedBlowup) => "blowup_observed",
            (_, v) => v.label(),
        }
    }

    pub fn csv(&self) -> String {
        match self {
            RunProduct::Undamped { result, .. } => diagnostics_csv(result),
            RunProduct::Damped(r) => r.csv(),
        }
    }

    pub fn report(&self) -> String {
        match self {
            RunProduct::Undamped { certificate, .. } => certificate.report(),
            RunProduct::Damped(r) => {
                let st = &r.static_part;
                let mut s = format!("damped run (a = {}, T0 = {}): {}\n", r.config.a, r.t0, r.label());
                s.push_str("static conditions with the damped energy (working hypothesis):\n");
                for (label, ok) in st.conditions() {
                    s.push_str(&format!("  {:<24} {}\n", label, if ok { "pass" } else { "FAIL" }));
                }
                s.push_str(&format!("solver outcome: {}\n", r.result.outcome.label()));
                if let Some(t) = r.result.outcome.t_detect() {
                    s.push_str(&format!("t_detect = {t:.17e}\n"));
                }
                s.push_str(&format!("I >= 0 records: {}\n", r.nehari_violations));
                s.push_str(&format!("modified G not increasing: {}\n", r.growth_violations));
                s.push_str(&format!("monitored outcome: {}\n", self.verdict_label()));
                s
            }
        }
    }

    pub fn t_bound(&self) -> Option<f64> {
        match self {
            RunProduct::Undamped { certificate, .. } => certificate.bound.map(|b| b.t_derived),
            RunProduct::Damped(_) => None,
        }
    }
}

pub fn execute(config: &RunConfig, prepared: &Prepared) -> Result<RunProduct> {
    let Prepared { model, data, solver: solver_config, .. } = prepared;
    match config.equation {
        Equation::KleinGordon => {
            let static_part = check_static_conditions(&data.u0, &data.u1, model)?;
            let result = solver::run(&data.state(), model, solver_config)?;
            let certificate =
                certifier::certify_trajectory(static_part, &result, model.epsilon, &MonitorTolerances::default());
            Ok(RunProduct::Undamped { certificate, result })
        }
        Equation::Damped { a, t0 } => Ok(RunProduct::Damped(damped_blowup_run(
            &data.u0,
            &data.u1,
            model,
            DampedConfig { a, t0 },
            solver_config,
        )?)),
    }
}

fn write_outputs(dir: &Path, config: &RunConfig, prepared: &Prepared, product: &RunProduct) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_file(&dir.join("diagnostics.csv"), &product.csv())?;
    write_file(&dir.join("summary.json"), &(product.result().summary_json() + "\n"))?;
    write_file(&dir.join("certificate.txt"), &product.report())?;
    if let RunProduct::Undamped { certificate, .. } = product {
        write_file(&dir.join("certificate.kv"), &certificate.key_values())?;
    }
    if config.write_fields {
        field_io::write_binary(&prepared.data.u0, dir.join("u0.kgf"))?;
        field_io::write_binary(&prepared.data.u1, dir.join("u1.kgf"))?;
    }
    Ok(())
}

#[derive(Parser, Debug)]
#[command(name = "kgblow", about = "Blow-up experiments for the nonlinear Klein-Gordon equation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Run configuration (INI).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides [output] dir.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Concurrent sweep points.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Caps the time step (sets dt_init and dt_max).
    #[arg(long, global = true)]
    pub dt: Option<f64>,
    /// Overrides [solver] t_end.
    #[arg(long = "t-end", global = true)]
    pub t_end: Option<f64>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Evaluate the four static conditions only.
    Check,
    /// Integrate and write diagnostics.
    Run,
    /// Integrate, monitor and print a verdict.
    Certify,
    /// Compute the ground state and its level d.
    GroundState {
        #[arg(long, default_value_t = 3.0)]
        p: f64,
        #[arg(long, default_value_t = 1)]
        n: usize,
        /// Torus length (default depends on n).
        #[arg(long)]
        length: Option<f64>,
        /// Points per axis (default depends on n).
        #[arg(long)]
        points: Option<usize>,
    },
    /// Cartesian parameter sweep from [sweep].
    Sweep,
}

/// Entry point of the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match &cli.command {
        Command::GroundState { p, n, length, points } => cmd_ground_state(*p, *n, *length, *points, cli.out.as_deref()),
        _ => {
            let config = match load_config(&cli) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("kgblow: {e}");
                    return EXIT_USAGE;
                }
            };
            let out_dir = cli
                .out
                .clone()
                .or_else(|| config.out_dir.clone())
                .unwrap_or_else(|| PathBuf::from("kgblow_out"));
            match cli.command {
                Command::Check => cmd_check(&config),
                Command::Run => cmd_run(&config, &out_dir),
                Command::Certify => cmd_certify(&config, &out_dir),
                Command::Sweep => cmd_sweep(&config, &out_dir, cli.jobs),
                Command::GroundState { .. } => unreachable!(),
            }
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let path = cli.config.as_ref().ok_or_else(|| Error::Config("--config PATH is required".into()))?;
    let mut config = RunConfig::load(path)?;
    if let Some(dt) = cli.dt {
        config.solver.dt_init = dt;
        config.solver.dt_max = dt;
        config.solver.dt_min = config.solver.dt_min.min(dt);
    }
    if let Some(t) = cli.t_end {
        config.solver.t_end = t;
    }
    config.solver.validate()?;
    Ok(config)
}

fn prepare_or_report(config: &RunConfig) -> std::result::Result<Prepared, i32> {
    prepare(config).map_err(|e| {
        eprintln!("kgblow: invalid configuration: {e}");
        EXIT_USAGE
    })
}

pub fn cmd_check(config: &RunConfig) -> i32 {
    let prepared = match prepare_or_report(config) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let st = match check_static_conditions(&prepared.data.u0, &prepared.data.u1, &prepared.model) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("kgblow: {e}");
            return EXIT_INTERNAL;
        }
    };
    println!("eps = {}", st.epsilon);
    for ((label, ok), v) in st.conditions().iter().zip([st.energy, st.mass, st.nehari, st.inner]) {
        println!("{:<24} {:>5}   {}", label, if *ok { "pass" } else { "FAIL" }, format_float(v));
    }
    println!("threshold                        {}", format_float(st.threshold));
    if st.all_pass() { EXIT_OK } else { EXIT_FAIL }
}

fn run_and_write(config: &RunConfig, out_dir: &Path) -> std::result::Result<RunProduct, i32> {
    let prepared = prepare_or_report(config)?;
    let product = execute(config, &prepared).map_err(|e| {
        eprintln!("kgblow: {e}");
        EXIT_INTERNAL
    })?;
    write_outputs(out_dir, config, &prepared, &product).map_err(|e| {
        eprintln!("kgblow: writing {}: {e}", out_dir.display());
        EXIT_INTERNAL
    })?;
    Ok(product)
}

pub fn cmd_run(config: &RunConfig, out_dir: &Path) -> i32 {
    match run_and_write(config, out_dir) {
        Ok(product) => {
            println!("{}", product.result().summary_json());
            EXIT_OK
        }
        Err(code) => code,
    }
}

pub fn cmd_certify(config: &RunConfig, out_dir: &Path) -> i32 {
    match run_and_write(config, out_dir) {
        Ok(product) => {
            print!("{}", product.report());
            product.verdict().exit_code()
        }
        Err(code) => code,
    }
}

fn default_ground_grid(n: usize) -> (f64, usize) {
    match n {
        1 => (60.0, 1024),
        2 => (40.0, 256),
        _ => (40.0, 128),
    }
}

pub fn cmd_ground_state(p: f64, n: usize, length: Option<f64>, points: Option<usize>, out: Option<&Path>) -> i32 {
    let model = match NonlinearityModel::power(p) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("kgblow: {e}");
            return EXIT_UNSUPPORTED;
        }
    };
    if let Err(v) = model.verify_local_existence_hypotheses(n) {
        match v {
            LocalExistenceViolation::ExponentOutOfRange { upper, .. } => eprintln!(
                "kgblow: warning: p = {p} is outside the local existence range 1 < p < {upper} for n = {n}; \
                 refusing to compute a threshold for unsupported dynamics"
            ),
            other => eprintln!("kgblow: {other}"),
        }
        return EXIT_UNSUPPORTED;
    }
    let (dl, dn) = default_ground_grid(n);
    let grid = match Grid::new(n, length.unwrap_or(dl), points.unwrap_or(dn)) {
        Ok(g) => g,
        Err(e) => {
            eprintln!("kgblow: {e}");
            return EXIT_USAGE;
        }
    };
    let gs: Result<GroundState> = if n == 1 {
        solve_ground_state_1d(p, &grid, 1e-8)
    } else {
        solve_ground_state_radial(p, &grid, &ShootingOptions::default())
    };
    let gs = match gs {
        Ok(g) => g,
        Err(e) => {
            eprintln!("kgblow: {e}");
            return EXIT_INTERNAL;
        }
    };
    println!("p = {p}");
    println!("n = {n}");
    println!("u(0) = {}", format_float(gs.center));
    println!("d = {}", format_float(gs.d));
    println!("residual = {}", format_float(gs.residual));
    println!("relative_nehari = {}", format_float(gs.relative_nehari()));
    if let Some(dir) = out {
        let written = fs::create_dir_all(dir)
            .map_err(Error::from)
            .and_then(|_| field_io::write_binary(&gs.profile, dir.join("ground_state.kgf")));
        if let Err(e) = written {
            eprintln!("kgblow: {e}");
            return EXIT_INTERNAL;
        }
    }
    EXIT_OK
}

fn point_value(point: &[(String, f64)], name: &str) -> String {
    point.iter().find(|(n, _)| n == name).map(|(_, v)| format_float(*v)).unwrap_or_default()
}

fn sweep_row(index: usize, point: &[(String, f64)], config: &RunConfig, dir: &Path) -> String {
    let params: Vec<String> = SWEEP_AXES.iter().map(|name| point_value(point, name)).collect();
    let result = point
        .iter()
        .try_fold(config.clone(), |c, (name, v)| c.with_parameter(name, *v))
        .and_then(|c| {
            let prepared = prepare(&c)?;
            let product = execute(&c, &prepared)?;
            write_outputs(&dir.join(format!("point_{index:04}")), &c, &prepared, &product)?;
            Ok(product)
        });
    let tail = match result {
        Ok(product) => {
            let st = product.static_part();
            let outcome = product.result().outcome;
            [
                format_float(st.energy),
                format_float(st.nehari),
                outcome.label().to_string(),
                outcome.t_detect().map(format_float).unwrap_or_default(),
                product.t_bound().map(format_float).unwrap_or_default(),
                product.verdict_label().to_string(),
                String::new(),
            ]
        }
        Err(e) => {
            let msg = e.to_string().replace([',', '\n'], ";");
            [String::new(), String::new(), "error".into(), String::new(), String::new(), String::new(), msg]
        }
    };
    std::iter::once(index.to_string()).chain(params).chain(tail).collect::<Vec<_>>().join(",")
}

pub fn cmd_sweep(config: &RunConfig, out_dir: &Path, jobs: Option<usize>) -> i32 {
    let points = config.sweep.points();
    if let Err(e) = fs::create_dir_all(out_dir) {
        eprintln!("kgblow: {e}");
        return EXIT_INTERNAL;
    }
    let compute = || -> Vec<String> {
        points.par_iter().enumerate().map(|(i, p)| sweep_row(i, p, config, out_dir)).collect()
    };
    let rows = match jobs {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build() {
            Ok(pool) => pool.install(compute),
            Err(e) => {
                eprintln!("kgblow: {e}");
                return EXIT_INTERNAL;
            }
        },
        None => compute(),
    };
    let mut csv = String::from(SWEEP_HEADER);
    csv.push('\n');
    for r in &rows {
        csv.push_str(r);
        csv.push('\n');
    }
    if let Err(e) = write_file(&out_dir.join("sweep.csv"), &csv) {
        eprintln!("kgblow: {e}");
        return EXIT_INTERNAL;
    }
    println!("{} points written to {}", rows.len(), out_dir.join("sweep.csv").display());
    EXIT_OK
}

#[cfg(test)]
mod tests {
    use super::*;

    const SINE: &str = "\
[model]
p = 3
[grid]
n = 1
L = 2pi
N = 64
[data]
profile = fourier_mode
amplitude_sq = 4.1
sigma = 0.1
";

    #[test]
    fn parses_reals_with_pi() {
        assert_eq!(parse_real("2pi").unwrap(), 2.0 * std::f64::consts::PI);
        assert_eq!(parse_real(" pi ").unwrap(), std::f64::consts::PI);
        assert_eq!(parse_real("0.5*pi").unwrap(), 0.5 * std::f64::consts::PI);
        assert_eq!(parse_real("-1e-3").unwrap(), -1e-3);
        assert!(parse_real("two").is_err());
        assert!(parse_real("inf").is_err());
    }

    #[test]
    fn parses_sine_config() {
        let c: RunConfig = SINE.parse().unwrap();
        assert_eq!(c.grid, Grid::new(1, 2.0 * std::f64::consts::PI, 64).unwrap());
        match &c.data {
            DataSpec::Recipe(r) => {
                assert_eq!(r.amplitude, 4.1f64.sqrt());
                assert_eq!(r.velocity_ratio, 0.1);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(c.equation, Equation::KleinGordon);
        assert!(c.sweep.points().is_empty());
    }

    #[test]
    fn rejects_unknown_keys_and_sections() {
        assert!(format!("{SINE}[solver]\nbogus = 1\n").parse::<RunConfig>().is_err());
        assert!(format!("{SINE}[extra]\nx = 1\n").parse::<RunConfig>().is_err());
        assert!(format!("stray = 1\n{SINE}").parse::<RunConfig>().is_err());
        assert!(SINE.replace("N = 64", "N = 63").parse::<RunConfig>().is_err());
        assert!(SINE.replace("p = 3", "p = 0.5").parse::<RunConfig>().is_err());
        assert!(format!("{SINE}[data]\nsigma = 0.2\n").parse::<RunConfig>().is_err());
    }

    #[test]
    fn sweep_grid_is_cartesian_in_order() {
        let c: RunConfig = format!("{SINE}[sweep]\nlambda = 1, 2\nsigma = 0.1, 0.2, 0.3\n").parse().unwrap();
        let pts = c.sweep.points();
        assert_eq!(pts.len(), 6);
        assert_eq!(pts[1], vec![("lambda".to_string(), 1.0), ("sigma".to_string(), 0.2)]);
        let empty: RunConfig = format!("{SINE}[sweep]\nlambda =\n").parse().unwrap();
        assert!(empty.sweep.points().is_empty());
    }

    #[test]
    fn parameters_apply() {
        let c: RunConfig = SINE.parse().unwrap();
        let d = c.with_parameter("a", 0.1).unwrap();
        assert_eq!(d.equation, Equation::Damped { a: 0.1, t0: None });
        let e = c.with_parameter("target_energy", 30.0).unwrap();
        assert!(matches!(e.data, DataSpec::Synthesize { target_energy, .. } if target_energy == 30.0));
        assert!(e.with_parameter("lambda", 2.0).is_err());
    }

    #[test]
    fn csv_has_header_and_ten_columns() {
        let c: RunConfig = format!("{SINE}[solver]\nt_end = 0.1\n").parse().unwrap();
        let prepared = prepare(&c).unwrap();
        let product = execute(&c, &prepared).unwrap();
        let csv = product.csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(DIAGNOSTICS_HEADER));
        assert!(lines.all(|l| l.split(',').count() == 10));
    }
}
