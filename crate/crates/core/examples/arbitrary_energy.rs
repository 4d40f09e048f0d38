//! Certified blow-up data at any prescribed energy: copies of a certified
//! cell on an enlarged torus.
//!
//! `cargo run --release --example arbitrary_energy -- 3 30 300 [gaussian]`
use std::f64::consts::PI;

use kg_blowup::certifier::{certify, MonitorTolerances};
use kg_blowup::initial_data::{synthesize_certified, Profile, SynthesisOptions};
use kg_blowup::solver::SolverConfig;
use kg_blowup::{Grid, NonlinearityModel};

fn main() -> kg_blowup::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let gaussian = args.iter().any(|a| a == "gaussian");
    let mut targets: Vec<f64> = args.iter().filter_map(|a| a.parse().ok()).collect();
    if targets.is_empty() {
        targets = vec![3.0, 30.0, 300.0];
    }
    let model = NonlinearityModel::power(3.0)?;
    let (cell, opts) = if gaussian {
        (Grid::new(1, 16.0, 128)?, SynthesisOptions { base: Profile::GaussianBump { width: 1.0 }, ..Default::default() })
    } else {
        (Grid::new(1, 2.0 * PI, 128)?, SynthesisOptions::default())
    };
    for target in targets {
        let s = synthesize_certified(&model, &cell, target, &opts)?;
        let cfg = SolverConfig { t_end: 20.0, support_half_span: s.data.support_half_span, ..Default::default() };
        let (cert, result) = certify(&s.data.u0, &s.data.u1, &model, &cfg, &MonitorTolerances::default())?;
        println!(
            "target {target:>8}: E = {:>10.3}  copies = {:>4}  sigma = {}  amplitude = {:.6}  {}  t = {:?}  bound = {:.4}",
            cert.static_part.energy,
            s.copies,
            s.recipe.velocity_ratio,
            s.recipe.amplitude,
            cert.verdict.label(),
            result.outcome.t_detect(),
            cert.bound.map_or(f64::NAN, |b| b.t_derived),
        );
    }
    Ok(())
}
