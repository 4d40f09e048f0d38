//! Full certification of the cubic sine data: static conditions, solver run,
//! trajectory monitors and the tangent-line time bound.
//!
//! `cargo run --release --example certify_sine -- [N] [lambda^2] [sigma]`
use std::f64::consts::PI;

use kg_blowup::certifier::{certify, MonitorTolerances};
use kg_blowup::initial_data::{realize, DataRecipe, Profile};
use kg_blowup::solver::SolverConfig;
use kg_blowup::{Grid, NonlinearityModel};

fn main() -> kg_blowup::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).map(|a| a.parse().expect("numeric argument")).collect();
    let n = args.first().copied().unwrap_or(512.0) as usize;
    let l2 = args.get(1).copied().unwrap_or(4.1);
    let sigma = args.get(2).copied().unwrap_or(0.1);

    let model = NonlinearityModel::power(3.0)?;
    let grid = Grid::new(1, 2.0 * PI, n)?;
    let data = realize(&DataRecipe { profile: Profile::FourierMode { k: 1 }, amplitude: l2.sqrt(), velocity_ratio: sigma }, &grid)?;
    let cfg = SolverConfig { t_end: 20.0, ..Default::default() };
    let (cert, result) = certify(&data.u0, &data.u1, &model, &cfg, &MonitorTolerances::default())?;
    print!("{}", cert.report());
    println!("{} steps, {:.2?}", result.steps, result.wall_time);
    Ok(())
}
