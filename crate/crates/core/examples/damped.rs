//! Damped runs from the certified sine data for a few damping strengths.
use std::f64::consts::PI;

use kg_blowup::damped::{damped_blowup_run, DampedConfig};
use kg_blowup::initial_data::{realize, DataRecipe, Profile};
use kg_blowup::solver::SolverConfig;
use kg_blowup::{Grid, NonlinearityModel};

fn main() -> kg_blowup::Result<()> {
    let model = NonlinearityModel::power(3.0)?;
    let grid = Grid::new(1, 2.0 * PI, 256)?;
    let d = realize(&DataRecipe { profile: Profile::FourierMode { k: 1 }, amplitude: 4.1f64.sqrt(), velocity_ratio: 0.1 }, &grid)?;
    let cfg = SolverConfig { t_end: 20.0, ..Default::default() };
    for a in [0.0, 0.1, 0.5, 1.0, 2.0] {
        let rep = damped_blowup_run(&d.u0, &d.u1, &model, DampedConfig { a, t0: None }, &cfg)?;
        println!(
            "a = {a:<4} {:<16} t = {:?}  I >= 0 records: {}  modified G not growing: {}  ({})",
            rep.result.outcome.label(),
            rep.result.outcome.t_detect(),
            rep.nehari_violations,
            rep.growth_violations,
            rep.label()
        );
    }
    Ok(())
}
