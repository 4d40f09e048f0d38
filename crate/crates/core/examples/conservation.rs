//! Energy drift of the split-step solver and its second-order decay.
use std::f64::consts::PI;

use kg_blowup::functionals::energy;
use kg_blowup::solver::{run, SolverConfig};
use kg_blowup::{Field, Grid, NonlinearityModel, State};

fn main() -> kg_blowup::Result<()> {
    let model = NonlinearityModel::power(3.0)?;
    let grid = Grid::new(1, 2.0 * PI, 256)?;
    let state = State::new(Field::from_fn(grid, |x| 1.2 * x[0].sin()), Field::zeros(grid), 0.0)?;
    let e0 = energy(&state, &model);
    let mut prev: Option<f64> = None;
    for dt in [4e-3, 2e-3, 1e-3, 5e-4] {
        let cfg = SolverConfig { t_end: 5.0, dt_init: dt, dt_max: dt, sample_every: 1, ..Default::default() };
        let r = run(&state, &model, &cfg)?;
        let drift = r.records.iter().map(|rec| ((rec.energy - e0) / e0).abs()).fold(0.0, f64::max);
        match prev {
            Some(d) => println!("dt = {dt:.0e}  drift = {drift:.3e}  ratio = {:.3}", d / drift),
            None => println!("dt = {dt:.0e}  drift = {drift:.3e}"),
        }
        prev = Some(drift);
    }
    Ok(())
}
