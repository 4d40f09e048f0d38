//! Scan of the sine family `u0 = λ sin x`, `u1 = σ u0` through the four static conditions.
use std::f64::consts::PI;

use kg_blowup::initial_data::{check_static_conditions, realize, DataRecipe, Profile};
use kg_blowup::{Grid, NonlinearityModel};

fn main() -> kg_blowup::Result<()> {
    let model = NonlinearityModel::power(3.0)?;
    let grid = Grid::new(1, 2.0 * PI, 128)?;
    let sigma = 0.1;
    println!("window for sigma = {sigma}: {:.5} <= lambda^2 < {:.5}", 4.0 + 8.0 * sigma * sigma / 3.0, 16.0 / 3.0 + 8.0 * sigma * sigma / 3.0);
    println!("{:>8} {:>10} {:>10} {:>10} {:>10}  pass", "lambda^2", "E", "mass", "I", "<u0,u1>");
    for i in 0..=14 {
        let l2 = 3.6 + 0.15 * i as f64;
        let recipe = DataRecipe { profile: Profile::FourierMode { k: 1 }, amplitude: l2.sqrt(), velocity_ratio: sigma };
        let d = realize(&recipe, &grid)?;
        let c = check_static_conditions(&d.u0, &d.u1, &model)?;
        println!(
            "{l2:>8.3} {:>10.4} {:>10.4} {:>10.4} {:>10.4}  {}",
            c.energy, c.mass, c.nehari, c.inner, c.all_pass()
        );
    }
    Ok(())
}
