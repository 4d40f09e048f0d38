//! Ground-state levels `d` in one, two and three dimensions.
use kg_blowup::ground_state::{solve_ground_state_1d, solve_ground_state_radial, ShootingOptions};
use kg_blowup::Grid;

fn main() -> kg_blowup::Result<()> {
    let one = solve_ground_state_1d(3.0, &Grid::new(1, 60.0, 1024)?, 1e-8)?;
    println!("n = 1, p = 3: u(0) = {:.10}  d = {:.12}  (4/3 = {:.12})", one.center, one.d, 4.0 / 3.0);

    for (n, p, l, pts) in [(2, 3.0, 40.0, 256), (3, 2.0, 40.0, 128)] {
        let gs = solve_ground_state_radial(p, &Grid::new(n, l, pts)?, &ShootingOptions::default())?;
        println!(
            "n = {n}, p = {p}: u(0) = {:.6}  d = {:.6}  residual = {:.1e}  relative I = {:.1e}",
            gs.center,
            gs.d,
            gs.residual,
            gs.relative_nehari()
        );
    }
    Ok(())
}
