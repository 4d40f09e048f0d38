//! Below the ground-state level the sign of `I(u0)` decides: scaled solitons
//! `λ ū` blow up for `λ > 1` and stay bounded for `λ < 1`.
use kg_blowup::ground_state::{dichotomy_experiment, solve_ground_state_1d};
use kg_blowup::solver::SolverConfig;
use kg_blowup::Grid;

fn main() -> kg_blowup::Result<()> {
    let gs = solve_ground_state_1d(3.0, &Grid::new(1, 60.0, 1024)?, 1e-8)?;
    println!("d = {:.10}", gs.d);
    let cfg = SolverConfig { t_end: 50.0, ..Default::default() };
    let rows = dichotomy_experiment(&gs, &[0.5, 0.8, 0.95, 1.05, 1.2, 1.5], &cfg)?;
    for r in rows {
        println!(
            "lambda = {:<5} E = {:.5}  I = {:+.5}  {:<16} max G/G0 = {:.3}",
            r.lambda,
            r.energy,
            r.nehari,
            r.outcome.label(),
            r.max_g_ratio
        );
    }
    Ok(())
}
