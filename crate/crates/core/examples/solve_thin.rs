//! Solve the thin obstacle problem with boundary data `Ext_a(x1^2)` and
//! compare against the analytic solution.
//!
//! cargo run --release --example solve_thin

use std::sync::Arc;
use std::time::Instant;

use obstacle_lab::grid::{Grid, GridSpec};
use obstacle_lab::poly::{ext_a, parse_poly};
use obstacle_lab::solver::{relative_l2_error, solve, Data, ObstacleSpec, SolveOptions};

fn main() -> obstacle_lab::Result<()> {
    for a in [-0.5, 0.0, 0.5] {
        let grid = Arc::new(Grid::new(GridSpec::new(1, 257, a))?);
        let exact = ext_a(&parse_poly("x1^2", 1)?, a)?;
        let spec = ObstacleSpec::thin(Data::Const(0.0), Data::Poly(exact.clone()));
        let t = Instant::now();
        let sol = solve(&grid, &spec, &SolveOptions::default())?;
        println!(
            "a = {a:+.1}: {} sweeps, {:.2?}, relative L2 error {:.2e}, max KKT residual {:.2e}",
            sol.sweeps,
            t.elapsed(),
            relative_l2_error(&sol.field, &exact),
            sol.report.max_residual()
        );
    }
    Ok(())
}
