//! The very thin obstacle problem in R^3: constraint on the x1 line, KKT
//! residuals and the line flux density.
//!
//! cargo run --release --example very_thin_solve

use std::sync::Arc;

use obstacle_lab::grid::{Grid, GridSpec};
use obstacle_lab::poly::{ext_a, parse_poly};
use obstacle_lab::solver::{solve, Data, ObstacleSpec, SolveOptions};
use obstacle_lab::very_thin::{f_a_flux, FluxOptions};

fn main() -> obstacle_lab::Result<()> {
    let a = -0.5;
    let grid = Arc::new(Grid::new(GridSpec::new(2, 65, a))?);
    let g = ext_a(&parse_poly("2 x1^2 + x2^2 - 0.5", 2)?, a)?;
    let sol = solve(&grid, &ObstacleSpec::very_thin(Data::Const(0.0), Data::Poly(g)), &SolveOptions::with_tol(1e-10))?;
    let r = &sol.report;
    println!("{} sweeps; obstacle violation {:.1e}, positive flux {:.1e}, complementarity {:.1e}",
        sol.sweeps, r.max_obstacle_violation, r.max_positive_flux, r.max_complementarity);
    println!("{:>8} {:>12} {:>12} {:>12}", "x1", "u", "stencil", "circle");
    // smooth free points leave an eps^(2+a) remainder, not an O(h) one
    for (&i, f) in r.constrained.iter().zip(&r.flux_density).step_by(6) {
        let x = grid.coords(i);
        let circle = f_a_flux(&sol.field, &x[..1], a, &FluxOptions { order: Some(2.0 + a), ..Default::default() })?.value;
        println!("{:8.4} {:12.4e} {:12.4e} {:12.4e}", x[0], sol.field.values[i], f, circle);
    }
    Ok(())
}
