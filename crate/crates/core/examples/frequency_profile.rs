//! Frequency, Weiss and Monneau profiles of a solved thin obstacle problem.
//!
//! cargo run --release --example frequency_profile

use std::sync::Arc;

use obstacle_lab::diagnostics::{frequency_at_zero, geometric_radii, profile, ProfileOptions};
use obstacle_lab::grid::{Grid, GridSpec};
use obstacle_lab::poly::{ext_a, parse_poly};
use obstacle_lab::solver::{solve, Data, ObstacleSpec, SolveOptions};

fn main() -> obstacle_lab::Result<()> {
    let a = -0.5;
    let grid = Arc::new(Grid::new(GridSpec::new(1, 257, a))?);
    let g = ext_a(&parse_poly("x1^2 - 0.2 x1 - 0.1", 1)?, a)?;
    let sol = solve(&grid, &ObstacleSpec::thin(Data::Const(0.0), Data::Poly(g)), &SolveOptions::with_tol(1e-10))?;
    let contact: Vec<f64> = grid.thin_mask.iter().filter(|&&i| sol.field.values[i] == 0.0).map(|&i| grid.coords(i)[0]).collect();
    let (lo, hi) = (contact[0], contact[contact.len() - 1]);
    println!("contact set [{lo:.4}, {hi:.4}] after {} sweeps", sol.sweeps);

    let radii = geometric_radii(16.0 * grid.h, 0.6, 12);
    // a free boundary point, where the frequency tends to (3 - a) / 2
    let center = [hi];
    let prof = profile(&sol.field, &center, &radii, &[1.75, 2.5], a, &ProfileOptions::default())?;
    println!("center {:.4}", center[0]);
    println!("{:>8} {:>12} {:>12} {:>8} {:>12} {:>12}", "r", "H", "D", "N", "W_1.75", "H_1.75");
    for i in 0..radii.len() {
        println!(
            "{:8.4} {:12.4e} {:12.4e} {:8.4} {:12.4e} {:12.4e}",
            radii[i], prof.h[i], prof.d[i], prof.frequency[i], prof.weiss[0].values[i], prof.monneau[0].values[i]
        );
    }
    let fit = frequency_at_zero(&prof)?;
    println!("N(0+) = {:.4}, monotone: {} (largest violation {:.1e})", fit.value, prof.frequency_monotone, prof.frequency_max_violation);
    for (name, series) in [("Weiss", &prof.weiss), ("Monneau", &prof.monneau)] {
        for s in series {
            println!("{name} {}: monotone {}, violation {:.1e}", s.lambda, s.monotone, s.max_violation);
        }
    }
    Ok(())
}
