//! Near-field factor for codimension-two constraints.
//!
//! A nearest-neighbour stencil misjudges the `a`-harmonic capacity of a line
//! by a fixed, resolution-independent ratio. The factor `mu(a)` scales the
//! conductances touching the line so that the point-constraint problem in the
//! `(x_n, y)` plane, with exact solution `r^{-a}`, carries the exact flux
//! `(-a) int_0^pi sin^a`.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use super::stencil::Stencil;
use super::{ConstraintSet, Problem, SolveOptions};
use crate::grid::{Grid, GridSpec};

const CALIBRATION_RES: usize = 129;

/// Flux of `r^{-a}` through a half circle around the origin.
pub fn target_flux(a: f64) -> f64 {
    -a * std::f64::consts::PI.sqrt() * libm::tgamma((1.0 + a) / 2.0) / libm::tgamma(1.0 + a / 2.0)
}

/// Discrete flux into the origin of the planar point-constraint problem.
pub fn measured_flux(a: f64, mu: f64, res: usize, u: &mut Vec<f64>) -> f64 {
    let grid = Grid::new(GridSpec::new(1, res, a)).expect("calibration grid");
    let origin = grid.verythin_mask[0];
    let stencil = Stencil::new(&grid, Some(mu));
    let mut kind = vec![1u8; grid.len()];
    if u.len() != grid.len() {
        *u = vec![0.0; grid.len()];
    }
    for i in 0..grid.len() {
        if grid.is_boundary(i) {
            kind[i] = 0;
            let x = grid.coords(i);
            u[i] = x[0].hypot(x[1]).powf(-a);
        }
    }
    kind[origin] = 0;
    u[origin] = 0.0;
    let problem = Problem::new(stencil, kind, vec![f64::NEG_INFINITY; grid.len()], vec![0.0; grid.len()]);
    let opts = SolveOptions { tol: 1e-12, max_sweeps: 100_000, ..SolveOptions::default() };
    let _ = problem.run(u, &opts, ConstraintSet::Thin);
    problem.stencil.residual(u, origin)
}

fn compute(a: f64, res: usize) -> f64 {
    let target = target_flux(a);
    let mut u = Vec::new();
    let (mut m0, mut m1) = (1.0, 1.5);
    let mut f0 = measured_flux(a, m0, res, &mut u) - target;
    let mut f1 = measured_flux(a, m1, res, &mut u) - target;
    for _ in 0..40 {
        if (f1 / target).abs() < 1e-9 || f1 == f0 {
            break;
        }
        let m2 = (m1 - f1 * (m1 - m0) / (f1 - f0)).clamp(m1 / 4.0, m1 * 4.0);
        m0 = m1;
        f0 = f1;
        m1 = m2;
        f1 = measured_flux(a, m1, res, &mut u) - target;
    }
    m1
}

/// Calibrated factor for `a < 0`, memoized per `a`; `1` otherwise.
pub fn line_mu(a: f64) -> f64 {
    if a >= 0.0 {
        return 1.0;
    }
    static CACHE: OnceLock<Mutex<HashMap<u64, f64>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(mu) = cache.lock().unwrap().get(&a.to_bits()) {
        return *mu;
    }
    let mu = compute(a, CALIBRATION_RES);
    cache.lock().unwrap().insert(a.to_bits(), mu);
    mu
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn calibrated_flux_matches_target() {
        let a = -0.5;
        let mu = line_mu(a);
        let mut u = Vec::new();
        let f = measured_flux(a, mu, CALIBRATION_RES, &mut u);
        assert!((f / target_flux(a) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn factor_is_nearly_resolution_independent() {
        let a = -0.5;
        let coarse = compute(a, 65);
        assert!((coarse / line_mu(a) - 1.0).abs() < 0.05, "{coarse} vs {}", line_mu(a));
    }
}
