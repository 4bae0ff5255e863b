//! The fractional Laplacian on the line: direct singular integrals and a
//! collocation solver for the fractional obstacle problem.

use serde::Serialize;

use super::kernel::sphere_area;
use super::line::LineFunction;
use crate::error::{invalid, Result};
use crate::quadrature::adaptive;

/// `c_{d,sigma} = 4^sigma Gamma(d/2 + sigma) / (pi^{d/2} |Gamma(-sigma)|)`.
pub fn frac_constant(d: usize, sigma: f64) -> f64 {
    let d = d as f64;
    4f64.powf(sigma) * libm::tgamma(d / 2.0 + sigma)
        / (std::f64::consts::PI.powf(d / 2.0) * libm::tgamma(-sigma).abs())
}

/// `(-Delta)^sigma v(x)` from the singular integral
/// `c int (v(x) - v(x + z)) / |z|^{d + 2 sigma} dz`, written with spherical
/// means and cut at `R = 20 * support`; the tail beyond `R` is exact.
pub fn fractional_laplacian(v: &LineFunction, x: &[f64], sigma: f64) -> Result<f64> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return invalid("fractional order must lie in (0, 1)");
    }
    if !v.support.is_finite() {
        return invalid("the direct integral needs a compactly supported function");
    }
    let v0 = v.eval(x);
    let reach = v.support + x.iter().map(|t| t * t).sum::<f64>().sqrt();
    let cut = (20.0 * v.support).max(reach);
    // quadratic Taylor model of the symmetric difference below `delta`
    let delta = 1e-3 * v.support;
    let wd = v.average(x, delta) - v0;
    let head = wd * delta.powf(-2.0 * sigma) / (2.0 - 2.0 * sigma);
    let mut breaks = v.kinks_around(x);
    breaks.extend((0..6).map(|k| delta * 10f64.powi(k)));
    let body = adaptive(|s| (v.average(x, s) - v0) * s.powf(-1.0 - 2.0 * sigma), delta, cut, &breaks, 1e-14, 1e-12, 5000).value;
    let tail = -v0 * cut.powf(-2.0 * sigma) / (2.0 * sigma);
    let d = v.dim;
    Ok(-frac_constant(d, sigma) * sphere_area(d) * (head + body + tail))
}

/// `c_{1,sigma} d^{-2 sigma} F(m)`: the fractional Laplacian of the hat
/// function of width `d` at distance `m d` from its peak.
fn hat_stencil(sigma: f64, d: f64, count: usize) -> Vec<f64> {
    let p = 1.0 - 2.0 * sigma;
    let k = frac_constant(1, sigma) / (2.0 * sigma * p) * d.powf(-2.0 * sigma);
    (0..count)
        .map(|m| {
            let m = m as f64;
            k * ((m + 1.0).powf(p) - 2.0 * m.powf(p) + (m - 1.0).abs().powf(p))
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct FractionalObstacleOptions {
    pub half_width: f64,
    pub points: usize,
    pub tol: f64,
    pub max_sweeps: usize,
    pub omega: f64,
}

impl Default for FractionalObstacleOptions {
    fn default() -> Self {
        Self { half_width: 3.0, points: 1201, tol: 1e-12, max_sweeps: 100_000, omega: 1.5 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LineSolution {
    pub xs: Vec<f64>,
    pub values: Vec<f64>,
    pub contact: Vec<bool>,
    /// `(-Delta)^sigma w` at the nodes.
    pub operator: Vec<f64>,
    pub sweeps: usize,
}

impl LineSolution {
    pub fn to_line_function(&self) -> Result<LineFunction> {
        LineFunction::from_samples(self.xs.clone(), self.values.clone())
    }

    pub fn contact_count(&self) -> usize {
        self.contact.iter().filter(|c| **c).count()
    }
}

/// Obstacle problem `w >= psi`, `(-Delta)^sigma w >= 0`, complementarity, for
/// piecewise-linear `w` on `[-L, L]` vanishing outside, by projected SOR on
/// the collocation system.
pub fn solve_fractional_obstacle(psi: &LineFunction, sigma: f64, opts: &FractionalObstacleOptions) -> Result<LineSolution> {
    if psi.dim != 1 {
        return invalid("the fractional obstacle solver works on one-dimensional lines");
    }
    if !(sigma > 0.0 && sigma < 0.5) {
        return invalid("fractional order must lie in (0, 1/2)");
    }
    if opts.points < 3 || psi.support >= opts.half_width {
        return invalid("the obstacle must be supported well inside the solver interval");
    }
    let l = opts.half_width;
    let count = opts.points;
    let d = 2.0 * l / (count - 1) as f64;
    let xs: Vec<f64> = (0..count).map(|i| -l + i as f64 * d).collect();
    let phi: Vec<f64> = xs.iter().map(|&x| psi.eval(&[x])).collect();
    let stencil = hat_stencil(sigma, d, count);
    // interior unknowns; the two end nodes stay zero
    let mut w = vec![0.0; count];
    let diag = stencil[0];
    let scale = phi.iter().fold(0.0f64, |m, p| m.max(p.abs())).max(f64::MIN_POSITIVE);
    let mut sweeps = 0;
    loop {
        sweeps += 1;
        let mut change = 0.0f64;
        for i in 1..count - 1 {
            let mut aw = 0.0;
            for (j, wj) in w.iter().enumerate() {
                aw += stencil[i.abs_diff(j)] * wj;
            }
            let next = (w[i] - opts.omega * aw / diag).max(phi[i]);
            change = change.max((next - w[i]).abs());
            w[i] = next;
        }
        if change <= opts.tol * scale {
            break;
        }
        if sweeps >= opts.max_sweeps {
            return invalid(format!("fractional obstacle solve stalled after {sweeps} sweeps (last change {change:e})"));
        }
    }
    let operator: Vec<f64> =
        (0..count).map(|i| w.iter().enumerate().map(|(j, wj)| stencil[i.abs_diff(j)] * wj).sum()).collect();
    let contact = (0..count).map(|i| i > 0 && i + 1 < count && w[i] - phi[i] <= 1e-9 * scale && phi[i] > 0.0).collect();
    Ok(LineSolution { xs, values: w, contact, operator, sweeps })
}
