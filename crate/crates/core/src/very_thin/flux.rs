//! Weighted flux through small circles around the line `x_n = y = 0`:
//! `f_a(x') = lim_{eps -> 0} int_{|(x_n, y)| = eps} u_nu |y|^a`.

use serde::Serialize;

use super::fractional::frac_constant;
use super::kernel::KernelSpec;
use crate::error::{invalid, Result};
use crate::field::Field;
use crate::grid::HALF_WIDTH;
use crate::quadrature::GaussJacobi;

/// `int_0^{2 pi} |sin t|^a dt`.
pub fn weighted_circle_length(a: f64) -> f64 {
    2.0 * std::f64::consts::PI.sqrt() * libm::tgamma((1.0 + a) / 2.0) / libm::tgamma(1.0 + a / 2.0)
}

/// The circle integral at one radius. In `t = cos(theta)` the weight
/// `|sin theta|^a d theta` becomes `(1 - t^2)^{(a-1)/2} dt`; the lower half
/// circle doubles the upper one by evenness.
pub fn circle_flux(field: &dyn Field, x_line: &[f64], eps: f64, a: f64, order: usize) -> f64 {
    let n = field.n();
    let rule = GaussJacobi::cached(order, (a - 1.0) / 2.0, (a - 1.0) / 2.0);
    let mut p = x_line.to_vec();
    p.extend([0.0, 0.0]);
    let mut total = 0.0;
    for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
        let s = (1.0 - t * t).sqrt();
        p[n - 1] = eps * t;
        p[n] = eps * s;
        let g = field.gradient(&p);
        total += w * (g[n - 1] * t + g[n] * s);
    }
    2.0 * eps.powf(1.0 + a) * total
}

#[derive(Debug, Clone)]
pub struct FluxOptions {
    /// Inner radius; defaults to `2h` on grids and `1e-3` otherwise.
    pub eps: Option<f64>,
    /// Order of the leading error term in `eps`; defaults to `1` on grids and
    /// `2 + a` for smooth extensions.
    pub order: Option<f64>,
    pub quad_order: usize,
}

impl Default for FluxOptions {
    fn default() -> Self {
        Self { eps: None, order: None, quad_order: 48 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FluxEstimate {
    pub value: f64,
    pub inner: f64,
    pub outer: f64,
    pub eps: f64,
}

/// `f_a(x')` by circle integrals at `eps` and `2 eps` and one Richardson step.
pub fn f_a_flux(field: &dyn Field, x_line: &[f64], a: f64, opts: &FluxOptions) -> Result<FluxEstimate> {
    let n = field.n();
    if n < 1 || x_line.len() + 1 != n {
        return invalid(format!("expected {} line coordinates", n.saturating_sub(1)));
    }
    let grid = field.as_grid();
    let eps = opts.eps.unwrap_or_else(|| grid.map_or(1e-3, |g| 2.0 * g.grid.h));
    let order = opts.order.unwrap_or(if grid.is_some() { 1.0 } else { 2.0 + a });
    if grid.is_some() {
        if x_line.iter().any(|t| t.abs() > HALF_WIDTH) || 2.0 * eps > HALF_WIDTH {
            return invalid("flux circles leave the computational cube");
        }
    }
    let inner = circle_flux(field, x_line, eps, a, opts.quad_order);
    let outer = circle_flux(field, x_line, 2.0 * eps, a, opts.quad_order);
    let q = 2f64.powf(order);
    Ok(FluxEstimate { value: (q * inner - outer) / (q - 1.0), inner, outer, eps })
}

/// Predicted ratio `f_a(ext v) / (-Delta)^sigma v` for the unit-mass kernel:
/// `-(-a) C |S^1|_a / c_{d, sigma}`.
pub fn predicted_flux_constant(kernel: &KernelSpec) -> f64 {
    let a = kernel.a;
    a * kernel.c * weighted_circle_length(a) / frac_constant(kernel.line_dim(), -a / 2.0)
}
