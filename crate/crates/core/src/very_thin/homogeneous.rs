//! Homogeneous solutions `u = rho^lambda g(theta)` of the very thin problem
//! in the plane `(x, y)`, where the constraint set is the origin.
//!
//! In polar coordinates `L_a u = rho^{lambda - 2} (lambda^2 g + g'' +
//! a (lambda g + cot(theta) g'))`, so `g` must solve that ODE on `(0, pi)`
//! with `g'(0) = g'(pi) = 0`. The admissible homogeneities are the positive
//! integers, where `u` is a polynomial, and `lambda = -a`.

use serde::Serialize;

use super::flux::weighted_circle_length;
use crate::error::{invalid, Result};
use crate::poly::{ext_a, MultiPoly};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HomogeneityClass {
    Polynomial,
    MinusA,
    NotAdmissible,
}

#[derive(Debug, Clone, Serialize)]
pub struct HomogeneousVerdict {
    pub lambda: f64,
    pub class: HomogeneityClass,
    pub admissible_homogeneity: bool,
    /// `max |ODE residual| / (lambda^2 max |g|)` over interior angles.
    pub ode_residual: f64,
    /// `max(|g'(0)|, |g'(pi)|) / max |g|`.
    pub endpoint_slope: f64,
    /// Weighted flux through circles around the origin (`0` unless `lambda = -a`).
    pub origin_flux: f64,
    /// Relative misfit to `c Ext_a(x^lambda)` when `lambda` is an integer.
    pub polynomial_fit: Option<f64>,
    pub fit_scale: Option<f64>,
    pub valid: bool,
}

/// Samples of `Ext_a(x^k)` on the upper half circle, at `count` uniform angles.
pub fn polynomial_profile(k: u32, a: f64, count: usize) -> Result<Vec<f64>> {
    let p: MultiPoly = ext_a(&MultiPoly::monomial(1, vec![k, 0], 1.0), a)?;
    Ok(angles(count).map(|t| p.eval(&[t.cos(), t.sin()])).collect())
}

fn angles(count: usize) -> impl Iterator<Item = f64> {
    (0..count).map(move |i| std::f64::consts::PI * i as f64 / (count - 1) as f64)
}

/// Checks an angular profile sampled at uniform angles on `[0, pi]`.
pub fn verify_homogeneous_2d(g: &[f64], lambda: f64, a: f64, tol: f64) -> Result<HomogeneousVerdict> {
    if g.len() < 9 {
        return invalid("angular profile needs at least 9 samples");
    }
    if !(a > -1.0 && a < 1.0) {
        return invalid("a must lie in (-1, 1)");
    }
    let snap = 1e-6;
    let integer = (lambda - lambda.round()).abs() < snap && lambda.round() >= 1.0;
    let minus_a = a < 0.0 && (lambda + a).abs() < snap;
    if lambda <= 0.0 && !minus_a {
        return invalid(format!("homogeneity {lambda} is not positive"));
    }
    let m = g.len();
    let dt = std::f64::consts::PI / (m - 1) as f64;
    let gmax = g.iter().fold(0.0f64, |s, v| s.max(v.abs())).max(f64::MIN_POSITIVE);
    let mut ode = 0.0f64;
    for i in 1..m - 1 {
        let t = i as f64 * dt;
        let g2 = (g[i + 1] - 2.0 * g[i] + g[i - 1]) / (dt * dt);
        let g1 = (g[i + 1] - g[i - 1]) / (2.0 * dt);
        let r = lambda * lambda * g[i] + g2 + a * (lambda * g[i] + g1 * t.cos() / t.sin());
        ode = ode.max(r.abs());
    }
    let ode_residual = ode / (lambda * lambda * gmax);
    let d0 = (-3.0 * g[0] + 4.0 * g[1] - g[2]) / (2.0 * dt);
    let d1 = (3.0 * g[m - 1] - 4.0 * g[m - 2] + g[m - 3]) / (2.0 * dt);
    let endpoint_slope = d0.abs().max(d1.abs()) / gmax;
    // int_0^pi g sin^a, doubled, times lambda: finite only for lambda = -a
    let weights: Vec<f64> = angles(m).map(|t| t.sin().max(1e-300).powf(a)).collect();
    let mean: f64 = g.iter().zip(&weights).skip(1).take(m - 2).map(|(g, w)| g * w).sum::<f64>()
        / weights.iter().skip(1).take(m - 2).sum::<f64>();
    let origin_flux = if minus_a { lambda * mean * weighted_circle_length(a) } else { 0.0 };
    let (polynomial_fit, fit_scale) = if integer {
        let p = polynomial_profile(lambda.round() as u32, a, m)?;
        let pp: f64 = p.iter().map(|v| v * v).sum();
        let c = p.iter().zip(g).map(|(p, g)| p * g).sum::<f64>() / pp;
        let err = p.iter().zip(g).map(|(p, g)| (g - c * p).powi(2)).sum::<f64>().sqrt()
            / g.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        (Some(err), Some(c))
    } else {
        (None, None)
    };
    let class = if integer {
        HomogeneityClass::Polynomial
    } else if minus_a {
        HomogeneityClass::MinusA
    } else {
        HomogeneityClass::NotAdmissible
    };
    let residuals_ok = ode_residual <= tol && endpoint_slope <= tol;
    let valid = match class {
        HomogeneityClass::Polynomial => residuals_ok && polynomial_fit.is_some_and(|e| e <= tol),
        HomogeneityClass::MinusA => residuals_ok && origin_flux <= tol,
        HomogeneityClass::NotAdmissible => false,
    };
    Ok(HomogeneousVerdict {
        lambda,
        class,
        admissible_homogeneity: class != HomogeneityClass::NotAdmissible,
        ode_residual,
        endpoint_slope,
        origin_flux,
        polynomial_fit,
        fit_scale,
        valid,
    })
}
