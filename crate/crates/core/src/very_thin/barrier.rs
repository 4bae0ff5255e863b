//! Hölder barriers: extensions of `|x'|^beta` cut off smoothly away from
//! the origin, and a dyadic measurement of their Hölder exponent at 0.

use serde::Serialize;

use super::extend::{extend, Extension};
use super::kernel::KernelSpec;
use super::line::LineFunction;
use crate::error::{invalid, Result};
use crate::field::Field;

fn smooth_step(t: f64) -> f64 {
    // C-infinity transition from 0 (t <= 0) to 1 (t >= 1)
    let f = |s: f64| if s <= 0.0 { 0.0 } else { (-1.0 / s).exp() };
    let (p, q) = (f(t), f(1.0 - t));
    p / (p + q)
}

/// Nonincreasing smooth cutoff: `1` on `[0, 2]`, `0` on `[3, inf)`.
pub fn cutoff(r: f64) -> f64 {
    1.0 - smooth_step(r - 2.0)
}

/// `|x'|^beta cutoff(|x'|)` on a line of dimension `dim`.
pub fn barrier_profile(dim: usize, beta: f64) -> LineFunction {
    LineFunction::new(dim, 3.0, move |z| {
        let r = z.iter().map(|t| t * t).sum::<f64>().sqrt();
        r.powf(beta) * cutoff(r)
    })
    .with_breaks(vec![0.0, 2.0, 3.0])
}

#[derive(Debug, Clone)]
pub struct HolderOptions {
    /// Dyadic scales `2^-k` for `k` in this range.
    pub first_scale: i32,
    pub last_scale: i32,
    pub angles: usize,
}

impl Default for HolderOptions {
    fn default() -> Self {
        Self { first_scale: 14, last_scale: 30, angles: 9 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HolderFit {
    pub exponent: f64,
    pub scales: Vec<f64>,
    pub oscillations: Vec<f64>,
    /// Slopes between consecutive scales.
    pub local: Vec<f64>,
}

/// Fits `log osc(r)` against `log r`, with `osc(r)` the largest deviation
/// from the value at `center` over sample points on the sphere of radius
/// `r` in the `(x_1, x_n, y)` half-plane spanned by the first line direction
/// and the distance to the line.
pub fn holder_exponent(field: &dyn Field, center: &[f64], opts: &HolderOptions) -> HolderFit {
    let n = field.n();
    let u0 = field.value(center);
    let mut scales = Vec::new();
    let mut osc = Vec::new();
    for k in opts.first_scale..=opts.last_scale {
        let r = 2f64.powi(-k);
        let mut worst = 0.0f64;
        for j in 0..opts.angles {
            let t = std::f64::consts::PI * j as f64 / (opts.angles - 1) as f64;
            let mut p = center.to_vec();
            p[0] += r * t.cos();
            p[n] += r * t.sin();
            worst = worst.max((field.value(&p) - u0).abs());
        }
        scales.push(r);
        osc.push(worst);
    }
    let lx: Vec<f64> = scales.iter().map(|r| r.ln()).collect();
    let ly: Vec<f64> = osc.iter().map(|o| o.max(f64::MIN_POSITIVE).ln()).collect();
    let m = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / m;
    let my = ly.iter().sum::<f64>() / m;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let local = lx.windows(2).zip(ly.windows(2)).map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0])).collect();
    HolderFit { exponent: sxy / sxx, scales, oscillations: osc, local }
}

#[derive(Debug, Clone, Serialize)]
pub struct BarrierReport {
    pub a: f64,
    pub beta: f64,
    pub expected_exponent: f64,
    pub holder: HolderFit,
    /// Largest `|h(x', 0, 0) - |x'|^beta|` over the unit line ball.
    pub trace_error: f64,
    /// Smallest value over samples of the unit sphere.
    pub boundary_min: f64,
}

/// Builds the barrier for exponent `beta` and measures its properties.
pub fn barrier(kernel: &KernelSpec, beta: f64, opts: &HolderOptions) -> Result<(Extension, BarrierReport)> {
    if beta <= 0.0 {
        return invalid("barrier exponent must be positive");
    }
    let n = kernel.n;
    let ext = extend(kernel, &barrier_profile(n - 1, beta))?;
    let mut trace_error = 0.0f64;
    for k in 0..=40 {
        let mut x = vec![0.0; n + 1];
        x[0] = -1.0 + k as f64 / 20.0;
        trace_error = trace_error.max((ext.value(&x) - x[0].abs().powf(beta)).abs());
    }
    let mut boundary_min = f64::INFINITY;
    for i in 0..=12 {
        let t = std::f64::consts::PI * i as f64 / 12.0;
        for j in 0..=6 {
            let s = std::f64::consts::PI / 2.0 * j as f64 / 6.0;
            let mut x = vec![0.0; n + 1];
            // polar angle from the line direction x_1, azimuth between x_n and y
            x[0] = t.cos();
            x[n - 1] = t.sin() * s.cos();
            x[n] = t.sin() * s.sin();
            boundary_min = boundary_min.min(ext.value(&x));
        }
    }
    let holder = holder_exponent(&ext, &vec![0.0; n + 1], opts);
    let report = BarrierReport { a: kernel.a, beta, expected_exponent: beta.min(-kernel.a), holder, trace_error, boundary_min };
    Ok((ext, report))
}
