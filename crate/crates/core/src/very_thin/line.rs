//! Functions on the very thin space `R^{n-1}`.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::{invalid, LabError, Result};

type LineFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A compactly supported function on `R^d`, `d = 1` or `2`.
#[derive(Clone)]
pub struct LineFunction {
    pub dim: usize,
    f: LineFn,
    /// `v(z) = 0` for `|z| >= support`; infinite for functions without a known support.
    pub support: f64,
    /// Radii `|z|` where `v` may fail to be smooth, used as quadrature breakpoints.
    pub breaks: Vec<f64>,
    samples: Option<(Vec<f64>, Vec<f64>)>,
}

impl std::fmt::Debug for LineFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LineFunction")
            .field("dim", &self.dim)
            .field("support", &self.support)
            .field("sampled", &self.samples.is_some())
            .finish()
    }
}

impl LineFunction {
    pub fn new(dim: usize, support: f64, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self { dim, f: Arc::new(f), support, breaks: Vec::new(), samples: None }
    }

    pub fn with_breaks(mut self, breaks: Vec<f64>) -> Self {
        self.breaks = breaks;
        self
    }

    /// `amplitude * exp(1 - 1 / (1 - |z - center|^2 / radius^2))` inside the ball.
    pub fn bump(center: &[f64], radius: f64, amplitude: f64) -> Self {
        let c = center.to_vec();
        let reach = c.iter().map(|t| t * t).sum::<f64>().sqrt() + radius;
        Self::new(center.len(), reach, move |z| {
            let r2: f64 = z.iter().zip(&c).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / (radius * radius);
            if r2 >= 1.0 {
                0.0
            } else {
                amplitude * (1.0 - 1.0 / (1.0 - r2)).exp()
            }
        })
    }

    /// Piecewise-linear interpolant of samples on an increasing 1D grid,
    /// zero outside the sampled interval.
    pub fn from_samples(xs: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if xs.len() != values.len() || xs.len() < 2 || xs.windows(2).any(|w| w[1] <= w[0]) {
            return invalid("samples need matching, increasing abscissae");
        }
        if values.iter().any(|v| !v.is_finite()) {
            return invalid("samples must be finite");
        }
        let support = xs[0].abs().max(xs[xs.len() - 1].abs());
        let (gx, gv) = (xs.clone(), values.clone());
        let f = move |z: &[f64]| interp_linear(&gx, &gv, z[0]);
        Ok(Self { dim: 1, f: Arc::new(f), support, breaks: Vec::new(), samples: Some((xs, values)) })
    }

    pub fn eval(&self, z: &[f64]) -> f64 {
        (self.f)(z)
    }

    pub fn samples(&self) -> Option<(&[f64], &[f64])> {
        self.samples.as_ref().map(|(x, v)| (x.as_slice(), v.as_slice()))
    }

    /// Mean of `v` over the sphere `|z - x| = s`.
    pub fn average(&self, x: &[f64], s: f64) -> f64 {
        match self.dim {
            1 => 0.5 * (self.eval(&[x[0] + s]) + self.eval(&[x[0] - s])),
            _ => {
                let m = 96;
                (0..m)
                    .map(|k| {
                        let t = 2.0 * PI * (k as f64 + 0.5) / m as f64;
                        self.eval(&[x[0] + s * t.cos(), x[1] + s * t.sin()])
                    })
                    .sum::<f64>()
                    / m as f64
            }
        }
    }

    /// Radii `s` around `x` where the spherical mean may have kinks.
    pub fn kinks_around(&self, x: &[f64]) -> Vec<f64> {
        let r = x.iter().map(|t| t * t).sum::<f64>().sqrt();
        let mut out = Vec::new();
        for &b in self.breaks.iter().chain(std::iter::once(&self.support)) {
            if b.is_finite() {
                out.push((b - r).abs());
                out.push(b + r);
            }
        }
        if let Some((xs, _)) = &self.samples {
            if xs.len() <= 64 {
                out.extend(xs.iter().map(|z| (z - x[0]).abs()));
            }
        }
        out
    }

    /// `x,value` rows on the given abscissae (1D only).
    pub fn to_csv(&self, xs: &[f64]) -> String {
        let mut out = String::from("x,value\n");
        for &x in xs {
            let _ = writeln!(out, "{x},{}", self.eval(&[x]));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut xs = Vec::new();
        let mut vs = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (i == 0 && line.starts_with('x')) {
                continue;
            }
            let mut parts = line.split(',');
            let parse = |p: Option<&str>| -> Result<f64> {
                p.ok_or_else(|| LabError::Parse(format!("line {}: missing column", i + 1)))?
                    .trim()
                    .parse()
                    .map_err(|e| LabError::Parse(format!("line {}: {e}", i + 1)))
            };
            xs.push(parse(parts.next())?);
            vs.push(parse(parts.next())?);
        }
        Self::from_samples(xs, vs)
    }
}

fn interp_linear(xs: &[f64], vs: &[f64], x: f64) -> f64 {
    if x <= xs[0] || x >= xs[xs.len() - 1] {
        return if x == xs[0] { vs[0] } else if x == xs[xs.len() - 1] { vs[vs.len() - 1] } else { 0.0 };
    }
    let i = xs.partition_point(|&t| t <= x) - 1;
    let t = (x - xs[i]) / (xs[i + 1] - xs[i]);
    vs[i] * (1.0 - t) + vs[i + 1] * t
}
