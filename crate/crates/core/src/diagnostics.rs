//! Frequency, Weiss and Monneau profiles at points of the thin space.
//!
//! With `D(r) = r^{1-n-a} int_{B_r} |grad u|^2 |y|^a` and
//! `H(r) = r^{-n-a} int_{dB_r} u^2 |y|^a`, the frequency is `N = D / H`,
//! `W_lambda = (D - lambda H) / r^{2 lambda}` and `H_lambda = H / r^{2 lambda}`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::field::{Field, Interp, ScalarField};
use crate::grid::HALF_WIDTH;
use crate::quadrature::{BallRule, SphereRule};

#[derive(Debug, Clone)]
pub struct ProfileOptions {
    /// Polynomial degree of the sphere and ball rules for non-polynomial fields.
    pub degree: usize,
    /// Relative tolerance of the monotonicity verdicts.
    pub monotone_tol: f64,
    /// Number of smallest radii used to extrapolate `N(0+)`.
    pub zero_window: usize,
    pub grid_energy: GridEnergy,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        Self { degree: 62, monotone_tol: 1e-3, zero_window: 5, grid_energy: GridEnergy::Sphere }
    }
}

/// How `D(r)` is computed for grid fields. Grid fields are always sampled
/// through their cubic interpolant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridEnergy {
    /// `r * int_{dB_1} u du/dr |y|^a` at scale `r`, which equals `D(r)` for
    /// solutions because `u` times the thin flux vanishes.
    Sphere,
    /// Edge energies summed over the ball.
    Volume,
}

/// Geometric schedule `0.04 * 1.25^k` capped at `cap`.
pub fn default_radii(cap: f64) -> Vec<f64> {
    (0..).map(|k| 0.04 * 1.25f64.powi(k)).take_while(|&r| r <= cap).collect()
}

/// Radii between `lo` and `hi` in geometric progression.
pub fn geometric_radii(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let q = (hi / lo).powf(1.0 / (count.max(2) - 1) as f64);
    (0..count).map(|k| lo * q.powi(k as i32)).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct LambdaSeries {
    pub lambda: f64,
    pub values: Vec<f64>,
    pub monotone: bool,
    /// Largest decrease between consecutive radii, relative to `max |value|`
    /// for `H_lambda` and to `max D / r^{2 lambda}` for `W_lambda`, which
    /// vanishes identically on homogeneous fields.
    pub max_violation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ZeroFit {
    pub value: f64,
    pub slope: f64,
    pub rms_residual: f64,
    pub window: usize,
    pub low_confidence: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct FrequencyProfile {
    pub center: Vec<f64>,
    pub radii: Vec<f64>,
    pub h: Vec<f64>,
    pub d: Vec<f64>,
    pub frequency: Vec<f64>,
    pub frequency_monotone: bool,
    pub frequency_max_violation: f64,
    pub weiss: Vec<LambdaSeries>,
    pub monneau: Vec<LambdaSeries>,
    pub n_at_zero: Option<ZeroFit>,
    pub notices: Vec<String>,
}

fn violation(values: &[f64]) -> f64 {
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    values.windows(2).map(|w| (w[0] - w[1]).max(0.0)).fold(0.0, f64::max) / scale
}

fn series(lambda: f64, values: Vec<f64>, tol: f64) -> LambdaSeries {
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    series_scaled(lambda, values, scale, tol)
}

fn series_scaled(lambda: f64, values: Vec<f64>, scale: f64, tol: f64) -> LambdaSeries {
    let drop = values.windows(2).map(|w| (w[0] - w[1]).max(0.0)).fold(0.0, f64::max);
    let max_violation = if drop == 0.0 { 0.0 } else { drop / scale };
    LambdaSeries { lambda, monotone: max_violation <= tol, max_violation, values }
}

/// `H(r)` at one radius.
pub fn sphere_mass(field: &dyn Field, center: &[f64], r: f64, a: f64, degree: usize) -> f64 {
    let rule = SphereRule::cached(field.n(), a, degree);
    let mut p = vec![0.0; center.len()];
    rule.integrate(|w| {
        for ((pi, ci), wi) in p.iter_mut().zip(center).zip(w) {
            *pi = ci + r * wi;
        }
        field.value(&p).powi(2)
    })
}

/// `D(r)` from the boundary form of the energy.
fn sphere_energy(field: &dyn Field, center: &[f64], r: f64, a: f64, degree: usize) -> f64 {
    let rule = SphereRule::cached(field.n(), a, degree);
    let mut p = vec![0.0; center.len()];
    r * rule.integrate(|w| {
        for ((pi, ci), wi) in p.iter_mut().zip(center).zip(w) {
            *pi = ci + r * wi;
        }
        let g = field.gradient(&p);
        field.value(&p) * g.iter().zip(w).map(|(g, w)| g * w).sum::<f64>()
    })
}

/// `D(r)` at one radius for an analytic field.
fn ball_energy_analytic(field: &dyn Field, center: &[f64], r: f64, a: f64, degree: usize) -> f64 {
    let rule = BallRule::new(field.n(), a, degree);
    let mut p = vec![0.0; center.len()];
    r * r
        * rule.integrate(|w| {
            for ((pi, ci), wi) in p.iter_mut().zip(center).zip(w) {
                *pi = ci + r * wi;
            }
            field.gradient(&p).iter().map(|g| g * g).sum()
        })
}

/// Sub-cells per axis when a dual box straddles the sphere.
const SUBCELLS: usize = 8;

/// Volume fraction of the box of side `h` around `mid` inside the ball of
/// radius `r`, by sub-cell midpoints with a ramp of one sub-cell width.
fn inside_fraction(mid: &[f64], center: &[f64], r: f64, h: f64) -> f64 {
    let dim = mid.len();
    let dist = mid.iter().zip(center).map(|(m, c)| (m - c).powi(2)).sum::<f64>().sqrt();
    let half_diag = 0.5 * h * (dim as f64).sqrt();
    if dist + half_diag <= r {
        return 1.0;
    }
    if dist - half_diag >= r {
        return 0.0;
    }
    let s = h / SUBCELLS as f64;
    let count = SUBCELLS.pow(dim as u32);
    let mut p = vec![0.0; dim];
    let mut total = 0.0;
    for k in 0..count {
        let mut rest = k;
        for d in 0..dim {
            let i = rest % SUBCELLS;
            rest /= SUBCELLS;
            p[d] = mid[d] - 0.5 * h + (i as f64 + 0.5) * s - center[d];
        }
        let dd = p.iter().map(|v| v * v).sum::<f64>().sqrt();
        total += ((r - dd) / s + 0.5).clamp(0.0, 1.0);
    }
    total / count as f64
}

/// `D(r)` for a grid field: each edge energy is weighted by the fraction of
/// its dual box inside the ball, doubled for `y < 0`.
fn ball_energy_grid(f: &ScalarField, center: &[f64], r: f64) -> f64 {
    let g = &f.grid;
    let n = g.n();
    let h = g.h;
    let st = f.stencil();
    let reach = r + 2.0 * h;
    let lo: Vec<usize> = (0..=n)
        .map(|d| {
            let origin = if d == n { 0.0 } else { -HALF_WIDTH };
            (((center[d] - reach - origin) / h).floor().max(0.0)) as usize
        })
        .collect();
    let hi: Vec<usize> = (0..=n)
        .map(|d| {
            let (origin, count) = if d == n { (0.0, g.ny) } else { (-HALF_WIDTH, g.res()) };
            ((((center[d] + reach - origin) / h).ceil()) as usize).min(count - 1)
        })
        .collect();
    let mut total = 0.0;
    let mut ijk = lo.clone();
    loop {
        let idx = g.index(&ijk);
        let x: Vec<f64> = (0..=n).map(|d| g.node_coords[d][ijk[d]]).collect();
        for axis in 0..=n {
            if ijk[axis] >= hi[axis] {
                continue;
            }
            let j = idx + g.stride(axis);
            let mid: Vec<f64> = (0..=n).map(|d| if d == axis { x[d] + 0.5 * h } else { x[d] }).collect();
            let chi = inside_fraction(&mid, center, r, h);
            if chi > 0.0 {
                total += chi * st.conductance(idx, axis) * (f.values[j] - f.values[idx]).powi(2);
            }
        }
        let mut d = 0;
        loop {
            ijk[d] += 1;
            if ijk[d] <= hi[d] {
                break;
            }
            ijk[d] = lo[d];
            d += 1;
            if d > n {
                return 2.0 * total / r.powf(n as f64 + g.a() - 1.0);
            }
        }
    }
}

fn quad_degree(field: &dyn Field, opts: &ProfileOptions) -> usize {
    match field.as_poly() {
        Some(p) => 2 * p.degree() as usize + 2,
        None => opts.degree,
    }
}

/// Frequency, Weiss and Monneau profiles of `field` around `center`.
pub fn profile(
    field: &dyn Field,
    center: &[f64],
    radii: &[f64],
    lambdas: &[f64],
    a: f64,
    opts: &ProfileOptions,
) -> Result<FrequencyProfile> {
    let n = field.n();
    let mut c = center.to_vec();
    if c.len() == n {
        c.push(0.0);
    }
    if c.len() != n + 1 || c[n] != 0.0 {
        return invalid("profile centers must lie on the thin space");
    }
    if radii.is_empty() || radii.windows(2).any(|w| w[1] <= w[0]) || radii[0] <= 0.0 {
        return invalid("radii must be positive and increasing");
    }
    if let Some(g) = field.as_grid() {
        let rmax = radii[radii.len() - 1];
        if c[..n].iter().any(|ci| ci.abs() + rmax > HALF_WIDTH + 1e-12) || rmax > HALF_WIDTH {
            return invalid(format!("radius {rmax} leaves the computational cube"));
        }
        if (g.grid.a() - a).abs() > 1e-15 {
            return invalid("weight exponent does not match the grid");
        }
    }
    let degree = quad_degree(field, opts);
    let cubic = field.as_grid().map(|g| g.clone().with_interp(Interp::Cubic));
    let pairs: Vec<(f64, f64)> = radii
        .par_iter()
        .map(|&r| match &cubic {
            Some(g) => {
                let d = match opts.grid_energy {
                    GridEnergy::Sphere => sphere_energy(g, &c, r, a, degree),
                    GridEnergy::Volume => ball_energy_grid(g, &c, r),
                };
                (sphere_mass(g, &c, r, a, degree), d)
            }
            None => (sphere_mass(field, &c, r, a, degree), ball_energy_analytic(field, &c, r, a, degree)),
        })
        .collect();
    let mut notices = Vec::new();
    let mut keep = pairs.len();
    if let Some(i) = pairs.iter().position(|p| p.0 < 1e-300) {
        notices.push(format!("H fell below 1e-300 at r = {}; profile truncated", radii[i]));
        keep = i;
    }
    let radii = radii[..keep].to_vec();
    let h: Vec<f64> = pairs[..keep].iter().map(|p| p.0).collect();
    let d: Vec<f64> = pairs[..keep].iter().map(|p| p.1).collect();
    let frequency: Vec<f64> = d.iter().zip(&h).map(|(d, h)| d / h).collect();
    let weiss = lambdas
        .iter()
        .map(|&l| {
            let v = radii.iter().zip(d.iter().zip(&h)).map(|(r, (d, h))| (d - l * h) / r.powf(2.0 * l)).collect();
            let scale = radii.iter().zip(&d).map(|(r, d)| d / r.powf(2.0 * l)).fold(0.0f64, f64::max);
            series_scaled(l, v, scale, opts.monotone_tol)
        })
        .collect();
    let monneau = lambdas
        .iter()
        .map(|&l| {
            let v = radii.iter().zip(&h).map(|(r, h)| h / r.powf(2.0 * l)).collect();
            series(l, v, opts.monotone_tol)
        })
        .collect();
    let fv = violation(&frequency);
    let mut prof = FrequencyProfile {
        center: c,
        radii,
        h,
        d,
        frequency_monotone: fv <= opts.monotone_tol,
        frequency_max_violation: fv,
        frequency,
        weiss,
        monneau,
        n_at_zero: None,
        notices,
    };
    prof.n_at_zero = frequency_at_zero_window(&prof, opts.zero_window).ok();
    Ok(prof)
}

fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let icpt = my - slope * mx;
    let rms = (xs.iter().zip(ys).map(|(x, y)| (y - icpt - slope * x).powi(2)).sum::<f64>() / m).sqrt();
    (icpt, slope, rms)
}

pub(crate) fn fit_intercept_in_r2(radii: &[f64], values: &[f64], window: usize) -> (f64, f64, f64) {
    let w = window.min(radii.len());
    let xs: Vec<f64> = radii[..w].iter().map(|r| r * r).collect();
    linear_fit(&xs, &values[..w])
}

fn frequency_at_zero_window(p: &FrequencyProfile, window: usize) -> Result<ZeroFit> {
    if p.radii.len() < 4 {
        return invalid("frequency extrapolation needs at least 4 radii");
    }
    let (value, slope, rms) = fit_intercept_in_r2(&p.radii, &p.frequency, window);
    let w = window.min(p.radii.len());
    Ok(ZeroFit {
        value,
        slope,
        rms_residual: rms,
        window: w,
        low_confidence: !p.frequency_monotone && rms > 1e-2 * value.abs().max(1.0),
    })
}

/// `N(0+)` from a linear fit of `N` against `r^2` over the smallest radii.
pub fn frequency_at_zero(p: &FrequencyProfile) -> Result<ZeroFit> {
    frequency_at_zero_window(p, 5)
}

#[derive(Debug, Clone, Serialize)]
pub struct WeissVerdict {
    pub kappa: f64,
    pub min_value: f64,
    pub nonnegative: bool,
    pub monotone: bool,
    /// For a `kappa`-homogeneous polynomial, `max |W_kappa|` (which should vanish).
    pub homogeneous_residual: Option<f64>,
}

/// Checks `W_kappa(r) >= 0` and its monotonicity on the given radii.
pub fn weiss_nonneg_check(
    field: &dyn Field,
    center: &[f64],
    kappa: f64,
    radii: &[f64],
    a: f64,
    opts: &ProfileOptions,
) -> Result<WeissVerdict> {
    let p = profile(field, center, radii, &[kappa], a, opts)?;
    let w = &p.weiss[0];
    let scale = p.d.iter().zip(&p.radii).map(|(d, r)| d / r.powf(2.0 * kappa)).fold(0.0f64, f64::max);
    let min_value = w.values.iter().cloned().fold(f64::INFINITY, f64::min);
    let homogeneous = field
        .as_poly()
        .filter(|q| q.homogeneity().map(f64::from) == Some(kappa))
        .map(|_| w.values.iter().fold(0.0f64, |m, v| m.max(v.abs())) / scale.max(f64::MIN_POSITIVE));
    Ok(WeissVerdict {
        kappa,
        min_value,
        nonnegative: min_value >= -opts.monotone_tol * scale,
        monotone: w.monotone,
        homogeneous_residual: homogeneous,
    })
}

impl FrequencyProfile {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,H,D,N");
        for s in &self.weiss {
            out.push_str(&format!(",W_{}", s.lambda));
        }
        for s in &self.monneau {
            out.push_str(&format!(",H_{}", s.lambda));
        }
        out.push('\n');
        for i in 0..self.radii.len() {
            out.push_str(&format!("{},{},{},{}", self.radii[i], self.h[i], self.d[i], self.frequency[i]));
            for s in self.weiss.iter().chain(&self.monneau) {
                out.push_str(&format!(",{}", s.values[i]));
            }
            out.push('\n');
        }
        out
    }

    /// Whitespace-separated columns with a `#` header, for gnuplot.
    pub fn to_gnuplot(&self) -> String {
        self.to_csv()
            .lines()
            .enumerate()
            .map(|(i, l)| if i == 0 { format!("# {}\n", l.replace(',', " ")) } else { format!("{}\n", l.replace(',', " ")) })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FnField;
    use crate::poly::{ext_a, parse_poly, MultiPoly};

    fn quartic() -> MultiPoly {
        ext_a(&parse_poly("x1^2 x2^2", 2).unwrap(), 0.0).unwrap()
    }

    #[test]
    fn homogeneous_polynomial_has_constant_frequency() {
        let p = quartic();
        let prof = profile(&p, &[0.0, 0.0], &default_radii(0.8), &[4.0], 0.0, &ProfileOptions::default()).unwrap();
        assert!(prof.frequency.iter().all(|f| (f - 4.0).abs() < 1e-10));
        assert!(prof.weiss[0].values.iter().all(|w| w.abs() < 1e-9));
    }

    #[test]
    fn translated_quartic_has_frequency_two() {
        let p = quartic();
        let prof = profile(&p, &[0.3, 0.0], &default_radii(0.2), &[], 0.0, &ProfileOptions::default()).unwrap();
        let z = frequency_at_zero(&prof).unwrap();
        assert!((z.value - 2.0).abs() < 0.02, "{z:?}");
        assert!(prof.frequency_monotone);
    }

    #[test]
    fn constant_field_has_zero_frequency() {
        let c = MultiPoly::constant(1, 2.0);
        let prof = profile(&c, &[0.0], &default_radii(0.5), &[], 0.3, &ProfileOptions::default()).unwrap();
        assert!(prof.frequency.iter().all(|f| f.abs() < 1e-14));
    }

    #[test]
    fn power_profile_frequency() {
        let a = -0.5;
        let f = FnField::power_profile(1, a);
        let prof = profile(&f, &[0.0], &default_radii(0.5), &[], a, &ProfileOptions::default()).unwrap();
        for v in &prof.frequency {
            assert!((v - 1.5).abs() < 0.02, "{v}");
        }
        assert!((frequency_at_zero(&prof).unwrap().value - 1.5).abs() < 0.02);
    }

    #[test]
    fn weiss_checks() {
        let p = quartic();
        let v = weiss_nonneg_check(&p, &[0.0, 0.0], 4.0, &default_radii(0.5), 0.0, &ProfileOptions::default()).unwrap();
        assert!(v.homogeneous_residual.unwrap() < 1e-10);
        let v = weiss_nonneg_check(&p, &[0.5, 0.0], 2.0, &default_radii(0.4), 0.0, &ProfileOptions::default()).unwrap();
        assert!(v.nonnegative && v.monotone);
    }

    #[test]
    fn rejects_off_thin_center() {
        let p = quartic();
        assert!(profile(&p, &[0.0, 0.0, 0.1], &[0.1, 0.2], &[], 0.0, &ProfileOptions::default()).is_err());
    }
}

#[cfg(test)]
mod grid_tests {
    use super::*;
    use crate::field::FnField;
    use crate::grid::{Grid, GridSpec};
    use std::sync::Arc;

    #[test]
    fn grid_power_profile_frequency() {
        let a = -0.5;
        let g = Arc::new(Grid::new(GridSpec::new(1, 129, a)).unwrap());
        let f = ScalarField::from_field(g, &FnField::power_profile(1, a));
        let radii = geometric_radii(0.1, 0.5, 8);
        let prof = profile(&f, &[0.0], &radii, &[], a, &ProfileOptions::default()).unwrap();
        for v in &prof.frequency {
            assert!((v - 1.5).abs() < 0.03, "{:?}", prof.frequency);
        }
    }
}
