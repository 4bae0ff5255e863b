//! First and second blow-ups at thin points.
//!
//! The first blow-up is the limit of `u(c + r X) / r^kappa`, found by
//! projecting rescaled traces onto the `kappa`-homogeneous `a`-harmonic
//! polynomials at two radii. The second blow-up looks at `v = u(c + .) - p*`:
//! its homogeneity from the growth of `H(r, v)`, and its limit profile either
//! as a polynomial or, for codimension-two spines with `a < 0`, as a sampled
//! solution of the very thin problem.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::diagnostics::{default_radii, fit_intercept_in_r2, frequency_at_zero, geometric_radii, profile, sphere_mass};
use crate::diagnostics::{ProfileOptions, ZeroFit};
use crate::error::{invalid, Result};
use crate::field::{Field, Interp, Shifted};
use crate::grid::HALF_WIDTH;
use crate::poly::exponents_of_degree;
use crate::poly::{ext_a, homogeneous_basis, is_in_p_kappa, la_residual, spine_with_tol, Membership};
use crate::poly::{MembershipOptions, MultiPoly, SpineBasis};
use crate::quadrature::SphereRule;
use crate::very_thin::{f_a_flux, FluxOptions};

#[derive(Debug, Clone)]
pub struct BlowupOptions {
    /// Radii for the frequency limit; defaults depend on the field.
    pub radii: Option<Vec<f64>>,
    /// Radius of the first-blow-up fit (the second radius is twice this).
    pub fit_radius: Option<f64>,
    /// Radii for the growth rate of `H(r, v)`.
    pub lambda_radii: Option<Vec<f64>>,
    /// Radius of the second-blow-up fit.
    pub q_radius: Option<f64>,
    pub degree: usize,
    pub snap_tol: f64,
    /// Largest relative trace misfit of a polynomial second blow-up.
    pub residual_tol: f64,
    /// Relative size of `u - p*` below which the second blow-up is degenerate;
    /// raised to `h^2` on grids.
    pub noise_floor: f64,
    /// Tolerance of the sign and complementarity checks.
    pub tol: f64,
    /// Relative singular-value cutoff of the spine; defaults to `1e-6` for
    /// analytic fields and `10 h^2` on grids, the size of the fit error.
    pub spine_tol: Option<f64>,
}

impl Default for BlowupOptions {
    fn default() -> Self {
        Self {
            radii: None,
            fit_radius: None,
            lambda_radii: None,
            q_radius: None,
            degree: 62,
            snap_tol: 0.1,
            residual_tol: 0.05,
            noise_floor: 1e-12,
            tol: 1e-3,
            spine_tol: None,
        }
    }
}

/// Concrete radii for one field and center.
struct Scales {
    radii: Vec<f64>,
    fit: f64,
    lambda: Vec<f64>,
    q: f64,
    h: Option<f64>,
}

fn scales(field: &dyn Field, center: &[f64], kappa: f64, opts: &BlowupOptions) -> Result<Scales> {
    let n = field.n();
    let (radii, fit, lambda, h) = match field.as_grid() {
        None => (default_radii(0.5), 0.05, geometric_radii(0.01, 0.1, 9), None),
        Some(g) => {
            let h = g.grid.h;
            let reach = HALF_WIDTH - center[..n].iter().fold(0.0f64, |m, c| m.max(c.abs()));
            if reach < 16.0 * h {
                return invalid("center too close to the cube boundary for a blow-up");
            }
            let top = reach.min(0.5);
            let lo = (4.0 * h * kappa.max(1.0)).min(top / 2.0);
            (geometric_radii(4.0 * h, top, 10), (8.0 * h).max(0.1).min(top / 2.0), geometric_radii(lo, top.min(0.3).max(lo * 2.0), 8), Some(h))
        }
    };
    let radii = opts.radii.clone().unwrap_or(radii);
    let fit = opts.fit_radius.unwrap_or(fit);
    let lambda = opts.lambda_radii.clone().unwrap_or(lambda);
    let q = opts.q_radius.unwrap_or(lambda[0]);
    Ok(Scales { radii, fit, lambda, q, h })
}

fn thin_center(field: &dyn Field, center: &[f64]) -> Result<Vec<f64>> {
    let n = field.n();
    let mut c = center.to_vec();
    if c.len() == n {
        c.push(0.0);
    }
    if c.len() != n + 1 || c[n] != 0.0 {
        return invalid("blow-up centers must lie on the thin space");
    }
    Ok(c)
}

/// Least-squares coefficients of `field(c + r w) / r^k` in `basis` over the
/// weighted unit sphere.
fn project(field: &dyn Field, center: &[f64], basis: &[MultiPoly], k: f64, r: f64, a: f64, degree: usize) -> Result<Vec<f64>> {
    let rule = SphereRule::cached(field.n(), a, degree);
    let m = basis.len();
    let samples: Vec<f64> = rule
        .points
        .iter()
        .map(|w| {
            let p: Vec<f64> = center.iter().zip(w).map(|(c, w)| c + r * w).collect();
            field.value(&p) / r.powf(k)
        })
        .collect();
    let values: Vec<Vec<f64>> = basis.iter().map(|b| rule.points.iter().map(|w| b.eval(w)).collect()).collect();
    let gram = DMatrix::from_fn(m, m, |i, j| rule.weights.iter().enumerate().map(|(s, w)| w * values[i][s] * values[j][s]).sum());
    let rhs = DVector::from_fn(m, |i, _| rule.weights.iter().enumerate().map(|(s, w)| w * values[i][s] * samples[s]).sum());
    match gram.cholesky() {
        Some(ch) => Ok(ch.solve(&rhs).iter().copied().collect()),
        None => invalid("basis Gram matrix is singular"),
    }
}

fn combine(basis: &[MultiPoly], coeffs: &[f64]) -> MultiPoly {
    let mut out = MultiPoly::zero(basis[0].n());
    for (b, c) in basis.iter().zip(coeffs) {
        out = &out + &b.scale(c);
    }
    out
}

/// Projection at `r` and `2r` followed by one Richardson step; odd-degree
/// corrections integrate to zero, so the leading error is `O(r^2)`.
fn richardson_fit(field: &dyn Field, center: &[f64], k: u32, r: f64, a: f64, degree: usize) -> Result<(MultiPoly, f64)> {
    let basis = homogeneous_basis(field.n(), k, a)?;
    let degree = degree.max(2 * k as usize + 2);
    let c1 = project(field, center, &basis, k as f64, r, a, degree)?;
    let c2 = project(field, center, &basis, k as f64, 2.0 * r, a, degree)?;
    let fine: Vec<f64> = c1.iter().zip(&c2).map(|(x, y)| (4.0 * x - y) / 3.0).collect();
    let p = combine(&basis, &fine).pruned(1e-13);
    let diff = combine(&basis, &c1.iter().zip(&c2).map(|(x, y)| (x - y) / 3.0).collect::<Vec<_>>());
    let norm = crate::poly::sphere_norm(&p, a);
    let spread = if norm > 0.0 { crate::poly::sphere_norm(&diff, a) / norm } else { f64::INFINITY };
    Ok((p, spread))
}

#[derive(Debug, Clone, Serialize)]
pub struct FirstBlowup {
    pub center: Vec<f64>,
    pub kappa: u32,
    pub p_star: MultiPoly,
    pub frequency: ZeroFit,
    /// Relative change of the fit between the two radii.
    pub fit_residual: f64,
    pub low_confidence: bool,
    pub membership: Membership,
    pub spine: SpineBasis,
    pub notices: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum FirstOutcome {
    Singular(Box<FirstBlowup>),
    NotSingular { center: Vec<f64>, frequency: f64, notice: String },
}

impl FirstOutcome {
    pub fn singular(&self) -> Option<&FirstBlowup> {
        match self {
            FirstOutcome::Singular(b) => Some(b),
            FirstOutcome::NotSingular { .. } => None,
        }
    }
}

pub fn first_blowup(field: &dyn Field, center: &[f64], a: f64, opts: &BlowupOptions) -> Result<FirstOutcome> {
    let cubic = field.as_grid().map(|g| g.clone().with_interp(Interp::Cubic));
    let field: &dyn Field = match &cubic {
        Some(g) => g,
        None => field,
    };
    let c = thin_center(field, center)?;
    let sc = scales(field, &c, 2.0, opts)?;
    let popts = ProfileOptions { degree: opts.degree, ..Default::default() };
    let prof = profile(field, &c, &sc.radii, &[], a, &popts)?;
    let frequency = frequency_at_zero(&prof)?;
    let nearest = 2.0 * (frequency.value / 2.0).round();
    if (frequency.value - nearest).abs() > opts.snap_tol || nearest < 2.0 {
        return Ok(FirstOutcome::NotSingular {
            center: c,
            frequency: frequency.value,
            notice: format!("frequency {:.4} is not within {} of an even integer >= 2", frequency.value, opts.snap_tol),
        });
    }
    let kappa = nearest as u32;
    let (p_star, fit_residual) = richardson_fit(field, &c, kappa, sc.fit, a, opts.degree)?;
    let membership = is_in_p_kappa(&p_star, kappa, a, &MembershipOptions { tol: 1e-6, ..Default::default() });
    let mut notices = prof.notices.clone();
    let mut low_confidence = frequency.low_confidence;
    if fit_residual > 1e-2 {
        low_confidence = true;
        notices.push(format!("first blow-up changes by {fit_residual:.2e} between radii"));
    }
    if !membership.member {
        low_confidence = true;
        notices.push("fitted first blow-up fails the admissible-cone check".into());
    }
    let spine = spine_with_tol(&p_star, opts.spine_tol.unwrap_or(sc.h.map_or(1e-6, |h| 10.0 * h * h)));
    Ok(FirstOutcome::Singular(Box::new(FirstBlowup {
        center: c,
        kappa,
        p_star,
        frequency,
        fit_residual,
        low_confidence,
        membership,
        spine,
        notices,
    })))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SecondCase {
    Polynomial,
    VeryThinSolution,
    Degenerate,
    Unclassified,
}

#[derive(Debug, Clone, Serialize)]
pub struct Orthogonality {
    pub with_p_star: f64,
    /// `<q, 2 p*>` and `<q, p*/2>`; both must be `<= tol` for the sign
    /// inequality to leave `<q, p*> = 0`.
    pub doubled: f64,
    pub halved: f64,
    pub probes: Vec<(String, f64)>,
    pub probe_max: f64,
    pub holds: bool,
}

/// Fixed probes of the admissible cone: `Ext_a(|x|^k)`, `Ext_a(x_i^k)` and
/// `Ext_a((x_i +- x_j)^k / 2^{k/2})`.
pub fn probe_set(n: usize, kappa: u32, a: f64) -> Result<Vec<(String, MultiPoly)>> {
    let var = |i: usize| MultiPoly::var(n, i);
    let mut out = Vec::new();
    let mut r2 = MultiPoly::zero(n);
    for i in 0..n {
        r2 = &r2 + &(&var(i) * &var(i));
    }
    out.push((format!("|x|^{kappa}"), ext_a(&r2.pow(kappa / 2), a)?));
    for i in 0..n {
        out.push((format!("x{}^{kappa}", i + 1), ext_a(&var(i).pow(kappa), a)?));
    }
    let s = 2f64.powf(-(kappa as f64) / 2.0);
    for i in 0..n {
        for j in i + 1..n {
            for (sign, tag) in [(1.0, '+'), (-1.0, '-')] {
                let lin = &var(i) + &var(j).scale(&sign);
                out.push((format!("(x{}{tag}x{})^{kappa}/2^{}", i + 1, j + 1, kappa / 2), ext_a(&lin.pow(kappa).scale(&s), a)?));
            }
        }
    }
    Ok(out)
}

fn inner(q: &dyn Field, p: &MultiPoly, a: f64, degree: usize) -> f64 {
    let degree = match q.as_poly() {
        Some(qp) => (qp.degree() + p.degree()) as usize + 4,
        None => degree,
    };
    SphereRule::cached(p.n(), a, degree).integrate(|w| q.value(w) * p.eval(w))
}

/// The orthogonality relations a second blow-up must satisfy against the
/// first blow-up and the probe set.
pub fn orthogonality(q: &dyn Field, p_star: &MultiPoly, kappa: u32, a: f64, tol: f64) -> Result<Orthogonality> {
    let degree = 62;
    let with_p_star = inner(q, p_star, a, degree);
    let probes: Vec<(String, f64)> =
        probe_set(q.n(), kappa, a)?.into_iter().map(|(name, p)| (name, inner(q, &p, a, degree))).collect();
    let probe_max = probes.iter().map(|(_, v)| *v).fold(f64::NEG_INFINITY, f64::max);
    let doubled = 2.0 * with_p_star;
    let halved = 0.5 * with_p_star;
    let holds = with_p_star.abs() <= tol && doubled <= tol && halved <= tol && probe_max <= tol;
    Ok(Orthogonality { with_p_star, doubled, halved, probes, probe_max, holds })
}

/// Second blow-up profile handed to the classifier.
pub enum QProfile<'a> {
    Poly(&'a MultiPoly),
    Field(&'a dyn Field),
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassVerdict {
    pub case: SecondCase,
    /// `a`-harmonicity residual: coefficient-relative for polynomials, finite
    /// differences away from the thin space otherwise.
    pub harmonic_residual: f64,
    pub homogeneity_residual: f64,
    /// Very thin checks, present when the geometry allows that case.
    pub min_on_spine: Option<f64>,
    pub max_flux: Option<f64>,
    pub complementarity: Option<f64>,
    /// A polynomial that also satisfies the very thin system.
    pub polynomial_subcase: bool,
    /// Homogeneity below `kappa`, impossible for a genuine second blow-up.
    pub below_kappa: bool,
}

#[derive(Debug, Clone)]
pub struct ClassifyOptions {
    pub tol: f64,
    pub flux: FluxOptions,
    /// Spine points sampled per direction.
    pub spine_samples: usize,
    /// Finite-difference step of the harmonicity check; at least a few cells
    /// for grid fields.
    pub fd_step: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self { tol: 1e-3, flux: FluxOptions::default(), spine_samples: 5, fd_step: 1e-3 }
    }
}

/// Field in coordinates adapted to a spine of dimension `n - 1`: local
/// `(t, s, y)` maps to `sum t_i e_i + s nu` with `nu` the unit normal.
struct Framed<'a> {
    base: &'a dyn Field,
    frame: Vec<Vec<f64>>,
}

impl Framed<'_> {
    fn global(&self, x: &[f64]) -> Vec<f64> {
        let n = self.frame.len();
        let mut g = vec![0.0; n + 1];
        for (xi, row) in x.iter().zip(&self.frame) {
            for (gj, rj) in g.iter_mut().zip(row) {
                *gj += xi * rj;
            }
        }
        g[n] = x[n];
        g
    }
}

impl Field for Framed<'_> {
    fn n(&self) -> usize {
        self.base.n()
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.base.value(&self.global(x))
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let n = self.frame.len();
        let g = self.base.gradient(&self.global(x));
        let mut out: Vec<f64> = self.frame.iter().map(|row| row.iter().zip(&g).map(|(r, gi)| r * gi).sum()).collect();
        out.push(g[n]);
        out
    }
}

fn codim_two_frame(sp: &SpineBasis, n: usize) -> Vec<Vec<f64>> {
    let mut frame = sp.vectors.clone();
    // normal: the standard basis vector with the largest residual after projection
    let mut best = vec![0.0; n];
    let mut best_norm = -1.0;
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        let p = sp.project(&e);
        let r: Vec<f64> = e.iter().zip(&p).map(|(a, b)| a - b).collect();
        let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > best_norm {
            best_norm = norm;
            best = r.into_iter().map(|v| v / norm).collect();
        }
    }
    frame.push(best);
    frame
}

fn sphere_samples(n: usize, count: usize) -> Vec<Vec<f64>> {
    SphereRule::cached(n, 0.0, count).points.clone()
}

/// Sorts a second blow-up into the polynomial case, the very thin case, or
/// neither.
pub fn classify_second_blowup(
    q: QProfile<'_>,
    lambda: f64,
    sp: &SpineBasis,
    a: f64,
    kappa: u32,
    opts: &ClassifyOptions,
) -> Result<ClassVerdict> {
    let field: &dyn Field = match q {
        QProfile::Poly(p) => p,
        QProfile::Field(f) => f,
    };
    let n = field.n();
    let tol = opts.tol;
    let very_thin_geometry = a < 0.0 && sp.dim + 1 == n;
    let samples = sphere_samples(n, 8);
    let scale = samples.iter().fold(0.0f64, |m, x| m.max(field.value(x).abs())).max(f64::MIN_POSITIVE);
    let (harmonic_residual, homogeneity_residual) = match q {
        QProfile::Poly(p) => {
            let r = la_residual(p, a)?.max_coeff() / p.max_coeff().max(f64::MIN_POSITIVE);
            let hom = if p.homogeneity().map(f64::from) == Some(lambda.round()) && (lambda - lambda.round()).abs() <= 0.1 {
                0.0
            } else {
                1.0
            };
            (r, hom)
        }
        QProfile::Field(f) => (fd_harmonic_residual(f, a, scale, opts.fd_step), homogeneity_residual(f, lambda, &samples, scale)),
    };
    let (min_on_spine, max_flux, complementarity) = if very_thin_geometry {
        let framed = Framed { base: field, frame: codim_two_frame(sp, n) };
        let (m, f, c) = very_thin_checks(&framed, a, opts)?;
        (Some(m / scale), Some(f / scale), Some(c / (scale * scale)))
    } else {
        (None, None, None)
    };
    let thin_ok = min_on_spine.is_some_and(|m| m >= -tol)
        && max_flux.is_some_and(|f| f <= tol)
        && complementarity.is_some_and(|c| c <= tol);
    let polynomial = matches!(q, QProfile::Poly(_)) && harmonic_residual <= 1e-9 && homogeneity_residual == 0.0;
    let case = if polynomial {
        SecondCase::Polynomial
    } else if very_thin_geometry && thin_ok && harmonic_residual <= tol.sqrt() && homogeneity_residual <= tol.sqrt() {
        SecondCase::VeryThinSolution
    } else {
        SecondCase::Unclassified
    };
    Ok(ClassVerdict {
        case,
        harmonic_residual,
        homogeneity_residual,
        min_on_spine,
        max_flux,
        complementarity,
        polynomial_subcase: polynomial && thin_ok,
        below_kappa: lambda < kappa as f64 - 0.1,
    })
}

/// Smallest value, largest flux and largest `|q f_a|` over spine samples of
/// radius at most `1/2`, in framed coordinates.
fn very_thin_checks(f: &Framed<'_>, a: f64, opts: &ClassifyOptions) -> Result<(f64, f64, f64)> {
    let n = f.n();
    let m = n - 1;
    let mut points: Vec<Vec<f64>> = vec![vec![0.0; m]];
    let k = opts.spine_samples.max(1);
    for d in 0..m {
        for j in 1..=k {
            for s in [1.0, -1.0] {
                let mut t = vec![0.0; m];
                t[d] = s * 0.5 * j as f64 / k as f64;
                points.push(t);
            }
        }
    }
    let mut min_value = f64::INFINITY;
    let mut max_flux = f64::NEG_INFINITY;
    let mut comp = 0.0f64;
    for t in &points {
        let mut x = t.clone();
        x.extend([0.0, 0.0]);
        let v = f.value(&x);
        let flux = f_a_flux(f, t, a, &opts.flux)?.value;
        min_value = min_value.min(v);
        max_flux = max_flux.max(flux);
        comp = comp.max((v * flux).abs());
    }
    Ok((min_value, max_flux, comp))
}

/// `max |L_a q| / (|q|_max)` by centered differences at points of the half
/// sphere of radius `1/2` with `y >= 0.2`.
fn fd_harmonic_residual(f: &dyn Field, a: f64, scale: f64, s: f64) -> f64 {
    let n = f.n();
    let mut worst = 0.0f64;
    for w in sphere_samples(n, 6) {
        if w[n] < 0.4 {
            continue;
        }
        let x: Vec<f64> = w.iter().map(|c| 0.5 * c).collect();
        let u0 = f.value(&x);
        let mut lap = 0.0;
        let mut p = x.clone();
        for d in 0..=n {
            p[d] = x[d] + s;
            let hi = f.value(&p);
            p[d] = x[d] - s;
            let lo = f.value(&p);
            p[d] = x[d];
            lap += (hi - 2.0 * u0 + lo) / (s * s);
            if d == n {
                lap += a * (hi - lo) / (2.0 * s) / x[n];
            }
        }
        worst = worst.max(lap.abs());
    }
    worst * 0.25 / scale
}

fn homogeneity_residual(f: &dyn Field, lambda: f64, samples: &[Vec<f64>], scale: f64) -> f64 {
    samples
        .iter()
        .map(|w| {
            let half: Vec<f64> = w.iter().map(|c| 0.5 * c).collect();
            (f.value(w) - 2f64.powf(lambda) * f.value(&half)).abs()
        })
        .fold(0.0f64, f64::max)
        / scale
}

/// `X -> (u(c + r X) - p*(r X)) * factor`.
struct Rescaled<'a> {
    inner: Shifted<'a>,
    r: f64,
    factor: f64,
}

impl Field for Rescaled<'_> {
    fn n(&self) -> usize {
        self.inner.n()
    }
    fn value(&self, x: &[f64]) -> f64 {
        let p: Vec<f64> = x.iter().map(|c| self.r * c).collect();
        self.factor * self.inner.value(&p)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let p: Vec<f64> = x.iter().map(|c| self.r * c).collect();
        self.inner.gradient(&p).into_iter().map(|g| self.factor * self.r * g).collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LambdaFit {
    pub value: f64,
    /// Jackknife standard error.
    pub error: f64,
    pub radii: Vec<f64>,
    pub h: Vec<f64>,
}

/// Growth rate of `H(r, v)`: `log H = 2 lambda log r + c0 + c1 r^2`.
fn fit_lambda(radii: &[f64], h: &[f64]) -> Result<f64> {
    let pts: Vec<(f64, f64, f64)> =
        radii.iter().zip(h).filter(|(_, h)| **h > 0.0).map(|(r, h)| (r.ln(), h.ln(), r * r)).collect();
    let with_curvature = pts.len() >= 5;
    let cols = if with_curvature { 3 } else { 2 };
    if pts.len() < cols {
        return invalid("too few positive values of H to fit a growth rate");
    }
    let m = DMatrix::from_fn(pts.len(), cols, |i, j| match j {
        0 => 1.0,
        1 => pts[i].0,
        _ => pts[i].2,
    });
    let b = DVector::from_iterator(pts.len(), pts.iter().map(|p| p.1));
    let sol = m.svd(true, true).solve(&b, 1e-14).map_err(|e| crate::error::LabError::Invalid(e.into()))?;
    Ok(sol[1] / 2.0)
}

fn lambda_fit(v: &dyn Field, radii: &[f64], a: f64, degree: usize) -> Result<LambdaFit> {
    let zero = vec![0.0; v.n() + 1];
    let h: Vec<f64> = radii.iter().map(|&r| sphere_mass(v, &zero, r, a, degree)).collect();
    let value = fit_lambda(radii, &h)?;
    let k = radii.len();
    let loo: Vec<f64> = (0..k)
        .filter_map(|skip| {
            let r: Vec<f64> = radii.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, r)| *r).collect();
            let hh: Vec<f64> = h.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, h)| *h).collect();
            fit_lambda(&r, &hh).ok()
        })
        .collect();
    let mean = loo.iter().sum::<f64>() / loo.len().max(1) as f64;
    let var = loo.iter().map(|l| (l - mean).powi(2)).sum::<f64>() * (loo.len() as f64 - 1.0) / loo.len().max(1) as f64;
    Ok(LambdaFit { value, error: var.max(0.0).sqrt(), radii: radii.to_vec(), h })
}

#[derive(Debug, Clone, Copy, Serialize, PartialEq, Eq)]
pub struct NxtFlags {
    /// Polynomial second blow-up of homogeneity `kappa + 1`.
    pub polynomial_next: bool,
    /// Derivatives of order up to `kappa - 2` vanish on the spine.
    pub spine_vanishing: Option<bool>,
    /// `|q|^2` equals the limit of `H_{kappa+1}`.
    pub energy_match: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BlowupReport {
    pub center: Vec<f64>,
    pub kappa: u32,
    pub p_star: MultiPoly,
    pub m: usize,
    pub spine: Vec<Vec<f64>>,
    pub lambda_star: Option<LambdaFit>,
    pub case: SecondCase,
    /// Polynomial limit `lim v(rX)/r^k`, unnormalized.
    pub q: Option<MultiPoly>,
    /// Normalized rescaled trace on the unit sphere when `q` is not polynomial.
    pub q_samples: Option<Vec<(Vec<f64>, f64)>>,
    pub p_star_residual: f64,
    pub q_residual: Option<f64>,
    pub orthogonality: Option<Orthogonality>,
    pub verdict: Option<ClassVerdict>,
    /// `lambda* - kappa` in the very thin case.
    pub gap: Option<f64>,
    /// `lim H(r, v) / r^{2 kappa + 2}`, extrapolated in `r^2`.
    pub h_next_at_zero: Option<f64>,
    pub nxt: NxtFlags,
    pub notices: Vec<String>,
}

pub fn second_blowup(field: &dyn Field, first: &FirstBlowup, a: f64, opts: &BlowupOptions) -> Result<BlowupReport> {
    let cubic = field.as_grid().map(|g| g.clone().with_interp(Interp::Cubic));
    let field: &dyn Field = match &cubic {
        Some(g) => g,
        None => field,
    };
    let c = &first.center;
    let n = field.n();
    let kappa = first.kappa;
    let sc = scales(field, c, kappa as f64, opts)?;
    let v = Shifted::new(field, c, Some(&first.p_star));
    let zero = vec![0.0; n + 1];
    let u_norm = sphere_mass(&Shifted::new(field, c, None), &zero, sc.fit, a, opts.degree).sqrt();
    let v_norm = sphere_mass(&v, &zero, sc.fit, a, opts.degree).sqrt();
    let mut report = BlowupReport {
        center: c.clone(),
        kappa,
        p_star: first.p_star.clone(),
        m: first.spine.dim,
        spine: first.spine.vectors.clone(),
        lambda_star: None,
        case: SecondCase::Degenerate,
        q: None,
        q_samples: None,
        p_star_residual: first.fit_residual,
        q_residual: None,
        orthogonality: None,
        verdict: None,
        gap: None,
        h_next_at_zero: None,
        nxt: NxtFlags { polynomial_next: false, spine_vanishing: None, energy_match: None },
        notices: Vec::new(),
    };
    // on grids the first blow-up is only fitted to O(h^2)
    let floor = sc.h.map_or(opts.noise_floor, |h| opts.noise_floor.max(h * h));
    if v_norm <= floor * u_norm {
        report.notices.push("field coincides with its first blow-up".into());
        return Ok(report);
    }
    let lam = lambda_fit(&v, &sc.lambda, a, opts.degree)?;
    let lambda = lam.value;
    if lambda < kappa as f64 - opts.snap_tol {
        report.notices.push(format!("growth rate {lambda:.4} is below kappa"));
    }
    let next: Vec<f64> =
        lam.radii.iter().zip(&lam.h).map(|(r, h)| h / r.powf(2.0 * (kappa + 1) as f64)).collect();
    report.h_next_at_zero = Some(fit_intercept_in_r2(&lam.radii, &next, lam.radii.len()).0);
    let k = lambda.round().max(0.0) as u32;
    let (q, q_residual) = polynomial_fit(&v, k, sc.q, a, opts.degree)?;
    report.q_residual = Some(q_residual);
    report.lambda_star = Some(lam);
    let polynomial = (lambda - k as f64).abs() <= opts.snap_tol && q_residual <= opts.residual_tol;
    let copts = ClassifyOptions {
        tol: opts.tol,
        flux: FluxOptions { eps: sc.h.map(|h| 2.0 * h / sc.q), order: sc.h.map(|_| 1.0), ..Default::default() },
        fd_step: sc.h.map_or(1e-3, |h| 2.0 * h / sc.q),
        ..Default::default()
    };
    if polynomial {
        let verdict = classify_second_blowup(QProfile::Poly(&q), lambda, &first.spine, a, kappa, &copts)?;
        report.case = verdict.case;
        report.orthogonality = Some(orthogonality(&q, &first.p_star, kappa, a, 1e-6)?);
        report.verdict = Some(verdict);
        report.q = Some(q);
    } else if a < 0.0 && first.spine.dim + 1 == n {
        let factor = 1.0 / sphere_mass(&v, &zero, sc.q, a, opts.degree).sqrt();
        let scaled = Rescaled { inner: Shifted::new(field, c, Some(&first.p_star)), r: sc.q, factor };
        let verdict = classify_second_blowup(QProfile::Field(&scaled), lambda, &first.spine, a, kappa, &copts)?;
        if verdict.case != SecondCase::VeryThinSolution {
            report.notices.push("very thin checks fail for the rescaled second blow-up".into());
        }
        report.case = SecondCase::VeryThinSolution;
        report.gap = Some(lambda - kappa as f64);
        report.orthogonality = Some(orthogonality(&scaled, &first.p_star, kappa, a, opts.tol)?);
        report.q_samples = Some(sphere_samples(n, 8).into_iter().map(|w| (w.clone(), scaled.value(&w))).collect());
        report.verdict = Some(verdict);
    } else {
        report.case = SecondCase::Unclassified;
        report.notices.push(format!("growth rate {lambda:.4} with trace misfit {q_residual:.2e} fits neither case"));
    }
    report.nxt = nxt_membership(&report, a);
    Ok(report)
}

/// Richardson fit of `v(r X)/r^k` by `k`-homogeneous `a`-harmonic
/// polynomials, with the relative trace misfit at `r`.
fn polynomial_fit(v: &dyn Field, k: u32, r: f64, a: f64, degree: usize) -> Result<(MultiPoly, f64)> {
    let zero = vec![0.0; v.n() + 1];
    let (q, _) = richardson_fit(v, &zero, k, r, a, degree)?;
    let rule = SphereRule::cached(v.n(), a, degree.max(2 * k as usize + 2));
    let rk = r.powf(k as f64);
    let (mut miss, mut total) = (0.0, 0.0);
    for (w, wt) in rule.points.iter().zip(&rule.weights) {
        let p: Vec<f64> = w.iter().map(|c| r * c).collect();
        let val = v.value(&p) / rk;
        miss += wt * (val - q.eval(w)).powi(2);
        total += wt * val * val;
    }
    Ok((q, (miss / total.max(f64::MIN_POSITIVE)).sqrt()))
}

/// The three conditions for the next-order stratum.
pub fn nxt_membership(report: &BlowupReport, a: f64) -> NxtFlags {
    let kappa = report.kappa;
    let lambda = report.lambda_star.as_ref().map(|l| l.value);
    let polynomial_next = report.case == SecondCase::Polynomial
        && lambda.is_some_and(|l| (l - (kappa + 1) as f64).abs() < 0.1)
        && report.q.is_some();
    if !polynomial_next {
        return NxtFlags { polynomial_next, spine_vanishing: None, energy_match: None };
    }
    let q = report.q.as_ref().expect("polynomial case carries q");
    let n = q.n();
    // X = sum_i t_i e_i on the spine, y = 0
    let m = report.spine.len();
    let map: Vec<Vec<f64>> = (0..=n)
        .map(|row| {
            let mut r: Vec<f64> = (0..m).map(|i| if row < n { report.spine[i][row] } else { 0.0 }).collect();
            r.push(0.0);
            r
        })
        .collect();
    let scale = q.max_coeff().max(f64::MIN_POSITIVE);
    let mut vanishing = true;
    for order in 0..=kappa.saturating_sub(2) {
        for alpha in exponents_of_degree(n, order) {
            let mut full = alpha.clone();
            full.push(0);
            let restricted = q.derivative_multi(&full).substitute_linear(&map);
            let fact: f64 = (1..=order.max(1)).map(f64::from).product();
            if restricted.max_coeff() > 1e-8 * scale * fact {
                vanishing = false;
            }
        }
    }
    let norm2 = crate::poly::sphere_inner(q, q, a);
    let energy_match = report.h_next_at_zero.map(|h| (norm2 - h).abs() <= 1e-2 * norm2.max(h));
    NxtFlags { polynomial_next, spine_vanishing: Some(vanishing), energy_match }
}

/// Both blow-ups in one call; `None` when the center is not singular.
pub fn blowup(field: &dyn Field, center: &[f64], a: f64, opts: &BlowupOptions) -> Result<(FirstOutcome, Option<BlowupReport>)> {
    let first = first_blowup(field, center, a, opts)?;
    let second = match first.singular() {
        Some(f) => Some(second_blowup(field, f, a, opts)?),
        None => None,
    };
    Ok((first, second))
}
