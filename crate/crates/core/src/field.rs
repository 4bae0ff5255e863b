//! Functions on `R^{n+1}` that are even in `y`: analytic polynomials,
//! closures and nodal grid fields.

use std::sync::Arc;

use crate::grid::Grid;
use crate::poly::MultiPoly;
use crate::solver::stencil::Stencil;

pub trait Field: Send + Sync {
    /// Dimension of the thin space; points have `n + 1` coordinates.
    fn n(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let step = 1e-6;
        let mut p = x.to_vec();
        (0..x.len())
            .map(|d| {
                p[d] = x[d] + step;
                let hi = self.value(&p);
                p[d] = x[d] - step;
                let lo = self.value(&p);
                p[d] = x[d];
                (hi - lo) / (2.0 * step)
            })
            .collect()
    }

    /// Density of `2 lim_{y -> 0} |y|^a d_y u` at a thin point `x` (length `n`).
    fn thin_flux(&self, x: &[f64], a: f64) -> f64 {
        // exact for A y^{1-a} profiles, vanishing for smooth even ones
        let y = 1e-6;
        let mut p = x.to_vec();
        p.push(y);
        let hi = self.value(&p);
        p[x.len()] = 0.0;
        let lo = self.value(&p);
        2.0 * (1.0 - a) * y.powf(a - 1.0) * (hi - lo)
    }

    fn as_grid(&self) -> Option<&ScalarField> {
        None
    }

    fn as_poly(&self) -> Option<&MultiPoly> {
        None
    }
}

impl Field for MultiPoly {
    fn n(&self) -> usize {
        MultiPoly::n(self)
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.eval(x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        MultiPoly::gradient(self, x)
    }
    fn thin_flux(&self, _x: &[f64], _a: f64) -> f64 {
        0.0
    }
    fn as_poly(&self) -> Option<&MultiPoly> {
        Some(self)
    }
}

type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type VectorFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// A field given by closures.
#[derive(Clone)]
pub struct FnField {
    n: usize,
    f: ScalarFn,
    grad: Option<VectorFn>,
    flux: Option<ScalarFn>,
}

impl FnField {
    pub fn new(n: usize, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self { n, f: Arc::new(f), grad: None, flux: None }
    }

    pub fn with_gradient(mut self, g: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        self.grad = Some(Arc::new(g));
        self
    }

    pub fn with_thin_flux(mut self, g: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.flux = Some(Arc::new(g));
        self
    }

    /// `-|y|^{1-a}`, the `(1-a)`-homogeneous solution with full contact.
    pub fn power_profile(n: usize, a: f64) -> Self {
        let s = 1.0 - a;
        FnField::new(n, move |x| -x[n].abs().powf(s))
            .with_gradient(move |x| {
                let mut g = vec![0.0; n + 1];
                let y = x[n];
                g[n] = if y == 0.0 { 0.0 } else { -s * y.abs().powf(s - 1.0) * y.signum() };
                g
            })
            .with_thin_flux(move |_| -2.0 * s)
    }
}

impl Field for FnField {
    fn n(&self) -> usize {
        self.n
    }
    fn value(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        match &self.grad {
            Some(g) => g(x),
            None => {
                let step = 1e-6;
                let mut p = x.to_vec();
                (0..x.len())
                    .map(|d| {
                        p[d] = x[d] + step;
                        let hi = (self.f)(&p);
                        p[d] = x[d] - step;
                        let lo = (self.f)(&p);
                        p[d] = x[d];
                        (hi - lo) / (2.0 * step)
                    })
                    .collect()
            }
        }
    }
    fn thin_flux(&self, x: &[f64], a: f64) -> f64 {
        match &self.flux {
            Some(g) => g(x),
            None => {
                let y = 1e-6;
                let mut p = x.to_vec();
                p.push(y);
                let hi = (self.f)(&p);
                p[x.len()] = 0.0;
                let lo = (self.f)(&p);
                2.0 * (1.0 - a) * y.powf(a - 1.0) * (hi - lo)
            }
        }
    }
}

/// `X -> base(center + X) - minus(X)`.
pub struct Shifted<'a> {
    pub base: &'a dyn Field,
    pub center: Vec<f64>,
    pub minus: Option<&'a MultiPoly>,
}

impl<'a> Shifted<'a> {
    pub fn new(base: &'a dyn Field, center: &[f64], minus: Option<&'a MultiPoly>) -> Self {
        Self { base, center: center.to_vec(), minus }
    }

    fn abs_point(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.center).map(|(a, b)| a + b).collect()
    }
}

impl Field for Shifted<'_> {
    fn n(&self) -> usize {
        self.base.n()
    }
    fn value(&self, x: &[f64]) -> f64 {
        let v = self.base.value(&self.abs_point(x));
        match self.minus {
            Some(p) => v - p.eval(x),
            None => v,
        }
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = self.base.gradient(&self.abs_point(x));
        if let Some(p) = self.minus {
            for (gi, pi) in g.iter_mut().zip(p.gradient(x)) {
                *gi -= pi;
            }
        }
        g
    }
    fn thin_flux(&self, x: &[f64], a: f64) -> f64 {
        let c: Vec<f64> = x.iter().zip(&self.center).map(|(a, b)| a + b).collect();
        self.base.thin_flux(&c, a)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interp {
    Multilinear,
    Cubic,
}

/// Nodal values on a [`Grid`]'s half domain.
#[derive(Debug, Clone)]
pub struct ScalarField {
    pub grid: Arc<Grid>,
    pub values: Vec<f64>,
    pub interp: Interp,
    /// Near-field factor of the codimension-two stencil, when the field came
    /// from a very thin solve.
    pub line_mu: Option<f64>,
}

fn lagrange4(u: f64) -> ([f64; 4], [f64; 4]) {
    let mut w = [0.0; 4];
    let mut dw = [0.0; 4];
    for j in 0..4 {
        let mut denom = 1.0;
        let mut num = 1.0;
        for m in 0..4 {
            if m != j {
                denom *= j as f64 - m as f64;
                num *= u - m as f64;
            }
        }
        w[j] = num / denom;
        let mut d = 0.0;
        for l in 0..4 {
            if l == j {
                continue;
            }
            let mut t = 1.0;
            for m in 0..4 {
                if m != j && m != l {
                    t *= u - m as f64;
                }
            }
            d += t;
        }
        dw[j] = d / denom;
    }
    (w, dw)
}

struct AxisStencil {
    idx: [usize; 4],
    w: [f64; 4],
    dw: [f64; 4],
    len: usize,
}

impl ScalarField {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.len(), "value count must match the grid");
        Self { grid, values, interp: Interp::Multilinear, line_mu: None }
    }

    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.coords(i))).collect();
        Self::new(grid, values)
    }

    pub fn from_field(grid: Arc<Grid>, f: &dyn Field) -> Self {
        Self::from_fn(grid, |x| f.value(x))
    }

    pub fn with_interp(mut self, interp: Interp) -> Self {
        self.interp = interp;
        self
    }

    pub fn stencil(&self) -> Stencil<'_> {
        Stencil::new(&self.grid, self.line_mu)
    }

    fn axis(&self, axis: usize, x: f64) -> AxisStencil {
        let g = &self.grid;
        let h = g.h;
        let is_y = axis == g.n();
        let count = if is_y { g.ny } else { g.res() };
        let origin = if is_y { 0.0 } else { -crate::grid::HALF_WIDTH };
        let t = (x - origin) / h;
        let i = (t.floor() as isize).clamp(0, count as isize - 2);
        match self.interp {
            Interp::Multilinear => {
                let s = t - i as f64;
                AxisStencil {
                    idx: [i as usize, i as usize + 1, 0, 0],
                    w: [1.0 - s, s, 0.0, 0.0],
                    dw: [-1.0 / h, 1.0 / h, 0.0, 0.0],
                    len: 2,
                }
            }
            Interp::Cubic => {
                let lo = if is_y { -1 } else { 0 };
                let start = (i - 1).clamp(lo, count as isize - 4);
                let (w, dw) = lagrange4(t - start as f64);
                let mut idx = [0usize; 4];
                for (m, id) in idx.iter_mut().enumerate() {
                    // even reflection across y = 0
                    *id = (start + m as isize).unsigned_abs();
                }
                AxisStencil { idx, w, dw: dw.map(|d| d / h), len: 4 }
            }
        }
    }

    fn interpolate(&self, x: &[f64], want_grad: bool) -> (f64, Vec<f64>) {
        let g = &self.grid;
        let n = g.n();
        let mut pt = x.to_vec();
        let ysign = if x[n] < 0.0 { -1.0 } else { 1.0 };
        pt[n] = x[n].abs();
        let axes: Vec<AxisStencil> = (0..=n).map(|d| self.axis(d, pt[d])).collect();
        let mut val = 0.0;
        let mut grad = vec![0.0; n + 1];
        let mut counter = vec![0usize; n + 1];
        loop {
            let mut idx = 0;
            let mut w = 1.0;
            for d in 0..=n {
                idx += axes[d].idx[counter[d]] * g.stride(d);
                w *= axes[d].w[counter[d]];
            }
            let v = self.values[idx];
            val += w * v;
            if want_grad {
                for (dd, gd) in grad.iter_mut().enumerate() {
                    let mut wd = 1.0;
                    for d in 0..=n {
                        wd *= if d == dd { axes[d].dw[counter[d]] } else { axes[d].w[counter[d]] };
                    }
                    *gd += wd * v;
                }
            }
            let mut d = 0;
            loop {
                counter[d] += 1;
                if counter[d] < axes[d].len {
                    break;
                }
                counter[d] = 0;
                d += 1;
                if d > n {
                    grad[n] *= ysign;
                    return (val, grad);
                }
            }
        }
    }

    /// Nearest-node index for a point in the half domain.
    pub fn nearest_node(&self, x: &[f64]) -> usize {
        let g = &self.grid;
        let n = g.n();
        let ijk: Vec<usize> = (0..=n)
            .map(|d| {
                let (origin, count) =
                    if d == n { (0.0, g.ny) } else { (-crate::grid::HALF_WIDTH, g.res()) };
                let c = if d == n { x[d].abs() } else { x[d] };
                (((c - origin) / g.h).round().max(0.0) as usize).min(count - 1)
            })
            .collect();
        g.index(&ijk)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl Field for ScalarField {
    fn n(&self) -> usize {
        self.grid.n()
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.interpolate(x, false).0
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.interpolate(x, true).1
    }
    /// Flux density at the nearest thin node, from the discrete balance.
    fn thin_flux(&self, x: &[f64], _a: f64) -> f64 {
        let mut p = x.to_vec();
        p.push(0.0);
        let idx = self.nearest_node(&p);
        if self.grid.is_boundary(idx) {
            return 0.0;
        }
        let st = self.stencil();
        st.thin_flux_density(st.residual(&self.values, idx))
    }
    fn as_grid(&self) -> Option<&ScalarField> {
        Some(self)
    }
}
