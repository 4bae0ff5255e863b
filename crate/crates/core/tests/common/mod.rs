//! Field corpus shared by the monotonicity tests and the acceptance run.

#![allow(dead_code)]

use std::sync::Arc;

use obstacle_lab::diagnostics::{default_radii, geometric_radii, profile, FrequencyProfile, ProfileOptions};
use obstacle_lab::field::{Field, FnField, ScalarField, Shifted};
use obstacle_lab::grid::{Grid, GridSpec};
use obstacle_lab::poly::{ext_a, parse_poly, MultiPoly};
use obstacle_lab::solver::{solve, Data, ObstacleSpec, SolveOptions};

/// Proptest settings without regression files.
pub fn config(cases: u32) -> proptest::test_runner::Config {
    proptest::test_runner::Config { cases, failure_persistence: None, ..Default::default() }
}

pub fn ext(s: &str, n: usize, a: f64) -> MultiPoly {
    ext_a(&parse_poly(s, n).unwrap(), a).unwrap()
}

pub fn solve_thin(n: usize, res: usize, a: f64, boundary: &str) -> ScalarField {
    let grid = Arc::new(Grid::new(GridSpec::new(n, res, a)).unwrap());
    let spec = ObstacleSpec::thin(Data::Const(0.0), Data::Poly(ext(boundary, n, a)));
    solve(&grid, &spec, &SolveOptions::with_tol(1e-10)).unwrap().field
}

pub enum Source {
    Grid(ScalarField),
    Poly(MultiPoly),
    Func(FnField),
}

impl Source {
    pub fn field(&self) -> &dyn Field {
        match self {
            Source::Grid(f) => f,
            Source::Poly(p) => p,
            Source::Func(f) => f,
        }
    }
}

pub struct Case {
    pub name: String,
    pub source: Source,
    pub a: f64,
    pub center: Vec<f64>,
    pub radii: Vec<f64>,
    /// Known `N(0+)` at the center.
    pub n0: f64,
    /// Order used for the Weiss series `W_kappa`, `W_{kappa+1}`.
    pub kappa: f64,
    /// Members of the cone subtracted for `N(r, u - p)`.
    pub subtract: Vec<MultiPoly>,
}

const RES: usize = 257;

/// Solved fields on `n = 1` grids and analytic fields; at least eight.
pub fn corpus() -> Vec<Case> {
    let mut out = Vec::new();
    let grid_radii = |h: f64| geometric_radii(16.0 * h, 0.8, 12);
    for a in [-0.5, 0.0, 0.5] {
        let f = solve_thin(1, RES, a, "x1^2");
        let p = ext("x1^2", 1, a);
        out.push(Case {
            name: format!("solved Ext(x1^2), a = {a}"),
            radii: grid_radii(f.grid.h),
            source: Source::Grid(f),
            a,
            center: vec![0.0],
            n0: 2.0,
            kappa: 2.0,
            subtract: vec![p.scale(&0.5), p.scale(&2.0)],
        });
    }
    for (a, g, n0) in [(0.0, "x1^2 + 0.3 x1^3", 2.0), (0.0, "x1^2 - 0.25", 1.0), (-0.5, "x1^2 - 0.2 x1 - 0.1", 1.5), (0.5, "x1^2 + 0.5 x1 - 0.3", 0.5)] {
        let f = solve_thin(1, RES, a, g);
        out.push(Case {
            name: format!("solved g = Ext({g}), a = {a}"),
            radii: grid_radii(f.grid.h),
            source: Source::Grid(f),
            a,
            center: vec![0.0],
            n0,
            kappa: 2.0,
            subtract: vec![],
        });
    }
    let quartic = ext("x1^2 x2^2", 2, 0.0);
    out.push(Case {
        name: "Ext0(x1^2 x2^2) at the origin".into(),
        source: Source::Poly(quartic.clone()),
        a: 0.0,
        center: vec![0.0, 0.0],
        radii: default_radii(0.5),
        n0: 4.0,
        kappa: 4.0,
        subtract: vec![quartic.scale(&0.5), ext("x1^4", 2, 0.0), ext("x1^2 x2^2 + x2^4", 2, 0.0)],
    });
    out.push(Case {
        name: "Ext0(x1^2 x2^2) at (0.3, 0)".into(),
        source: Source::Poly(quartic),
        a: 0.0,
        center: vec![0.3, 0.0],
        radii: default_radii(0.5),
        n0: 2.0,
        kappa: 2.0,
        subtract: vec![ext("x2^2", 2, 0.0).scale(&0.045)],
    });
    for a in [-0.5, 0.0] {
        out.push(Case {
            name: format!("Ext(x1^2) + 0.1 Ext(x1^2 x2), a = {a}"),
            source: Source::Poly(ext("x1^2", 2, a) + ext("x1^2 x2", 2, a).scale(&0.1)),
            a,
            center: vec![0.0, 0.0],
            radii: default_radii(0.5),
            n0: 2.0,
            kappa: 2.0,
            subtract: vec![ext("x1^2", 2, a), ext("x1^2", 2, a).scale(&0.5)],
        });
    }
    out.push(Case {
        name: "-|y|^{3/2}, a = -0.5".into(),
        source: Source::Func(FnField::power_profile(1, -0.5)),
        a: -0.5,
        center: vec![0.0],
        radii: default_radii(0.5),
        n0: 1.5,
        kappa: 2.0,
        subtract: vec![],
    });
    out
}

#[derive(Debug)]
pub struct Verdict {
    pub name: String,
    /// `(series, max relative violation)`.
    pub series: Vec<(String, f64)>,
}

impl Verdict {
    pub fn worst(&self) -> f64 {
        self.series.iter().map(|s| s.1).fold(0.0, f64::max)
    }
}

fn frequency_violation(p: &FrequencyProfile) -> f64 {
    p.frequency_max_violation
}

/// Monotonicity of `N`, `H_lambda` for `lambda <= N(0+)`, `W_kappa`,
/// `W_{kappa+1}` and `N(r, u - p)` for each subtracted `p`.
pub fn check(case: &Case) -> Verdict {
    let field = case.source.field();
    let opts = ProfileOptions::default();
    let lambdas = [0.5 * case.n0, case.n0, case.kappa, case.kappa + 1.0];
    let p = profile(field, &case.center, &case.radii, &lambdas, case.a, &opts).unwrap();
    let mut series = vec![("N".to_string(), frequency_violation(&p))];
    for s in &p.monneau[..2] {
        series.push((format!("H_{}", s.lambda), s.max_violation));
    }
    for s in &p.weiss[2..] {
        series.push((format!("W_{}", s.lambda), s.max_violation));
    }
    for (k, q) in case.subtract.iter().enumerate() {
        let pv = match &case.source {
            // nodal difference; the subtracted multiples of the solution carry no thin flux
            Source::Grid(f) => {
                let values = (0..f.grid.len()).map(|i| f.values[i] - q.eval(&f.grid.coords(i))).collect();
                let v = ScalarField::new(f.grid.clone(), values);
                profile(&v, &case.center, &case.radii, &[], case.a, &opts).unwrap()
            }
            _ => {
                let mut c = case.center.clone();
                c.push(0.0);
                let v = Shifted::new(field, &c, Some(q));
                let zero = vec![0.0; c.len()];
                profile(&v, &zero, &case.radii, &[], case.a, &opts).unwrap()
            }
        };
        series.push((format!("N(u - p{k})"), frequency_violation(&pv)));
    }
    Verdict { name: case.name.clone(), series }
}
