//! Sparse polynomials in `(x1, ..., xn, y)`.
//!
//! Coefficients are generic over [`Coeff`]: `f64` for numerics and
//! `BigRational` for exact golden checks.

mod ext;
mod kappa;
mod spine;
mod text;

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

pub use ext::{ext_a, ext_a_exact, la_residual};
pub use kappa::{
    homogeneous_basis, is_in_p_kappa, sphere_inner, sphere_norm, Membership, MembershipFailure,
    MembershipOptions,
};
pub use spine::{spine, spine_with_tol, SpineBasis};
pub(crate) use kappa::exponents_of_degree;
pub use text::{parse_poly, parse_poly_exact};

pub trait Coeff:
    Clone
    + PartialEq
    + fmt::Debug
    + Send
    + Sync
    + 'static
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_int(v: i64) -> Self;
    fn to_f64(&self) -> f64;
    /// Text used by the canonical printer, without sign.
    fn fmt_abs(&self) -> String;
    fn is_negative(&self) -> bool;
}

impl Coeff for f64 {
    fn from_int(v: i64) -> Self {
        v as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn fmt_abs(&self) -> String {
        format!("{}", self.abs())
    }
    fn is_negative(&self) -> bool {
        *self < 0.0
    }
}

impl Coeff for BigRational {
    fn from_int(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn fmt_abs(&self) -> String {
        let v = if self.is_negative() { -self.clone() } else { self.clone() };
        if v.is_integer() {
            v.numer().to_string()
        } else {
            format!("{}/{}", v.numer(), v.denom())
        }
    }
    fn is_negative(&self) -> bool {
        num_traits::Signed::is_negative(self)
    }
}

/// Exponent vector: `n` exponents for `x` followed by the exponent of `y`.
pub type Exponent = Vec<u32>;

#[derive(Clone, PartialEq, Debug)]
pub struct MultiPoly<T: Coeff = f64> {
    nvars: usize,
    terms: BTreeMap<Exponent, T>,
}

pub type ExactPoly = MultiPoly<BigRational>;

impl<T: Coeff> MultiPoly<T> {
    /// Zero polynomial in `n` thin variables plus `y`.
    pub fn zero(n: usize) -> Self {
        Self { nvars: n + 1, terms: BTreeMap::new() }
    }

    pub fn constant(n: usize, c: T) -> Self {
        Self::monomial(n, vec![0; n + 1], c)
    }

    pub fn monomial(n: usize, exp: Exponent, c: T) -> Self {
        assert_eq!(exp.len(), n + 1, "exponent length must be n + 1");
        let mut p = Self::zero(n);
        p.add_term(exp, c);
        p
    }

    /// The coordinate `x_{i+1}` for `i < n`, or `y` for `i == n`.
    pub fn var(n: usize, i: usize) -> Self {
        let mut e = vec![0; n + 1];
        e[i] = 1;
        Self::monomial(n, e, T::one())
    }

    pub fn from_terms(n: usize, terms: impl IntoIterator<Item = (Exponent, T)>) -> Self {
        let mut p = Self::zero(n);
        for (e, c) in terms {
            assert_eq!(e.len(), n + 1, "exponent length must be n + 1");
            p.add_term(e, c);
        }
        p
    }

    pub fn add_term(&mut self, exp: Exponent, c: T) {
        let entry = self.terms.entry(exp.clone()).or_insert_with(T::zero);
        *entry = entry.clone() + c;
        if entry.is_zero() {
            self.terms.remove(&exp);
        }
    }

    pub fn n(&self) -> usize {
        self.nvars - 1
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponent, &T)> {
        self.terms.iter()
    }

    pub fn coeff(&self, exp: &[u32]) -> T {
        self.terms.get(exp).cloned().unwrap_or_else(T::zero)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    /// `Some(k)` if every term has total degree `k` (zero polynomial: `Some(0)`).
    pub fn homogeneity(&self) -> Option<u32> {
        let mut it = self.terms.keys().map(|e| e.iter().sum::<u32>());
        let first = it.next().unwrap_or(0);
        it.all(|d| d == first).then_some(first)
    }

    pub fn is_even_in_y(&self) -> bool {
        self.terms.keys().all(|e| e[self.nvars - 1] % 2 == 0)
    }

    pub fn depends_on_y(&self) -> bool {
        self.terms.keys().any(|e| e[self.nvars - 1] > 0)
    }

    pub fn homogeneous_part(&self, k: u32) -> Self {
        Self {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .filter(|(e, _)| e.iter().sum::<u32>() == k)
                .map(|(e, c)| (e.clone(), c.clone()))
                .collect(),
        }
    }

    pub fn scale(&self, s: &T) -> Self {
        Self::from_terms(self.n(), self.terms.iter().map(|(e, c)| (e.clone(), c.clone() * s.clone())))
    }

    pub fn derivative(&self, var: usize) -> Self {
        let mut out = Self::zero(self.n());
        for (e, c) in &self.terms {
            if e[var] == 0 {
                continue;
            }
            let mut d = e.clone();
            d[var] -= 1;
            out.add_term(d, c.clone() * T::from_int(e[var] as i64));
        }
        out
    }

    /// Multi-index derivative `D^alpha`.
    pub fn derivative_multi(&self, alpha: &[u32]) -> Self {
        let mut p = self.clone();
        for (v, &k) in alpha.iter().enumerate() {
            for _ in 0..k {
                p = p.derivative(v);
            }
        }
        p
    }

    /// Laplacian in the thin variables only.
    pub fn laplacian_x(&self) -> Self {
        let mut out = Self::zero(self.n());
        for i in 0..self.n() {
            out = &out + &self.derivative(i).derivative(i);
        }
        out
    }

    /// Full Laplacian in `(x, y)`.
    pub fn laplacian(&self) -> Self {
        &self.laplacian_x() + &self.derivative(self.n()).derivative(self.n())
    }

    /// Restriction to the thin space `y = 0`, still as a polynomial in `n + 1` variables.
    pub fn thin_trace(&self) -> Self {
        Self {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .filter(|(e, _)| e[self.nvars - 1] == 0)
                .map(|(e, c)| (e.clone(), c.clone()))
                .collect(),
        }
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::constant(self.n(), T::one());
        for _ in 0..k {
            out = &out * self;
        }
        out
    }

    /// `p(c + X)` expanded as a polynomial in `X`.
    pub fn translate(&self, c: &[T]) -> Self {
        assert_eq!(c.len(), self.nvars);
        let shifted: Vec<Self> = (0..self.nvars)
            .map(|i| &Self::var(self.n(), i) + &Self::constant(self.n(), c[i].clone()))
            .collect();
        let mut out = Self::zero(self.n());
        for (e, coef) in &self.terms {
            let mut t = Self::constant(self.n(), coef.clone());
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    t = &t * &shifted[i].pow(k);
                }
            }
            out = &out + &t;
        }
        out
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.nvars);
        self.terms
            .iter()
            .map(|(e, c)| c.to_f64() * e.iter().zip(x).map(|(&k, &v)| v.powi(k as i32)).product::<f64>())
            .sum()
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.nvars];
        for (e, c) in &self.terms {
            let c = c.to_f64();
            for (v, gv) in g.iter_mut().enumerate() {
                if e[v] == 0 {
                    continue;
                }
                let mut t = c * e[v] as f64;
                for (w, (&k, &xv)) in e.iter().zip(x).enumerate() {
                    let k = if w == v { k - 1 } else { k };
                    t *= xv.powi(k as i32);
                }
                *gv += t;
            }
        }
        g
    }

    pub fn to_f64(&self) -> MultiPoly<f64> {
        MultiPoly::from_terms(self.n(), self.terms.iter().map(|(e, c)| (e.clone(), c.to_f64())))
    }

    /// Largest absolute coefficient.
    pub fn max_coeff(&self) -> f64 {
        self.terms.values().map(|c| c.to_f64().abs()).fold(0.0, f64::max)
    }
}

impl MultiPoly<f64> {
    /// Drops coefficients with magnitude `<= tol * max_coeff`.
    pub fn pruned(&self, tol: f64) -> Self {
        let cut = tol * self.max_coeff();
        Self::from_terms(
            self.n(),
            self.terms.iter().filter(|(_, c)| c.abs() > cut).map(|(e, c)| (e.clone(), *c)),
        )
    }

    /// Substitutes `X = M t` where `M` has `n + 1` rows; returns a polynomial in
    /// the `t` variables (the last `t` variable plays the role of `y`).
    pub fn substitute_linear(&self, map: &[Vec<f64>]) -> MultiPoly<f64> {
        assert_eq!(map.len(), self.nvars);
        let m = map[0].len();
        let images: Vec<MultiPoly<f64>> = map
            .iter()
            .map(|row| {
                MultiPoly::from_terms(
                    m - 1,
                    row.iter().enumerate().map(|(j, &c)| {
                        let mut e = vec![0; m];
                        e[j] = 1;
                        (e, c)
                    }),
                )
            })
            .collect();
        let mut out = MultiPoly::zero(m - 1);
        for (e, c) in &self.terms {
            let mut t = MultiPoly::constant(m - 1, *c);
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    t = &t * &images[i].pow(k);
                }
            }
            out = &out + &t;
        }
        out
    }

    pub fn to_exact(&self) -> ExactPoly {
        MultiPoly::from_terms(
            self.n(),
            self.terms.iter().map(|(e, c)| {
                (e.clone(), BigRational::from_float(*c).expect("finite coefficient"))
            }),
        )
    }
}

impl<T: Coeff> Add for &MultiPoly<T> {
    type Output = MultiPoly<T>;
    fn add(self, rhs: &MultiPoly<T>) -> MultiPoly<T> {
        assert_eq!(self.nvars, rhs.nvars, "variable count mismatch");
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }
}

impl<T: Coeff> Sub for &MultiPoly<T> {
    type Output = MultiPoly<T>;
    fn sub(self, rhs: &MultiPoly<T>) -> MultiPoly<T> {
        self + &(-rhs)
    }
}

impl<T: Coeff> Neg for &MultiPoly<T> {
    type Output = MultiPoly<T>;
    fn neg(self) -> MultiPoly<T> {
        MultiPoly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), -c.clone())).collect(),
        }
    }
}

impl<T: Coeff> Mul for &MultiPoly<T> {
    type Output = MultiPoly<T>;
    fn mul(self, rhs: &MultiPoly<T>) -> MultiPoly<T> {
        assert_eq!(self.nvars, rhs.nvars, "variable count mismatch");
        let mut out = MultiPoly::zero(self.n());
        for (e1, c1) in &self.terms {
            for (e2, c2) in &rhs.terms {
                let e: Exponent = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.add_term(e, c1.clone() * c2.clone());
            }
        }
        out
    }
}

macro_rules! owned_ops {
    ($($tr:ident $m:ident),*) => {$(
        impl<T: Coeff> $tr for MultiPoly<T> {
            type Output = MultiPoly<T>;
            fn $m(self, rhs: MultiPoly<T>) -> MultiPoly<T> {
                (&self).$m(&rhs)
            }
        }
    )*};
}
owned_ops!(Add add, Sub sub, Mul mul);

impl<T: Coeff> fmt::Display for MultiPoly<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&text::format_poly(self))
    }
}

/// JSON form: `{"n": .., "terms": [{"exp": [..], "coeff": ..}, ..]}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PolyJson {
    pub n: usize,
    pub terms: Vec<TermJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TermJson {
    pub exp: Vec<u32>,
    pub coeff: f64,
}

impl From<&MultiPoly<f64>> for PolyJson {
    fn from(p: &MultiPoly<f64>) -> Self {
        PolyJson {
            n: p.n(),
            terms: p.terms().map(|(e, c)| TermJson { exp: e.clone(), coeff: *c }).collect(),
        }
    }
}

impl From<&PolyJson> for MultiPoly<f64> {
    fn from(j: &PolyJson) -> Self {
        MultiPoly::from_terms(j.n, j.terms.iter().map(|t| (t.exp.clone(), t.coeff)))
    }
}

impl Serialize for MultiPoly<f64> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PolyJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for MultiPoly<f64> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = PolyJson::deserialize(d)?;
        if j.terms.iter().any(|t| t.exp.len() != j.n + 1) {
            return Err(serde::de::Error::custom("exponent length must be n + 1"));
        }
        Ok(MultiPoly::from(&j))
    }
}
