use num_rational::BigRational;

use super::{Coeff, ExactPoly, MultiPoly};
use crate::error::{invalid, Result};

fn check_a(a: f64) -> Result<()> {
    if a > -1.0 && a < 1.0 {
        Ok(())
    } else {
        invalid(format!("weight exponent a = {a} is outside (-1, 1)"))
    }
}

fn ext_generic<T: Coeff>(p: &MultiPoly<T>, a: T) -> MultiPoly<T> {
    let n = p.n();
    let mut out = p.clone();
    let mut lap = p.clone();
    let mut c = T::one();
    let mut fact = T::one();
    let mut j: i64 = 0;
    loop {
        lap = lap.laplacian_x();
        if lap.is_zero() {
            return out;
        }
        j += 1;
        c = c * T::from_int(2 * j - 1) / (T::from_int(2 * j - 1) + a.clone());
        fact = fact * T::from_int(2 * j - 1) * T::from_int(2 * j);
        let mut coef = c.clone() / fact.clone();
        if j % 2 == 1 {
            coef = -coef;
        }
        let mut ypow = vec![0; n + 1];
        ypow[n] = 2 * j as u32;
        let term = &MultiPoly::monomial(n, ypow, coef) * &lap;
        out = &out + &term;
    }
}

/// The unique even-in-`y`, `a`-harmonic extension of a polynomial in `x`.
pub fn ext_a(p: &MultiPoly, a: f64) -> Result<MultiPoly> {
    check_a(a)?;
    if p.depends_on_y() {
        return invalid("ext_a expects a polynomial in the thin variables only");
    }
    Ok(ext_generic(p, a))
}

/// Exact-rational version of [`ext_a`].
pub fn ext_a_exact(p: &ExactPoly, a: &BigRational) -> Result<ExactPoly> {
    check_a(Coeff::to_f64(a))?;
    if p.depends_on_y() {
        return invalid("ext_a expects a polynomial in the thin variables only");
    }
    Ok(ext_generic(p, a.clone()))
}

/// `Delta p + a (d_y p) / y`, i.e. `|y|^{-a} L_a p` for `p` even in `y`.
pub fn la_residual<T: Coeff>(p: &MultiPoly<T>, a: T) -> Result<MultiPoly<T>> {
    if !p.is_even_in_y() {
        return invalid("la_residual needs a polynomial even in y");
    }
    let n = p.n();
    let mut out = p.laplacian();
    for (e, c) in p.terms() {
        let k = e[n];
        if k >= 2 {
            let mut d = e.clone();
            d[n] -= 2;
            out.add_term(d, a.clone() * T::from_int(k as i64) * c.clone());
        }
    }
    Ok(out)
}
