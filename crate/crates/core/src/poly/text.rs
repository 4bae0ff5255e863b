//! Canonical text form `c * x1^i x2^j y^k + ...`.

use num_bigint::BigInt;
use num_rational::BigRational;

use super::{Coeff, ExactPoly, MultiPoly};
use crate::error::{LabError, Result};

pub(super) fn format_poly<T: Coeff>(p: &MultiPoly<T>) -> String {
    if p.is_zero() {
        return "0".into();
    }
    let n = p.n();
    let mut terms: Vec<_> = p.terms().collect();
    terms.sort_by(|(e1, _), (e2, _)| {
        let d1: u32 = e1.iter().sum();
        let d2: u32 = e2.iter().sum();
        d2.cmp(&d1).then_with(|| e2.cmp(e1))
    });
    let mut out = String::new();
    for (i, (e, c)) in terms.into_iter().enumerate() {
        let neg = c.is_negative();
        match (i, neg) {
            (0, true) => out.push('-'),
            (0, false) => {}
            (_, true) => out.push_str(" - "),
            (_, false) => out.push_str(" + "),
        }
        let mono: Vec<String> = e
            .iter()
            .enumerate()
            .filter(|(_, &k)| k > 0)
            .map(|(v, &k)| {
                let name = if v == n { "y".to_string() } else { format!("x{}", v + 1) };
                if k == 1 {
                    name
                } else {
                    format!("{name}^{k}")
                }
            })
            .collect();
        let abs = c.fmt_abs();
        if mono.is_empty() {
            out.push_str(&abs);
        } else if abs == "1" {
            out.push_str(&mono.join(" "));
        } else {
            out.push_str(&abs);
            out.push_str(" * ");
            out.push_str(&mono.join(" "));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(String),
    Var(usize),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
}

fn parse_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(LabError::Parse(msg.into()))
}

fn tokenize(s: &str, n: usize) -> Result<Vec<Tok>> {
    let chars: Vec<char> = s.chars().filter(|c| !c.is_whitespace()).collect();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            '+' => toks.push(Tok::Plus),
            '-' => toks.push(Tok::Minus),
            '*' => toks.push(Tok::Star),
            '/' => toks.push(Tok::Slash),
            '^' => toks.push(Tok::Caret),
            'y' => toks.push(Tok::Var(n)),
            'x' => {
                let start = i + 1;
                let mut j = start;
                // an exponent digit run would be preceded by '^', so digits here name the variable
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                let idx = if j == start {
                    if n == 1 {
                        1
                    } else {
                        return parse_err("bare 'x' is only allowed when n = 1");
                    }
                } else {
                    chars[start..j].iter().collect::<String>().parse::<usize>().unwrap()
                };
                if idx == 0 || idx > n {
                    return parse_err(format!("variable x{idx} out of range for n = {n}"));
                }
                toks.push(Tok::Var(idx - 1));
                i = j;
                continue;
            }
            d if d.is_ascii_digit() || d == '.' => {
                let mut j = i;
                let after_caret = matches!(toks.last(), Some(Tok::Caret));
                while j < chars.len() && (chars[j].is_ascii_digit() || (!after_caret && chars[j] == '.')) {
                    j += 1;
                }
                if !after_caret && j < chars.len() && (chars[j] == 'e' || chars[j] == 'E') {
                    let mut k = j + 1;
                    if k < chars.len() && (chars[k] == '+' || chars[k] == '-') {
                        k += 1;
                    }
                    if k < chars.len() && chars[k].is_ascii_digit() {
                        while k < chars.len() && chars[k].is_ascii_digit() {
                            k += 1;
                        }
                        j = k;
                    }
                }
                toks.push(Tok::Num(chars[i..j].iter().collect()));
                i = j;
                continue;
            }
            other => return parse_err(format!("unexpected character '{other}'")),
        }
        i += 1;
    }
    Ok(toks)
}

fn parse_generic<T: Coeff>(s: &str, n: usize, num: impl Fn(&str) -> Result<T>) -> Result<MultiPoly<T>> {
    let toks = tokenize(s, n)?;
    if toks.is_empty() {
        return parse_err("empty polynomial");
    }
    let mut p = MultiPoly::zero(n);
    let mut i = 0;
    let mut first = true;
    while i < toks.len() {
        let mut sign = T::one();
        match toks[i] {
            Tok::Plus => i += 1,
            Tok::Minus => {
                sign = -T::one();
                i += 1;
            }
            _ if first => {}
            _ => return parse_err("expected '+' or '-' between terms"),
        }
        first = false;
        let mut coef = sign;
        let mut exp = vec![0u32; n + 1];
        let mut factors = 0;
        while i < toks.len() && !matches!(toks[i], Tok::Plus | Tok::Minus) {
            match &toks[i] {
                Tok::Star if factors > 0 => i += 1,
                Tok::Num(s) => {
                    let mut v = num(s)?;
                    i += 1;
                    if i < toks.len() && toks[i] == Tok::Slash {
                        match toks.get(i + 1) {
                            Some(Tok::Num(d)) => {
                                let dv = num(d)?;
                                if dv.is_zero() {
                                    return parse_err("division by zero");
                                }
                                v = v / dv;
                                i += 2;
                            }
                            _ => return parse_err("expected a number after '/'"),
                        }
                    }
                    coef = coef * v;
                    factors += 1;
                }
                Tok::Var(v) => {
                    let v = *v;
                    i += 1;
                    let mut k = 1;
                    if i < toks.len() && toks[i] == Tok::Caret {
                        match toks.get(i + 1) {
                            Some(Tok::Num(d)) => {
                                k = d.parse::<u32>().map_err(|_| LabError::Parse(format!("bad exponent '{d}'")))?;
                                i += 2;
                            }
                            _ => return parse_err("expected an exponent after '^'"),
                        }
                    }
                    exp[v] += k;
                    factors += 1;
                }
                t => return parse_err(format!("unexpected token {t:?}")),
            }
        }
        if factors == 0 {
            return parse_err("empty term");
        }
        p.add_term(exp, coef);
    }
    Ok(p)
}

/// Parses the canonical text form with `f64` coefficients.
pub fn parse_poly(s: &str, n: usize) -> Result<MultiPoly<f64>> {
    parse_generic(s, n, |t| t.parse::<f64>().map_err(|_| LabError::Parse(format!("bad number '{t}'"))))
}

fn decimal_to_rational(t: &str) -> Result<BigRational> {
    let bad = || LabError::Parse(format!("bad number '{t}'"));
    let (mant, exp) = match t.find(['e', 'E']) {
        Some(p) => (&t[..p], t[p + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (t, 0),
    };
    let (int, frac) = mant.split_once('.').unwrap_or((mant, ""));
    let digits = format!("{int}{frac}");
    if digits.is_empty() {
        return Err(bad());
    }
    let num: BigInt = digits.parse().map_err(|_| bad())?;
    let scale = exp - frac.len() as i32;
    let ten = BigInt::from(10);
    let pow = num_traits::pow(ten, scale.unsigned_abs() as usize);
    Ok(if scale >= 0 {
        BigRational::from_integer(num * pow)
    } else {
        BigRational::new(num, pow)
    })
}

/// Parses the canonical text form with exact rational coefficients;
/// decimals such as `0.1` are read exactly as `1/10`.
pub fn parse_poly_exact(s: &str, n: usize) -> Result<ExactPoly> {
    parse_generic(s, n, decimal_to_rational)
}
