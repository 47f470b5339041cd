//! Field backends and the scalar functions f, g, h, k with their products over root sets.

use std::fmt;
use std::ops::{Deref, Neg};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{NumAssignRef, NumRef, Signed, ToPrimitive, Zero};
use rand::Rng;
use serde_json::Value;

use crate::error::{BetheError, Result};

/// Float pole threshold: denominators smaller than this are treated as zero.
pub const FLOAT_POLE: f64 = 1e-12;

/// A field element. Implemented for exact rationals and complex doubles.
pub trait Scalar:
    NumRef + NumAssignRef + Neg<Output = Self> + Clone + fmt::Debug + fmt::Display + Send + Sync + 'static
{
    const EXACT: bool;
    const BACKEND: &'static str;

    fn from_ratio(p: i64, q: i64) -> Self;

    fn from_int(n: i64) -> Self {
        Self::from_ratio(n, 1)
    }

    /// Exact zero on the rational backend, |z| < 1e-12 on floats.
    fn is_negligible(&self) -> bool;

    fn magnitude(&self) -> f64;

    fn to_c64(&self) -> Complex64;

    fn parse_literal(s: &str) -> Result<Self>;

    fn to_json(&self) -> Value;

    fn from_json(v: &Value) -> Result<Self> {
        match v {
            Value::String(s) => Self::parse_literal(s),
            Value::Number(n) => Self::parse_literal(&n.to_string()),
            Value::Array(parts) if parts.len() == 2 => {
                let re = parts[0].as_f64().ok_or_else(|| BetheError::Parse(v.to_string()))?;
                let im = parts[1].as_f64().ok_or_else(|| BetheError::Parse(v.to_string()))?;
                if Self::EXACT {
                    if im != 0.0 {
                        return Err(BetheError::Parse(format!("complex value {v} on the exact backend")));
                    }
                    Self::parse_literal(&re.to_string())
                } else {
                    Self::parse_literal(&format!("{re}{im:+}i"))
                }
            }
            _ => Err(BetheError::Parse(v.to_string())),
        }
    }
}

fn normalize_minus(s: &str) -> String {
    s.trim().replace('\u{2212}', "-").replace(' ', "")
}

fn parse_decimal_ratio(s: &str) -> Option<BigRational> {
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.parse().ok()?;
        let q: BigInt = q.parse().ok()?;
        if q.is_zero() {
            return None;
        }
        return Some(BigRational::new(p, q));
    }
    if let Ok(n) = s.parse::<BigInt>() {
        return Some(BigRational::from_integer(n));
    }
    // plain decimals such as "-1.25" are taken at face value
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int, frac) = body.split_once('.')?;
    if !int.chars().all(|c| c.is_ascii_digit()) || !frac.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits: BigInt = format!("{int}{frac}").parse().ok()?;
    let den = num_traits::pow(BigInt::from(10), frac.len());
    let r = BigRational::new(digits, den);
    Some(if neg { -r } else { r })
}

impl Scalar for BigRational {
    const EXACT: bool = true;
    const BACKEND: &'static str = "exact";

    fn from_ratio(p: i64, q: i64) -> Self {
        BigRational::new(BigInt::from(p), BigInt::from(q))
    }

    fn is_negligible(&self) -> bool {
        self.is_zero()
    }

    fn magnitude(&self) -> f64 {
        self.abs().to_f64().unwrap_or(f64::INFINITY)
    }

    fn to_c64(&self) -> Complex64 {
        Complex64::new(self.to_f64().unwrap_or(f64::NAN), 0.0)
    }

    fn parse_literal(s: &str) -> Result<Self> {
        let t = normalize_minus(s);
        parse_decimal_ratio(&t).ok_or(BetheError::Parse(s.to_string()))
    }

    fn to_json(&self) -> Value {
        Value::String(format!("{}/{}", self.numer(), self.denom()))
    }
}

fn parse_real(s: &str) -> Option<f64> {
    if s.contains('/') {
        return parse_decimal_ratio(s).and_then(|r| r.to_f64());
    }
    s.parse::<f64>().ok()
}

impl Scalar for Complex64 {
    const EXACT: bool = false;
    const BACKEND: &'static str = "float";

    fn from_ratio(p: i64, q: i64) -> Self {
        Complex64::new(p as f64 / q as f64, 0.0)
    }

    fn is_negligible(&self) -> bool {
        self.norm() < FLOAT_POLE
    }

    fn magnitude(&self) -> f64 {
        self.norm()
    }

    fn to_c64(&self) -> Complex64 {
        *self
    }

    fn parse_literal(s: &str) -> Result<Self> {
        let t = normalize_minus(s);
        let err = || BetheError::Parse(s.to_string());
        if t.is_empty() {
            return Err(err());
        }
        let Some(body) = t.strip_suffix('i') else {
            return parse_real(&t).map(|re| Complex64::new(re, 0.0)).ok_or_else(err);
        };
        // split "a+bi" at the last sign that is not an exponent sign
        let bytes = body.as_bytes();
        let mut split = None;
        for idx in (1..bytes.len()).rev() {
            if (bytes[idx] == b'+' || bytes[idx] == b'-') && !matches!(bytes[idx - 1], b'e' | b'E') {
                split = Some(idx);
                break;
            }
        }
        let (re_s, im_s) = match split {
            Some(idx) => (&body[..idx], &body[idx..]),
            None => ("0", body),
        };
        let im = match im_s {
            "" | "+" => 1.0,
            "-" => -1.0,
            other => parse_real(other).ok_or_else(err)?,
        };
        let re = parse_real(re_s).ok_or_else(err)?;
        Ok(Complex64::new(re, im))
    }

    fn to_json(&self) -> Value {
        serde_json::json!([self.re, self.im])
    }
}

/// Draw a random rational p/q with |p| <= max_num and 1 <= q <= max_den.
pub fn random_ratio<R: Rng>(rng: &mut R, max_num: i64, max_den: i64) -> (i64, i64) {
    let q = rng.random_range(1..=max_den);
    let p = rng.random_range(-max_num..=max_num);
    (p, q)
}

fn checked_inv<S: Scalar>(den: S, what: &str, x: &S, y: &S) -> Result<S> {
    if den.is_negligible() {
        return Err(BetheError::Pole(format!("{what}({x}, {y})")));
    }
    Ok(S::one() / den)
}

/// f(x, y) = (x - y + 1) / (x - y)
pub fn f<S: Scalar>(x: &S, y: &S) -> Result<S> {
    let d = x.clone() - y;
    let inv = checked_inv(d.clone(), "f", x, y)?;
    Ok((d + S::one()) * inv)
}

/// g(x, y) = 1 / (x - y)
pub fn g<S: Scalar>(x: &S, y: &S) -> Result<S> {
    checked_inv(x.clone() - y, "g", x, y)
}

/// h(x, y) = 1 / (x - y + 3)
pub fn h<S: Scalar>(x: &S, y: &S) -> Result<S> {
    checked_inv(x.clone() - y + S::from_int(3), "h", x, y)
}

/// k(x, y) = 1 / (x - y - 1)
pub fn k<S: Scalar>(x: &S, y: &S) -> Result<S> {
    checked_inv(x.clone() - y - S::one(), "k", x, y)
}

/// Ordered list of spectral parameters. Removal keeps the order of the rest,
/// insertion appends.
#[derive(Clone, Debug, PartialEq)]
pub struct RootSet<S>(Vec<S>);

impl<S: Scalar> RootSet<S> {
    /// Rejects sets with coinciding entries.
    pub fn new(roots: Vec<S>) -> Result<Self> {
        for i in 0..roots.len() {
            for j in 0..i {
                if (roots[i].clone() - &roots[j]).is_negligible() {
                    return Err(BetheError::Invalid(format!("roots {} and {} coincide", roots[j], roots[i])));
                }
            }
        }
        Ok(RootSet(roots))
    }

    pub fn empty() -> Self {
        RootSet(Vec::new())
    }

    /// ū_k: the set without its k-th element.
    pub fn without(&self, k: usize) -> Self {
        let mut v = self.0.clone();
        v.remove(k);
        RootSet(v)
    }

    /// {ū, x}: x appended at the end.
    pub fn with(&self, x: S) -> Self {
        let mut v = self.0.clone();
        v.push(x);
        RootSet(v)
    }

    pub fn into_vec(self) -> Vec<S> {
        self.0
    }
}

impl<S> Deref for RootSet<S> {
    type Target = [S];
    fn deref(&self) -> &[S] {
        &self.0
    }
}

/// F(ū, x) = Π f(u_k, x)
pub fn f_left<S: Scalar>(us: &[S], x: &S) -> Result<S> {
    let mut acc = S::one();
    for u in us {
        acc *= f(u, x)?;
    }
    Ok(acc)
}

/// F(x, ū) = Π f(x, u_k)
pub fn f_right<S: Scalar>(x: &S, us: &[S]) -> Result<S> {
    let mut acc = S::one();
    for u in us {
        acc *= f(x, u)?;
    }
    Ok(acc)
}

/// x + n, handy for the shifted arguments x ± 1, x ± 2.
pub fn shift<S: Scalar>(x: &S, n: i64) -> S {
    x.clone() + S::from_int(n)
}

pub(crate) fn without<S: Clone>(v: &[S], k: usize) -> Vec<S> {
    let mut out = v.to_vec();
    out.remove(k);
    out
}

/// |LHS - RHS| for the two partial-fraction summation identities
///
/// Σ_k g(x,u_k) g(u_k,y) F(u_k, ū_k) = g(x,y) (F(x,ū) - F(y,ū))
/// Σ_k g(x,u_k) g(u_k,y) F(ū_k, u_k) = g(x,y) (F(ū,y) - F(ū,x))
pub fn summation_identity_residuals<S: Scalar>(us: &[S], x: &S, y: &S) -> Result<(f64, f64)> {
    let mut lhs1 = S::zero();
    let mut lhs2 = S::zero();
    for (k, uk) in us.iter().enumerate() {
        let rest = without(us, k);
        let gg = g(x, uk)? * g(uk, y)?;
        lhs1 += gg.clone() * f_right(uk, &rest)?;
        lhs2 += gg * f_left(&rest, uk)?;
    }
    let gxy = g(x, y)?;
    let rhs1 = gxy.clone() * (f_right(x, us)? - f_right(y, us)?);
    let rhs2 = gxy * (f_left(us, y)? - f_left(us, x)?);
    Ok(((lhs1 - rhs1).magnitude(), (lhs2 - rhs2).magnitude()))
}

/// (lhs - rhs) and its relative form (lhs - rhs) / max(|lhs|, |rhs|, 1).
pub fn relative_gap<S: Scalar>(lhs: &S, rhs: &S) -> (S, f64) {
    let raw = lhs.clone() - rhs;
    let scale = lhs.magnitude().max(rhs.magnitude()).max(1.0);
    let rel = raw.magnitude() / scale;
    (raw, rel)
}
