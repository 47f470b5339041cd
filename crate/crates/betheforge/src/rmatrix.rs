//! R-matrices of gl(n) and sp(4) type, the sign-sector blocks and their dressed
//! variants on dual legs, plus Yang-Baxter and unitarity checkers.
//!
//! Conventions: E^a_b is the matrix unit with E^a_b e_c = δ^a_c e_b, i.e. a one
//! at row b, column a. sp(4) indices (-2, -1, 1, 2) live in slots (0, 1, 2, 3).
//! On a two-dimensional sign block, index ±i lives in slot i - 1. A dual leg
//! carries F^a_b = (E^a_b)^T acting on covector coordinates.

use crate::error::{BetheError, Result};
use crate::operator::{kron, lift, op_residual, Op};
use crate::scalars::{f, g, h, k, Scalar};

/// The four sp(4) indices in slot order.
pub const SP4_INDICES: [i32; 4] = [-2, -1, 1, 2];

pub fn sp4_slot(i: i32) -> usize {
    match i {
        -2 => 0,
        -1 => 1,
        1 => 2,
        2 => 3,
        _ => panic!("sp(4) index out of range: {i}"),
    }
}

pub fn sp4_index(slot: usize) -> i32 {
    SP4_INDICES[slot]
}

/// Slot of ±i inside its two-dimensional sign block.
pub fn block_slot(i: i32) -> usize {
    (i.unsigned_abs() - 1) as usize
}

fn sgn(i: i32) -> i64 {
    if i > 0 {
        1
    } else {
        -1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn factor(self) -> i32 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn both() -> [Sign; 2] {
        [Sign::Plus, Sign::Minus]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RKind {
    Gl(usize),
    Sp4,
    Sp4Block(Sign, Sign),
    Sp4Tilde,
    DualPP,
    Hatted(Sign),
}

impl RKind {
    pub fn leg_dims(self) -> [usize; 2] {
        match self {
            RKind::Gl(n) => [n, n],
            RKind::Sp4 | RKind::Sp4Tilde => [4, 4],
            _ => [2, 2],
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gl2" => Ok(RKind::Gl(2)),
            "gl3" => Ok(RKind::Gl(3)),
            "sp4" => Ok(RKind::Sp4),
            "sp4tilde" | "tilde" => Ok(RKind::Sp4Tilde),
            other => Err(BetheError::Parse(other.to_string())),
        }
    }
}

/// A concrete R-matrix together with the local dimensions of its two legs.
#[derive(Clone, Debug)]
pub struct ROperator<S> {
    pub kind: RKind,
    pub legs: [usize; 2],
    pub mat: Op<S>,
}

/// E^a_b on an n-dimensional space (slots).
pub fn unit<S: Scalar>(n: usize, a: usize, b: usize) -> Op<S> {
    Op::from_triplets(n, [(b, a, S::one())])
}

/// E^a_b on a two-dimensional block.
pub fn e2<S: Scalar>(a: usize, b: usize) -> Op<S> {
    unit(2, a, b)
}

fn id<S: Scalar>(n: usize) -> Op<S> {
    Op::identity(n)
}

fn sum_ops<S: Scalar>(n: usize, terms: impl IntoIterator<Item = Op<S>>) -> Op<S> {
    terms.into_iter().fold(Op::zeros(n), |acc, t| acc.add(&t))
}

/// Σ_{i,k} E^i_k ⊗ E^k_i on n ⊗ n (the flip).
pub fn flip<S: Scalar>(n: usize) -> Op<S> {
    sum_ops(n * n, (0..n).flat_map(|i| (0..n).map(move |k| kron(&unit(n, i, k), &unit(n, k, i)))))
}

fn inv_nonzero<S: Scalar>(v: S, what: &str) -> Result<S> {
    if v.is_negligible() {
        return Err(BetheError::Pole(format!("{what} vanishes")));
    }
    Ok(S::one() / v)
}

/// (1/f(x,y)) (I ⊗ I + g(x,y) Σ E^i_k ⊗ E^k_i)
pub fn gl_r<S: Scalar>(n: usize, x: &S, y: &S) -> Result<Op<S>> {
    if !(2..=3).contains(&n) {
        return Err(BetheError::Invalid(format!("gl({n}) is not supported")));
    }
    let inv_f = inv_nonzero(f(x, y)?, "f")?;
    let m = id(n * n).add(&flip(n).scale(&g(x, y)?));
    Ok(m.scale(&inv_f))
}

/// Σ ε_i ε_k E^i_k ⊗ E^{-i}_{-k} over sp(4) indices.
fn sp4_q<S: Scalar>() -> Op<S> {
    let mut terms = Vec::new();
    for &i in &SP4_INDICES {
        for &kk in &SP4_INDICES {
            let t = kron(&unit(4, sp4_slot(i), sp4_slot(kk)), &unit(4, sp4_slot(-i), sp4_slot(-kk)));
            terms.push(t.scale(&S::from_int(sgn(i) * sgn(kk))));
        }
    }
    sum_ops(16, terms)
}

/// (1/f(x,y)) (I + g(x,y) P - h(x,y) Q) on 4 ⊗ 4.
pub fn sp4_r<S: Scalar>(x: &S, y: &S) -> Result<Op<S>> {
    let gv = g(x, y)?;
    let hv = h(x, y)?;
    let inv_f = inv_nonzero(f(x, y)?, "f")?;
    let m = id(16).add(&flip(4).scale(&gv)).sub(&sp4_q().scale(&hv));
    Ok(m.scale(&inv_f))
}

/// Σ_{i,k} A(i,k) ⊗ B(i,k) for 2 × 2 units chosen by `pick`.
fn block_sum<S: Scalar>(pick: impl Fn(usize, usize) -> (Op<S>, Op<S>)) -> Op<S> {
    sum_ops(4, (0..2).flat_map(|i| (0..2).map(move |kk| (i, kk))).map(|(i, kk)| {
        let (a, b) = pick(i, kk);
        kron(&a, &b)
    }))
}

/// Block R-matrix on the two-dimensional legs of the given signs.
///
/// (+,+): (I + g Σ E^i_k ⊗ E^k_i) / f
/// (+,-): I - k(x,y) Σ E^i_k ⊗ E^{-i}_{-k}
/// (-,+): I - h(x,y) Σ E^{-i}_{-k} ⊗ E^i_k
/// (-,-): (I + g Σ E^{-i}_{-k} ⊗ E^{-k}_{-i}) / f
pub fn block_r<S: Scalar>(s1: Sign, s2: Sign, x: &S, y: &S) -> Result<Op<S>> {
    use Sign::*;
    match (s1, s2) {
        (Plus, Plus) | (Minus, Minus) => {
            let inv_f = inv_nonzero(f(x, y)?, "f")?;
            Ok(id(4).add(&flip(2).scale(&g(x, y)?)).scale(&inv_f))
        }
        (Plus, Minus) => Ok(id(4).sub(&block_sum(|i, kk| (e2(i, kk), e2(i, kk))).scale(&k(x, y)?))),
        (Minus, Plus) => Ok(id(4).sub(&block_sum(|i, kk| (e2(i, kk), e2(i, kk))).scale(&h(x, y)?))),
    }
}

/// Four blocks embedded by sign sector into 4 ⊗ 4.
pub fn tilde_r<S: Scalar>(x: &S, y: &S) -> Result<Op<S>> {
    let mut entries = Vec::new();
    for s1 in Sign::both() {
        for s2 in Sign::both() {
            let b = block_r(s1, s2, x, y)?;
            let to_global = |sign: Sign, slot: usize| sp4_slot(sign.factor() * (slot as i32 + 1));
            for r in 0..4 {
                for (c, v) in b.row(r) {
                    let (r1, r2) = (r / 2, r % 2);
                    let (c1, c2) = (c / 2, c % 2);
                    let gr = to_global(s1, r1) * 4 + to_global(s2, r2);
                    let gc = to_global(s1, c1) * 4 + to_global(s2, c2);
                    entries.push((gr, gc, v.clone()));
                }
            }
        }
    }
    Ok(Op::from_triplets(16, entries))
}

/// Sign-sector block of a 16 × 16 matrix on 4 ⊗ 4, in block coordinates.
pub fn extract_sector<S: Scalar>(m: &Op<S>, s1: Sign, s2: Sign) -> Op<S> {
    let to_global = |sign: Sign, slot: usize| sp4_slot(sign.factor() * (slot as i32 + 1));
    let mut entries = Vec::new();
    for r in 0..4 {
        for c in 0..4 {
            let gr = to_global(s1, r / 2) * 4 + to_global(s2, r % 2);
            let gc = to_global(s1, c / 2) * 4 + to_global(s2, c % 2);
            entries.push((r, c, m.get(gr, gc)));
        }
    }
    Op::from_triplets(4, entries)
}

/// F^a_b on a dual leg: the transpose of E^a_b.
pub fn dual_unit<S: Scalar>(a: usize, b: usize) -> Op<S> {
    e2::<S>(a, b).transpose()
}

/// The map (R*)^(+,+)(x,y) on V₊* ⊗ V₊* adjoint to R^(+,+)(x,y) under the pairing.
pub fn dual_pp<S: Scalar>(x: &S, y: &S) -> Result<Op<S>> {
    Ok(block_r(Sign::Plus, Sign::Plus, x, y)?.transpose())
}

/// R̂^(ε,+)(x,u) on (block leg of sign ε) ⊗ V₊*.
///
/// (+): (I + g(u,x) Σ E^r_s ⊗ F^s_r) / f(u,x)
/// (-): I - k(u,x) Σ E^{-r}_{-s} ⊗ F^r_s
pub fn hatted_r<S: Scalar>(sign: Sign, x: &S, u: &S) -> Result<Op<S>> {
    match sign {
        Sign::Plus => {
            let inv_f = inv_nonzero(f(u, x)?, "f")?;
            Ok(id(4).add(&hatted_sum(sign).scale(&g(u, x)?)).scale(&inv_f))
        }
        Sign::Minus => Ok(id(4).sub(&hatted_sum(sign).scale(&k(u, x)?))),
    }
}

fn hatted_sum<S: Scalar>(sign: Sign) -> Op<S> {
    match sign {
        Sign::Plus => block_sum(|r, s| (e2(r, s), dual_unit(s, r))),
        Sign::Minus => block_sum(|r, s| (e2(r, s), dual_unit(r, s))),
    }
}

/// R̂^(ε,+) at coinciding arguments, written from its summed form.
pub fn hatted_r_coincident<S: Scalar>(sign: Sign) -> Op<S> {
    match sign {
        Sign::Plus => hatted_sum(sign),
        Sign::Minus => id(4).add(&hatted_sum(sign)),
    }
}

/// R^(ε,-)(x,u) on (block leg of sign ε) ⊗ V₋.
pub fn minus_leg_r<S: Scalar>(sign: Sign, x: &S, u: &S) -> Result<Op<S>> {
    block_r(sign, Sign::Minus, x, u)
}

/// R^(ε,-) at coinciding arguments.
///
/// (+): I + Σ E^r_s ⊗ E^{-r}_{-s};  (-): Σ E^{-r}_{-s} ⊗ E^{-s}_{-r}
pub fn minus_leg_r_coincident<S: Scalar>(sign: Sign) -> Op<S> {
    match sign {
        Sign::Plus => id(4).add(&block_sum(|r, s| (e2(r, s), e2(r, s)))),
        Sign::Minus => flip(2),
    }
}

/// Dispatch on kind. Blocks use `Sp4Block`, `Hatted` uses (x, u) = (x, y).
pub fn build<S: Scalar>(kind: RKind, x: &S, y: &S) -> Result<ROperator<S>> {
    let mat = match kind {
        RKind::Gl(n) => gl_r(n, x, y)?,
        RKind::Sp4 => sp4_r(x, y)?,
        RKind::Sp4Block(a, b) => block_r(a, b, x, y)?,
        RKind::Sp4Tilde => tilde_r(x, y)?,
        RKind::DualPP => dual_pp(x, y)?,
        RKind::Hatted(s) => hatted_r(s, x, y)?,
    };
    Ok(ROperator { kind, legs: kind.leg_dims(), mat })
}

fn require_square_kind(kind: RKind) -> Result<usize> {
    match kind {
        RKind::Gl(n) => Ok(n),
        RKind::Sp4 | RKind::Sp4Tilde => Ok(4),
        other => Err(BetheError::Invalid(format!("{other:?} has no Yang-Baxter check on equal legs"))),
    }
}

/// Residual of R₁₂(x,y) R₁₃(x,z) R₂₃(y,z) = R₂₃(y,z) R₁₃(x,z) R₁₂(x,y).
pub fn check_ybe<S: Scalar>(kind: RKind, x: &S, y: &S, z: &S) -> Result<f64> {
    let d = require_square_kind(kind)?;
    let dims = [d, d, d];
    let r12 = lift(&build(kind, x, y)?.mat, &[0, 1], &dims)?;
    let r13 = lift(&build(kind, x, z)?.mat, &[0, 2], &dims)?;
    let r23 = lift(&build(kind, y, z)?.mat, &[1, 2], &dims)?;
    Ok(op_residual(&r12.mul(&r13).mul(&r23), &r23.mul(&r13).mul(&r12)))
}

/// Residual of R₁₂(x,y) R₂₁(y,x) = I.
pub fn check_unitarity<S: Scalar>(kind: RKind, x: &S, y: &S) -> Result<f64> {
    let d = require_square_kind(kind)?;
    let dims = [d, d];
    let r12 = build(kind, x, y)?.mat;
    let r21 = lift(&build(kind, y, x)?.mat, &[1, 0], &dims)?;
    Ok(op_residual(&r12.mul(&r21), &Op::identity(d * d)))
}
