//! Sparse square matrices over a [`Scalar`] field, with Kronecker lifting onto tensor legs.
//!
//! Leg 0 is the most significant digit of a basis index, matching the usual
//! Kronecker product ordering.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{BetheError, Result};
use crate::scalars::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct Op<S> {
    n: usize,
    rows: Vec<Vec<(usize, S)>>,
}

impl<S: Scalar> Op<S> {
    pub fn zeros(n: usize) -> Self {
        Op { n, rows: vec![Vec::new(); n] }
    }

    pub fn identity(n: usize) -> Self {
        Op { n, rows: (0..n).map(|i| vec![(i, S::one())]).collect() }
    }

    /// Build from (row, col, value) triplets; repeated positions are summed.
    pub fn from_triplets(n: usize, entries: impl IntoIterator<Item = (usize, usize, S)>) -> Self {
        let mut dense: Vec<Vec<Option<S>>> = vec![vec![None; n]; n];
        for (r, c, v) in entries {
            let slot = &mut dense[r][c];
            *slot = Some(match slot.take() {
                Some(old) => old + v,
                None => v,
            });
        }
        let rows = dense
            .into_iter()
            .map(|row| {
                row.into_iter()
                    .enumerate()
                    .filter_map(|(c, v)| v.filter(|v| !v.is_zero()).map(|v| (c, v)))
                    .collect()
            })
            .collect();
        Op { n, rows }
    }

    pub fn from_dense(m: Vec<Vec<S>>) -> Self {
        let n = m.len();
        let trip = m
            .into_iter()
            .enumerate()
            .flat_map(|(r, row)| row.into_iter().enumerate().map(move |(c, v)| (r, c, v)));
        Self::from_triplets(n, trip)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn row(&self, r: usize) -> &[(usize, S)] {
        &self.rows[r]
    }

    pub fn get(&self, r: usize, c: usize) -> S {
        self.rows[r].iter().find(|(cc, _)| *cc == c).map(|(_, v)| v.clone()).unwrap_or_else(S::zero)
    }

    pub fn to_dense(&self) -> Vec<Vec<S>> {
        let mut out = vec![vec![S::zero(); self.n]; self.n];
        for (r, row) in self.rows.iter().enumerate() {
            for (c, v) in row {
                out[r][c.to_owned()] = v.clone();
            }
        }
        out
    }

    pub fn scale(&self, s: &S) -> Self {
        let rows = self
            .rows
            .iter()
            .map(|row| row.iter().map(|(c, v)| (*c, v.clone() * s)).filter(|(_, v)| !v.is_zero()).collect())
            .collect();
        Op { n: self.n, rows }
    }

    fn combine(&self, other: &Self, sign: bool) -> Self {
        assert_eq!(self.n, other.n, "dimension mismatch");
        let entries = self.triplets().chain(other.triplets().map(|(r, c, v)| (r, c, if sign { v } else { -v })));
        Self::from_triplets_sparse(self.n, entries)
    }

    fn triplets(&self) -> impl Iterator<Item = (usize, usize, S)> + '_ {
        self.rows.iter().enumerate().flat_map(|(r, row)| row.iter().map(move |(c, v)| (r, *c, v.clone())))
    }

    /// Like [`Op::from_triplets`] but without a dense staging buffer.
    fn from_triplets_sparse(n: usize, entries: impl IntoIterator<Item = (usize, usize, S)>) -> Self {
        let mut rows: Vec<Vec<(usize, S)>> = vec![Vec::new(); n];
        for (r, c, v) in entries {
            rows[r].push((c, v));
        }
        for row in rows.iter_mut() {
            row.sort_by_key(|(c, _)| *c);
            let mut merged: Vec<(usize, S)> = Vec::with_capacity(row.len());
            for (c, v) in row.drain(..) {
                match merged.last_mut() {
                    Some((lc, lv)) if *lc == c => *lv += v,
                    _ => merged.push((c, v)),
                }
            }
            merged.retain(|(_, v)| !v.is_zero());
            *row = merged;
        }
        Op { n, rows }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.combine(other, true)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.combine(other, false)
    }

    /// Matrix product self * other.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n, "dimension mismatch");
        let mut acc: Vec<Option<S>> = vec![None; self.n];
        let mut touched = Vec::new();
        let mut rows = Vec::with_capacity(self.n);
        for row in &self.rows {
            for (j, a) in row {
                for (k, b) in &other.rows[*j] {
                    let term = a.clone() * b;
                    match &mut acc[*k] {
                        Some(v) => *v += term,
                        slot @ None => {
                            *slot = Some(term);
                            touched.push(*k);
                        }
                    }
                }
            }
            touched.sort_unstable();
            let mut out = Vec::with_capacity(touched.len());
            for k in touched.drain(..) {
                if let Some(v) = acc[k].take() {
                    if !v.is_zero() {
                        out.push((k, v));
                    }
                }
            }
            rows.push(out);
        }
        Op { n: self.n, rows }
    }

    pub fn apply(&self, v: &[S]) -> Vec<S> {
        assert_eq!(v.len(), self.n, "vector length mismatch");
        self.rows
            .iter()
            .map(|row| {
                let mut acc = S::zero();
                for (c, a) in row {
                    if !v[*c].is_zero() {
                        acc += a.clone() * &v[*c];
                    }
                }
                acc
            })
            .collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_triplets_sparse(self.n, self.triplets().map(|(r, c, v)| (c, r, v)))
    }

    pub fn max_abs(&self) -> f64 {
        self.rows.iter().flatten().map(|(_, v)| v.magnitude()).fold(0.0, f64::max)
    }

    /// Sub-matrix of rows [r0, r0+m) and columns [c0, c0+m).
    pub fn block(&self, r0: usize, c0: usize, m: usize) -> Self {
        let rows = (r0..r0 + m)
            .map(|r| {
                self.rows[r]
                    .iter()
                    .filter(|(c, _)| *c >= c0 && *c < c0 + m)
                    .map(|(c, v)| (c - c0, v.clone()))
                    .collect()
            })
            .collect();
        Op { n: m, rows }
    }

    pub fn to_c64(&self) -> Op<Complex64> {
        Op {
            n: self.n,
            rows: self.rows.iter().map(|row| row.iter().map(|(c, v)| (*c, v.to_c64())).collect()).collect(),
        }
    }

    pub fn to_nalgebra(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for (r, row) in self.rows.iter().enumerate() {
            for (c, v) in row {
                m[(r, *c)] = v.to_c64();
            }
        }
        m
    }
}

/// Kronecker product a ⊗ b.
pub fn kron<S: Scalar>(a: &Op<S>, b: &Op<S>) -> Op<S> {
    let (na, nb) = (a.dim(), b.dim());
    let mut rows = Vec::with_capacity(na * nb);
    for ra in 0..na {
        for rb in 0..nb {
            let mut row = Vec::new();
            for (ca, va) in a.row(ra) {
                for (cb, vb) in b.row(rb) {
                    row.push((ca * nb + cb, va.clone() * vb));
                }
            }
            rows.push(row);
        }
    }
    Op { n: na * nb, rows }
}

pub fn kron_vec<S: Scalar>(a: &[S], b: &[S]) -> Vec<S> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in a {
        for y in b {
            out.push(x.clone() * y);
        }
    }
    out
}

/// Mixed-radix digits of a basis index, leg 0 first.
pub fn digits(mut idx: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for (slot, d) in out.iter_mut().zip(dims).rev() {
        *slot = idx % d;
        idx /= d;
    }
    out
}

pub fn index_of(digits: &[usize], dims: &[usize]) -> usize {
    digits.iter().zip(dims).fold(0, |acc, (d, n)| acc * n + d)
}

/// Embed `op`, which acts on the listed legs in the given order, into the full
/// tensor space with dimensions `dims`, acting as identity on the other legs.
pub fn lift<S: Scalar>(op: &Op<S>, legs: &[usize], dims: &[usize]) -> Result<Op<S>> {
    let sub_dims: Vec<usize> = legs.iter().map(|&l| dims[l]).collect();
    let sub_total: usize = sub_dims.iter().product();
    if sub_total != op.dim() {
        return Err(BetheError::Invalid(format!(
            "operator of dimension {} does not match legs {:?} of {:?}",
            op.dim(),
            legs,
            dims
        )));
    }
    for (i, l) in legs.iter().enumerate() {
        if *l >= dims.len() || legs[..i].contains(l) {
            return Err(BetheError::Invalid(format!("bad leg list {legs:?}")));
        }
    }
    let total: usize = dims.iter().product();
    let mut rows = Vec::with_capacity(total);
    let mut dig = vec![0; dims.len()];
    for r in 0..total {
        let rd = digits(r, dims);
        let r_sub = index_of(&legs.iter().map(|&l| rd[l]).collect::<Vec<_>>(), &sub_dims);
        let mut row = Vec::with_capacity(op.row(r_sub).len());
        for (c_sub, v) in op.row(r_sub) {
            dig.copy_from_slice(&rd);
            for (l, d) in legs.iter().zip(digits(*c_sub, &sub_dims)) {
                dig[*l] = d;
            }
            row.push((index_of(&dig, dims), v.clone()));
        }
        row.sort_by_key(|(c, _)| *c);
        rows.push(row);
    }
    Ok(Op { n: total, rows })
}

/// An ordered operator product A_1 A_2 ... A_m kept as factors; applying it to
/// a vector applies A_m first.
#[derive(Clone, Debug)]
pub struct Product<S> {
    pub factors: Vec<Op<S>>,
}

impl<S: Scalar> Product<S> {
    pub fn new(factors: Vec<Op<S>>) -> Self {
        Product { factors }
    }

    pub fn apply(&self, v: &[S]) -> Vec<S> {
        let mut out = v.to_vec();
        for f in self.factors.iter().rev() {
            out = f.apply(&out);
        }
        out
    }

    /// Multiply the factors out into one matrix.
    pub fn collapse(&self, n: usize) -> Op<S> {
        self.factors.iter().fold(Op::identity(n), |acc, f| acc.mul(f))
    }
}

pub fn vec_sub<S: Scalar>(a: &[S], b: &[S]) -> Vec<S> {
    a.iter().zip(b).map(|(x, y)| x.clone() - y).collect()
}

pub fn vec_add_assign<S: Scalar>(a: &mut [S], b: &[S]) {
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
}

pub fn vec_scale<S: Scalar>(a: &[S], s: &S) -> Vec<S> {
    a.iter().map(|x| x.clone() * s).collect()
}

pub fn vec_max_abs<S: Scalar>(a: &[S]) -> f64 {
    a.iter().map(Scalar::magnitude).fold(0.0, f64::max)
}

pub fn vec_norm<S: Scalar>(a: &[S]) -> f64 {
    a.iter().map(|x| x.magnitude().powi(2)).sum::<f64>().sqrt()
}

pub fn basis_vec<S: Scalar>(n: usize, i: usize) -> Vec<S> {
    let mut v = vec![S::zero(); n];
    v[i] = S::one();
    v
}

/// Residual of an identity between two vectors, scaled by max(1, largest entry).
pub fn vec_residual<S: Scalar>(lhs: &[S], rhs: &[S]) -> f64 {
    let scale = vec_max_abs(lhs).max(vec_max_abs(rhs)).max(1.0);
    vec_max_abs(&vec_sub(lhs, rhs)) / scale
}

/// Residual of an identity between two operators, scaled like [`vec_residual`].
pub fn op_residual<S: Scalar>(lhs: &Op<S>, rhs: &Op<S>) -> f64 {
    let scale = lhs.max_abs().max(rhs.max_abs()).max(1.0);
    lhs.sub(rhs).max_abs() / scale
}

/// Keep a linearly independent subset of `vecs` (Gaussian elimination with
/// largest-magnitude pivots).
pub fn independent_subset<S: Scalar>(vecs: &[Vec<S>]) -> Vec<Vec<S>> {
    let mut kept: Vec<Vec<S>> = Vec::new();
    // reduced copies of kept vectors with their pivot columns
    let mut reduced: Vec<(usize, Vec<S>)> = Vec::new();
    for v in vecs {
        let mut w = v.clone();
        for (p, r) in &reduced {
            if !w[*p].is_zero() {
                let c = w[*p].clone() / &r[*p];
                for (wi, ri) in w.iter_mut().zip(r) {
                    *wi -= c.clone() * ri;
                }
            }
        }
        let scale = vec_max_abs(v).max(1e-300);
        let (pivot, mag) =
            w.iter().enumerate().map(|(i, x)| (i, x.magnitude())).fold((0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
        let independent = if S::EXACT { mag > 0.0 } else { mag > 1e-9 * scale };
        if independent {
            kept.push(v.clone());
            reduced.push((pivot, w));
        }
    }
    kept
}

/// An operator on aux ⊗ inner, kept as a product, read as an aux-indexed grid
/// of operators on the inner space.
#[derive(Clone, Debug)]
pub struct AuxOperator<S> {
    pub aux: usize,
    pub inner: usize,
    pub prod: Product<S>,
}

impl<S: Scalar> AuxOperator<S> {
    /// Entry (i, k) applied to an inner vector.
    pub fn apply_entry(&self, i: usize, k: usize, v: &[S]) -> Vec<S> {
        let mut e = vec![S::zero(); self.aux * self.inner];
        e[k * self.inner..(k + 1) * self.inner].clone_from_slice(v);
        let out = self.prod.apply(&e);
        out[i * self.inner..(i + 1) * self.inner].to_vec()
    }

    /// Σ_i entry (i, i) applied to an inner vector.
    pub fn apply_trace(&self, v: &[S]) -> Vec<S> {
        let mut acc = vec![S::zero(); self.inner];
        for i in 0..self.aux {
            vec_add_assign(&mut acc, &self.apply_entry(i, i, v));
        }
        acc
    }
}
