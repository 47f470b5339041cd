//! Inhomogeneous fundamental spin chains: monodromy, vacuum, weights, transfer matrix.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{BetheError, Result};
use crate::operator::{basis_vec, index_of, lift, op_residual, vec_max_abs, Op, Product};
use crate::rmatrix::{gl_r, sp4_r};
use crate::scalars::Scalar;

/// Largest chain dimension handed to dense diagonalization.
pub const SPECTRUM_CAPACITY: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Gl2,
    Gl3,
    Sp4,
}

impl Model {
    pub fn local_dim(self) -> usize {
        match self {
            Model::Gl2 => 2,
            Model::Gl3 => 3,
            Model::Sp4 => 4,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gl2" => Ok(Model::Gl2),
            "gl3" => Ok(Model::Gl3),
            "sp4" => Ok(Model::Sp4),
            other => Err(BetheError::Parse(other.to_string())),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Model::Gl2 => "gl2",
            Model::Gl3 => "gl3",
            Model::Sp4 => "sp4",
        }
    }
}

/// Differences between inhomogeneities that would hit a pole of some R-matrix.
const FORBIDDEN_OFFSETS: [i64; 5] = [0, 1, -1, 3, -3];

#[derive(Clone, Debug, PartialEq)]
pub struct ChainSpec<S> {
    pub model: Model,
    pub zs: Vec<S>,
}

/// On-disk form: {"model": "sp4", "length": 2, "inhomogeneities": ["0", "1/2"]}.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChainFile {
    pub model: Model,
    pub length: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inhomogeneities: Option<Vec<Value>>,
}

impl<S: Scalar> ChainSpec<S> {
    pub fn new(model: Model, zs: Vec<S>) -> Result<Self> {
        if zs.is_empty() {
            return Err(BetheError::Invalid("chain length must be at least 1".into()));
        }
        for i in 0..zs.len() {
            for j in 0..i {
                for off in FORBIDDEN_OFFSETS {
                    if (zs[i].clone() - &zs[j] - S::from_int(off)).is_negligible() {
                        return Err(BetheError::Invalid(format!(
                            "inhomogeneities {} and {} differ by {off}",
                            zs[j], zs[i]
                        )));
                    }
                }
            }
        }
        Ok(ChainSpec { model, zs })
    }

    /// z_j = (j - 1) / L.
    pub fn with_default_sites(model: Model, length: usize) -> Result<Self> {
        let zs = (0..length).map(|j| S::from_ratio(j as i64, length as i64)).collect();
        Self::new(model, zs)
    }

    pub fn from_file(file: &ChainFile) -> Result<Self> {
        match &file.inhomogeneities {
            None => Self::with_default_sites(file.model, file.length),
            Some(vals) => {
                if vals.len() != file.length {
                    return Err(BetheError::Invalid(format!(
                        "length {} but {} inhomogeneities",
                        file.length,
                        vals.len()
                    )));
                }
                let zs = vals.iter().map(S::from_json).collect::<Result<Vec<_>>>()?;
                Self::new(file.model, zs)
            }
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: ChainFile = serde_json::from_str(s).map_err(|e| BetheError::Parse(e.to_string()))?;
        Self::from_file(&file)
    }

    pub fn to_file(&self) -> ChainFile {
        ChainFile {
            model: self.model,
            length: self.zs.len(),
            inhomogeneities: Some(self.zs.iter().map(Scalar::to_json).collect()),
        }
    }

    pub fn length(&self) -> usize {
        self.zs.len()
    }

    pub fn local_dim(&self) -> usize {
        self.model.local_dim()
    }

    /// Dimension d^L of the chain space.
    pub fn dim(&self) -> usize {
        self.local_dim().pow(self.zs.len() as u32)
    }

    /// The local Lax operator: the model's own R-matrix.
    pub fn lax(&self, x: &S, z: &S) -> Result<Op<S>> {
        match self.model {
            Model::Gl2 => gl_r(2, x, z),
            Model::Gl3 => gl_r(3, x, z),
            Model::Sp4 => sp4_r(x, z),
        }
    }

    pub fn to_c64(&self) -> ChainSpec<Complex64> {
        ChainSpec { model: self.model, zs: self.zs.iter().map(Scalar::to_c64).collect() }
    }
}

/// R_{0,1}(x,z_1) ... R_{0,L}(x,z_L) as lifted factors on aux ⊗ site_1 ⊗ ... ⊗ site_L.
pub fn monodromy_factors<S: Scalar>(spec: &ChainSpec<S>, x: &S) -> Result<Product<S>> {
    let d = spec.local_dim();
    let dims = vec![d; spec.length() + 1];
    let factors = spec
        .zs
        .iter()
        .enumerate()
        .map(|(j, z)| lift(&spec.lax(x, z)?, &[0, j + 1], &dims))
        .collect::<Result<Vec<_>>>()?;
    Ok(Product::new(factors))
}

/// The d × d grid T^i_k(x) of chain operators, plus the full matrix on aux ⊗ chain.
#[derive(Clone, Debug)]
pub struct MonodromyGrid<S> {
    pub d: usize,
    pub dim: usize,
    pub x: S,
    pub full: Op<S>,
    blocks: Vec<Op<S>>,
}

impl<S: Scalar> MonodromyGrid<S> {
    /// T^i_k in slot indices.
    pub fn entry(&self, i: usize, k: usize) -> &Op<S> {
        &self.blocks[i * self.d + k]
    }
}

pub fn build_monodromy<S: Scalar>(spec: &ChainSpec<S>, x: &S) -> Result<MonodromyGrid<S>> {
    let d = spec.local_dim();
    let dim = spec.dim();
    let full = monodromy_factors(spec, x)?.collapse(d * dim);
    let mut blocks = Vec::with_capacity(d * d);
    for i in 0..d {
        for k in 0..d {
            blocks.push(full.block(i * dim, k * dim, dim));
        }
    }
    Ok(MonodromyGrid { d, dim, x: x.clone(), full, blocks })
}

/// Which off-diagonal half annihilates the vacuum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Annihilation {
    /// T^i_k ω = 0 for i < k
    ILessK,
    /// T^i_k ω = 0 for i > k
    IGreaterK,
}

impl Annihilation {
    pub fn kills(self, i: usize, k: usize) -> bool {
        match self {
            Annihilation::ILessK => i < k,
            Annihilation::IGreaterK => i > k,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VacuumData {
    /// local basis slot repeated on every site
    pub local: usize,
    /// basis index of ω in the chain space
    pub index: usize,
    pub convention: Annihilation,
}

impl VacuumData {
    pub fn vector<S: Scalar>(&self, dim: usize) -> Vec<S> {
        basis_vec(dim, self.index)
    }
}

fn sample_points<S: Scalar>() -> Vec<S> {
    [(7, 3), (-11, 5), (13, 4), (5, 7), (-17, 6)].iter().map(|&(p, q)| S::from_ratio(p, q)).collect()
}

fn convention_order(model: Model) -> [Annihilation; 2] {
    // each model's own construction fixes which half annihilates; the other is the fallback
    match model {
        Model::Sp4 => [Annihilation::ILessK, Annihilation::IGreaterK],
        Model::Gl2 | Model::Gl3 => [Annihilation::IGreaterK, Annihilation::ILessK],
    }
}

fn is_vacuum<S: Scalar>(grids: &[MonodromyGrid<S>], omega: &[S], index: usize, conv: Annihilation) -> bool {
    for grid in grids {
        let scale = grid.full.max_abs().max(1.0);
        let tol = if S::EXACT { 0.0 } else { 1e-10 * scale };
        for i in 0..grid.d {
            for k in 0..grid.d {
                let out = grid.entry(i, k).apply(omega);
                if conv.kills(i, k) {
                    if vec_max_abs(&out) > tol {
                        return false;
                    }
                } else if i == k {
                    let mut rest = out.clone();
                    rest[index] = S::zero();
                    if vec_max_abs(&rest) > tol {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// Scan the repeated-index product states for a vacuum, trying the model's own
/// annihilation convention first.
pub fn detect_vacuum<S: Scalar>(spec: &ChainSpec<S>) -> Result<VacuumData> {
    let d = spec.local_dim();
    let dims = vec![d; spec.length()];
    let points: Vec<S> = sample_points::<S>()
        .into_iter()
        .filter(|x| spec.zs.iter().all(|z| spec.lax(x, z).is_ok()))
        .collect();
    let grids = points.iter().map(|x| build_monodromy(spec, x)).collect::<Result<Vec<_>>>()?;
    for conv in convention_order(spec.model) {
        for local in 0..d {
            let index = index_of(&vec![local; spec.length()], &dims);
            let omega = basis_vec(spec.dim(), index);
            if is_vacuum(&grids, &omega, index, conv) {
                return Ok(VacuumData { local, index, convention: conv });
            }
        }
    }
    Err(BetheError::NoVacuum)
}

/// λ_i(x) for every slot i, read off by applying T^i_i(x) to ω.
pub fn weights<S: Scalar>(spec: &ChainSpec<S>, vac: &VacuumData, x: &S) -> Result<Vec<S>> {
    let d = spec.local_dim();
    let dim = spec.dim();
    let t = monodromy_factors(spec, x)?;
    Ok((0..d)
        .map(|i| {
            let out = t.apply(&basis_vec(d * dim, i * dim + vac.index));
            out[i * dim + vac.index].clone()
        })
        .collect())
}

/// H(x) = Σ_i T^i_i(x).
pub fn transfer<S: Scalar>(spec: &ChainSpec<S>, x: &S) -> Result<Op<S>> {
    let grid = build_monodromy(spec, x)?;
    Ok((0..grid.d).fold(Op::zeros(grid.dim), |acc, i| acc.add(grid.entry(i, i))))
}

/// Residual of R₀₀'(x,y) T₀(x) T₀'(y) = T₀'(y) T₀(x) R₀₀'(x,y) on aux ⊗ aux ⊗ chain.
pub fn check_rtt<S: Scalar>(spec: &ChainSpec<S>, x: &S, y: &S) -> Result<f64> {
    let d = spec.local_dim();
    let dims = [d, d, spec.dim()];
    let r = lift(&spec.lax(x, y)?, &[0, 1], &dims)?;
    let tx = lift(&build_monodromy(spec, x)?.full, &[0, 2], &dims)?;
    let ty = lift(&build_monodromy(spec, y)?.full, &[1, 2], &dims)?;
    Ok(op_residual(&r.mul(&tx).mul(&ty), &ty.mul(&tx).mul(&r)))
}

/// Residual of H(x) H(y) = H(y) H(x).
pub fn check_commuting<S: Scalar>(spec: &ChainSpec<S>, x: &S, y: &S) -> Result<f64> {
    if (x.clone() - y).is_negligible() {
        return Err(BetheError::Pole(format!("coinciding points {x} and {y}")));
    }
    let hx = transfer(spec, x)?;
    let hy = transfer(spec, y)?;
    Ok(op_residual(&hx.mul(&hy), &hy.mul(&hx)))
}

/// Eigenvalues of a dense complex matrix, sorted by real then imaginary part.
pub fn eigenvalues(m: DMatrix<Complex64>) -> Result<Vec<Complex64>> {
    let n = m.nrows();
    let schur = m
        .try_schur(1e-15, 100_000)
        .ok_or_else(|| BetheError::Numerical("Schur decomposition did not converge".into()))?;
    let (_, t) = schur.unpack();
    let mut ev: Vec<Complex64> = (0..n).map(|i| t[(i, i)]).collect();
    ev.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(ev)
}

/// Eigenvalues of H(x) grouped with multiplicities.
pub fn spectrum(spec: &ChainSpec<Complex64>, x: &Complex64) -> Result<Vec<(Complex64, usize)>> {
    if spec.dim() > SPECTRUM_CAPACITY {
        return Err(BetheError::Capacity(format!(
            "chain dimension {} exceeds {SPECTRUM_CAPACITY}",
            spec.dim()
        )));
    }
    let ev = eigenvalues(transfer(spec, x)?.to_nalgebra())?;
    let scale = ev.iter().map(|e| e.norm()).fold(1.0, f64::max);
    let mut out: Vec<(Complex64, usize)> = Vec::new();
    for e in ev {
        match out.iter_mut().find(|(c, _)| (c - e).norm() < 1e-8 * scale) {
            Some((_, m)) => *m += 1,
            None => out.push((e, 1)),
        }
    }
    Ok(out)
}

/// Fraction of ψ lying in the (numerical) eigenspace of `m` for eigenvalue `e`.
pub fn eigenspace_overlap(m: &DMatrix<Complex64>, e: Complex64, psi: &[Complex64]) -> f64 {
    let n = m.nrows();
    let shifted = m - DMatrix::<Complex64>::identity(n, n) * e;
    let scale = m.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let svd = shifted.svd(false, true);
    let Some(v_t) = svd.v_t else { return 0.0 };
    let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return 0.0;
    }
    let mut captured = 0.0;
    for (row, s) in svd.singular_values.iter().enumerate() {
        if *s < 1e-6 * scale {
            let amp: Complex64 = (0..n).map(|c| v_t[(row, c)] * psi[c]).sum();
            captured += amp.norm_sqr();
        }
    }
    captured.sqrt() / norm
}
