//! gl(2) Bethe vectors and the gl(3) nested construction with dual legs.
//!
//! Both use the vacuum ω = e_1 ⊗ ... ⊗ e_1 with T^i_k ω = 0 for i > k, so
//! T^1_2 creates. Slots are index - 1.

use crate::chain::{build_monodromy, monodromy_factors, weights, Annihilation, ChainSpec, Model, VacuumData};
use crate::error::{BetheError, Result};
use crate::operator::{
    basis_vec, digits, lift, vec_norm, vec_residual, vec_scale, vec_sub, AuxOperator, Op, Product,
};
use crate::rmatrix::{gl_r, hatted_r, hatted_r_coincident, Sign};
use crate::scalars::{f_left, f_right, g, without, Scalar};

/// One Bethe condition written as lhs = rhs.
#[derive(Clone, Debug, PartialEq)]
pub struct Condition<S> {
    pub lhs: S,
    pub rhs: S,
}

impl<S: Scalar> Condition<S> {
    pub fn raw(&self) -> S {
        self.lhs.clone() - &self.rhs
    }

    /// (lhs - rhs) / max(|lhs|, |rhs|, 1)
    pub fn relative(&self) -> f64 {
        self.raw().magnitude() / self.scale()
    }

    pub fn scale(&self) -> f64 {
        self.lhs.magnitude().max(self.rhs.magnitude()).max(1.0)
    }
}

fn require_model<S: Scalar>(spec: &ChainSpec<S>, vac: &VacuumData, model: Model) -> Result<()> {
    if spec.model != model {
        return Err(BetheError::Invalid(format!("expected a {} chain, got {}", model.name(), spec.model.name())));
    }
    if vac.convention != Annihilation::IGreaterK {
        return Err(BetheError::Invalid("creation by T^1_2 needs T^i_k ω = 0 for i > k".into()));
    }
    Ok(())
}

pub(crate) fn nonzero<S: Scalar>(v: Vec<S>) -> Result<Vec<S>> {
    let zero = if S::EXACT { v.iter().all(|x| x.is_zero()) } else { vec_norm(&v) < 1e-12 };
    if zero {
        Err(BetheError::ZeroVector)
    } else {
        Ok(v)
    }
}

/// T^1_2(u_1) ... T^1_2(u_N) ω
pub fn gl2_vector<S: Scalar>(spec: &ChainSpec<S>, vac: &VacuumData, us: &[S]) -> Result<Vec<S>> {
    require_model(spec, vac, Model::Gl2)?;
    let mut psi = vac.vector(spec.dim());
    for u in us.iter().rev() {
        psi = build_monodromy(spec, u)?.entry(0, 1).apply(&psi);
    }
    nonzero(psi)
}

/// λ₁(x) F(ū,x) + λ₂(x) F(x,ū)
pub fn gl2_eigenvalue<S: Scalar>(spec: &ChainSpec<S>, vac: &VacuumData, x: &S, us: &[S]) -> Result<S> {
    let l = weights(spec, vac, x)?;
    Ok(l[0].clone() * f_left(us, x)? + l[1].clone() * f_right(x, us)?)
}

/// λ₁(u_k) F(ū_k,u_k) = λ₂(u_k) F(u_k,ū_k) for each k.
pub fn gl2_residuals<S: Scalar>(spec: &ChainSpec<S>, vac: &VacuumData, us: &[S]) -> Result<Vec<Condition<S>>> {
    us.iter()
        .enumerate()
        .map(|(k, u)| {
            let rest = without(us, k);
            let l = weights(spec, vac, u)?;
            Ok(Condition { lhs: l[0].clone() * f_left(&rest, u)?, rhs: l[1].clone() * f_right(u, &rest)? })
        })
        .collect()
}

fn product_of<S: Scalar>(ops: &[Op<S>], n: usize) -> Op<S> {
    ops.iter().fold(Op::identity(n), |acc, o| acc.mul(o))
}

/// Residuals of the two diagonal exchange relations
///
/// T^1_1(x) T^1_2(ū) = F(ū,x) T^1_2(ū) T^1_1(x) - Σ g(u_k,x) F(ū_k,u_k) T^1_2({ū_k,x}) T^1_1(u_k)
/// T^2_2(x) T^1_2(ū) = F(x,ū) T^1_2(ū) T^2_2(x) - Σ g(x,u_k) F(u_k,ū_k) T^1_2({ū_k,x}) T^2_2(u_k)
///
/// as operator identities on the whole chain space.
pub fn gl2_exchange_residuals<S: Scalar>(spec: &ChainSpec<S>, x: &S, us: &[S]) -> Result<(f64, f64)> {
    let n = spec.dim();
    let creation = |pts: &[S]| -> Result<Op<S>> {
        let ops = pts.iter().map(|p| Ok(build_monodromy(spec, p)?.entry(0, 1).clone())).collect::<Result<Vec<_>>>()?;
        Ok(product_of(&ops, n))
    };
    let tx = build_monodromy(spec, x)?;
    let b_all = creation(us)?;
    let mut out = [0.0; 2];
    for (slot, diag) in [0usize, 1].into_iter().enumerate() {
        let lhs = tx.entry(diag, diag).mul(&b_all);
        let lead = if diag == 0 { f_left(us, x)? } else { f_right(x, us)? };
        let mut rhs = b_all.mul(tx.entry(diag, diag)).scale(&lead);
        for (k, uk) in us.iter().enumerate() {
            let rest = without(us, k);
            let coeff = if diag == 0 { g(uk, x)? * f_left(&rest, uk)? } else { g(x, uk)? * f_right(uk, &rest)? };
            let mut pts = rest.clone();
            pts.push(x.clone());
            let term = creation(&pts)?.mul(build_monodromy(spec, uk)?.entry(diag, diag));
            rhs = rhs.sub(&term.scale(&coeff));
        }
        out[slot] = crate::operator::op_residual(&lhs, &rhs);
    }
    Ok((out[0], out[1]))
}

/// Leg layout of the dressed gl(3) space: aux, M dual legs, chain.
fn gl3_dims(m: usize, dim: usize, aux_legs: usize) -> Vec<usize> {
    let mut dims = vec![2; aux_legs + m];
    dims.push(dim);
    dims
}

/// The upper-left 2 × 2 block T̃(x) of the gl(3) monodromy as an operator on aux(2) ⊗ chain.
pub fn gl3_upper_block<S: Scalar>(spec: &ChainSpec<S>, x: &S) -> Result<Op<S>> {
    let grid = build_monodromy(spec, x)?;
    Ok(grid.full.block(0, 0, 2 * grid.dim))
}

/// R̂_{0,1*}(x,v_1) ... R̂_{0,M*}(x,v_M) T̃_0(x) on a layout where `aux` is the
/// auxiliary leg, the dual legs follow the `aux_legs` leading legs and the chain is last.
/// `coincident = Some(k)` replaces the k-th dressing factor by its summed form at x = v_k.
pub fn gl3_hatted_factors<S: Scalar>(
    spec: &ChainSpec<S>,
    x: &S,
    vs: &[S],
    aux: usize,
    aux_legs: usize,
    coincident: Option<usize>,
) -> Result<Product<S>> {
    let m = vs.len();
    let dims = gl3_dims(m, spec.dim(), aux_legs);
    let mut factors = Vec::with_capacity(m + 1);
    for (j, v) in vs.iter().enumerate() {
        let r = if coincident == Some(j) { hatted_r_coincident(Sign::Plus) } else { hatted_r(Sign::Plus, x, v)? };
        factors.push(lift(&r, &[aux, aux_legs + j], &dims)?);
    }
    factors.push(lift(&gl3_upper_block(spec, x)?, &[aux, aux_legs + m], &dims)?);
    Ok(Product::new(factors))
}

/// T̂(x; v⃗) on aux ⊗ Ŵ with Ŵ = (V*)^{⊗M} ⊗ chain.
pub fn gl3_build_hatted<S: Scalar>(spec: &ChainSpec<S>, x: &S, vs: &[S]) -> Result<AuxOperator<S>> {
    let prod = gl3_hatted_factors(spec, x, vs, 0, 1, None)?;
    Ok(AuxOperator { aux: 2, inner: (1 << vs.len()) * spec.dim(), prod })
}

/// Ω̂ = f² ⊗ ... ⊗ f² ⊗ ω
pub fn gl3_vacuum<S: Scalar>(spec: &ChainSpec<S>, vac: &VacuumData, m: usize) -> Vec<S> {
    let dim = spec.dim();
    let dual_index = (1usize << m) - 1;
    basis_vec((1 << m) * dim, dual_index * dim + vac.index)
}

/// Φ(ū; v⃗) = T̂^1_2(u_1; v⃗) ... T̂^1_2(u_N; v⃗) Ω̂
pub fn gl3_nested_state<S: Scalar>(spec: &ChainSpec<S>, vac: &VacuumData, us: &[S], vs: &[S]) -> Result<Vec<S>> {
    require_model(spec, vac, Model::Gl3)?;
    let mut phi = gl3_vacuum(spec, vac, vs.len());
    for u in us.iter().rev() {
        phi = gl3_build_hatted(spec, u, vs)?.apply_entry(0, 1, &phi);
    }
    Ok(phi)
}

/// ⟨b(v⃗), Φ⟩ = Σ_a T^{a_1}_3(v_1) ... T^{a_M}_3(v_M) Φ_{a_1 ... a_M}
pub fn gl3_contract<S: Scalar>(spec: &ChainSpec<S>, vs: &[S], phi: &[S]) -> Result<Vec<S>> {
    let dim = spec.dim();
    let m = vs.len();
    let grids = vs.iter().map(|v| build_monodromy(spec, v)).collect::<Result<Vec<_>>>()?;
    let mut psi = vec![S::zero(); dim];
    for multi in 0..(1usize << m) {
        let a = digits(multi, &vec![2; m]);
        let mut comp = phi[multi * dim..(multi + 1) * dim].to_vec();
        for j in (0..m).rev() {
            comp = grids[j].entry(a[j], 2).apply(&comp);
        }
        crate::operator::vec_add_assign(&mut psi, &comp);
    }
    Ok(psi)
}

/// The final gl(3) Bethe vector ⟨b(v⃗), Φ(ū; v⃗)⟩.
pub fn gl3_vector<S: Scalar>(spec: &ChainSpec<S>, vac: &VacuumData, us: &[S], vs: &[S]) -> Result<Vec<S>> {
    let phi = gl3_nested_state(spec, vac, us, vs)?;
    nonzero(gl3_contract(spec, vs, &phi)?)
}

/// λ₁ F(ū,x) + λ₂ F(x,ū) F(v̄,x) + λ₃ F(x,v̄)
pub fn gl3_eigenvalue<S: Scalar>(spec: &ChainSpec<S>, vac: &VacuumData, x: &S, us: &[S], vs: &[S]) -> Result<S> {
    let l = weights(spec, vac, x)?;
    Ok(l[0].clone() * f_left(us, x)?
        + l[1].clone() * f_right(x, us)? * f_left(vs, x)?
        + l[2].clone() * f_right(x, vs)?)
}

/// Eigenvalue of T̂^1_1 + T̂^2_2 on Φ: λ₁ F(ū,x) / F(v̄,x) + λ₂ F(x,ū)
pub fn gl3_hatted_eigenvalue<S: Scalar>(
    spec: &ChainSpec<S>,
    vac: &VacuumData,
    x: &S,
    us: &[S],
    vs: &[S],
) -> Result<S> {
    let l = weights(spec, vac, x)?;
    Ok(l[0].clone() * f_left(us, x)? / f_left(vs, x)? + l[1].clone() * f_right(x, us)?)
}

/// The two families
/// λ₁(u_k) F(ū_k,u_k) = λ₂(u_k) F(v̄,u_k) F(u_k,ū_k)
/// λ₃(v_k) F(v_k,v̄_k) = λ₂(v_k) F(v̄_k,v_k) F(v_k,ū)
pub fn gl3_residuals<S: Scalar>(
    spec: &ChainSpec<S>,
    vac: &VacuumData,
    us: &[S],
    vs: &[S],
) -> Result<(Vec<Condition<S>>, Vec<Condition<S>>)> {
    let mut fam_u = Vec::with_capacity(us.len());
    for (k, u) in us.iter().enumerate() {
        let rest = without(us, k);
        let l = weights(spec, vac, u)?;
        fam_u.push(Condition {
            lhs: l[0].clone() * f_left(&rest, u)?,
            rhs: l[1].clone() * f_left(vs, u)? * f_right(u, &rest)?,
        });
    }
    let mut fam_v = Vec::with_capacity(vs.len());
    for (k, v) in vs.iter().enumerate() {
        let rest = without(vs, k);
        let l = weights(spec, vac, v)?;
        fam_v.push(Condition {
            lhs: l[2].clone() * f_right(v, &rest)?,
            rhs: l[1].clone() * f_left(&rest, v)? * f_right(v, us)?,
        });
    }
    Ok((fam_u, fam_v))
}

/// Residuals of T̂^2_1 Ω̂ = 0, T̂^1_1 Ω̂ = λ₁/F(v̄,x) Ω̂ and T̂^2_2 Ω̂ = λ₂ Ω̂.
pub fn gl3_vacuum_residuals<S: Scalar>(spec: &ChainSpec<S>, vac: &VacuumData, x: &S, vs: &[S]) -> Result<[f64; 3]> {
    let t = gl3_build_hatted(spec, x, vs)?;
    let omega = gl3_vacuum(spec, vac, vs.len());
    let l = weights(spec, vac, x)?;
    let zero = vec![S::zero(); omega.len()];
    let mu1 = l[0].clone() / f_left(vs, x)?;
    Ok([
        vec_residual(&t.apply_entry(1, 0, &omega), &zero),
        vec_residual(&t.apply_entry(0, 0, &omega), &vec_scale(&omega, &mu1)),
        vec_residual(&t.apply_entry(1, 1, &omega), &vec_scale(&omega, &l[1])),
    ])
}

/// Residual of R̃₀₀'(x,y) T̂₀(x;v⃗) T̂₀'(y;v⃗) = T̂₀'(y;v⃗) T̂₀(x;v⃗) R̃₀₀'(x,y)
/// on the whole space aux ⊗ aux' ⊗ Ŵ, with R̃ of gl(2) type.
pub fn gl3_hatted_rtt_residual<S: Scalar>(spec: &ChainSpec<S>, x: &S, y: &S, vs: &[S]) -> Result<f64> {
    let dims = gl3_dims(vs.len(), spec.dim(), 2);
    let n: usize = dims.iter().product();
    let r = lift(&gl_r(2, x, y)?, &[0, 1], &dims)?;
    let tx = gl3_hatted_factors(spec, x, vs, 0, 2, None)?.collapse(n);
    let ty = gl3_hatted_factors(spec, y, vs, 1, 2, None)?.collapse(n);
    Ok(crate::operator::op_residual(&r.mul(&tx).mul(&ty), &ty.mul(&tx).mul(&r)))
}

/// Outcome of checking the two-step reduction at sample points.
#[derive(Clone, Debug)]
pub struct ReductionCheck {
    /// relative residual of (T̂^1_1 + T̂^2_2) Φ = Ê Φ, worst over samples
    pub hatted_residual: f64,
    /// relative residual of H ⟨b, Φ⟩ = E ⟨b, Φ⟩, worst over samples
    pub full_residual: f64,
    /// λ₃(v_k) F(v_k,v̄_k) = Ê(v_k) F(v̄_k,v_k), with the removable pole of Ê cancelled
    pub bridge: Vec<f64>,
}

/// Check that Φ(ū; v⃗) is an eigenvector of the dressed transfer matrix and that
/// the bridging condition lifts it to an eigenvector of H(x).
pub fn gl3_reduction_check<S: Scalar>(
    spec: &ChainSpec<S>,
    vac: &VacuumData,
    us: &[S],
    vs: &[S],
    samples: &[S],
) -> Result<ReductionCheck> {
    let phi = gl3_nested_state(spec, vac, us, vs)?;
    let psi = nonzero(gl3_contract(spec, vs, &phi)?)?;
    let mut hatted_residual: f64 = 0.0;
    let mut full_residual: f64 = 0.0;
    for x in samples {
        let t = gl3_build_hatted(spec, x, vs)?;
        let e_hat = gl3_hatted_eigenvalue(spec, vac, x, us, vs)?;
        hatted_residual = hatted_residual.max(vec_residual(&t.apply_trace(&phi), &vec_scale(&phi, &e_hat)));
        let h = crate::chain::transfer(spec, x)?;
        let e = gl3_eigenvalue(spec, vac, x, us, vs)?;
        let diff = vec_sub(&h.apply(&psi), &vec_scale(&psi, &e));
        full_residual = full_residual.max(vec_norm(&diff) / vec_norm(&psi));
    }
    let mut bridge = Vec::with_capacity(vs.len());
    for (k, v) in vs.iter().enumerate() {
        let rest = without(vs, k);
        let l = weights(spec, vac, v)?;
        // Ê(v_k) F(v̄_k, v_k): the λ₁ term carries 1/f(v_k,v_k) = 0
        let rhs = l[1].clone() * f_right(v, us)? * f_left(&rest, v)?;
        let lhs = l[2].clone() * f_right(v, &rest)?;
        bridge.push(Condition { lhs, rhs }.relative());
    }
    Ok(ReductionCheck { hatted_residual, full_residual, bridge })
}

/// Used by the monodromy-level tests: the full factor list of T(x).
pub fn chain_factors<S: Scalar>(spec: &ChainSpec<S>, x: &S) -> Result<Product<S>> {
    monodromy_factors(spec, x)
}
