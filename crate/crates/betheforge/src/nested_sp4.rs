//! The sp(4) construction: sign-block monodromies, B-operators on V₊ ⊗ V₋*,
//! dressed (hatted) monodromies on Ŵ₀, the reduced vacuum and the final Bethe vector.
//!
//! The vacuum is ω = e_2 ⊗ ... ⊗ e_2 with T^i_k ω = 0 for i < k. The dressed
//! space Ŵ has legs (V₊*)^{⊗N}, then V₋^{⊗N}, then the chain.

use crate::chain::{build_monodromy, weights, Annihilation, ChainSpec, Model, MonodromyGrid, VacuumData};
use crate::error::{BetheError, Result};
use crate::nested_gl::{nonzero, Condition};
use crate::operator::{
    digits, independent_subset, lift, vec_add_assign, vec_max_abs, vec_norm, vec_residual, vec_scale, vec_sub,
    AuxOperator, Op, Product,
};
use crate::rmatrix::{
    block_r, dual_pp, flip, hatted_r, hatted_r_coincident, minus_leg_r, minus_leg_r_coincident, sp4_slot, Sign,
};
use crate::scalars::{f, f_left, f_right, g, shift, without, RootSet, Scalar};

/// λ or μ values indexed by the sp(4) weight labels 1, 2, -1, -2.
#[derive(Clone, Debug, PartialEq)]
pub struct Weights4<S> {
    pub p1: S,
    pub p2: S,
    pub m1: S,
    pub m2: S,
}

impl<S: Scalar> Weights4<S> {
    pub fn sum(&self) -> S {
        self.p1.clone() + &self.p2 + &self.m1 + &self.m2
    }
}

fn require_sp4<S: Scalar>(spec: &ChainSpec<S>, vac: &VacuumData) -> Result<()> {
    if spec.model != Model::Sp4 {
        return Err(BetheError::Invalid(format!("expected an sp4 chain, got {}", spec.model.name())));
    }
    if vac.convention != Annihilation::ILessK {
        return Err(BetheError::Invalid("the sp(4) ansatz needs T^i_k ω = 0 for i < k".into()));
    }
    Ok(())
}

pub fn sp4_weights<S: Scalar>(spec: &ChainSpec<S>, vac: &VacuumData, x: &S) -> Result<Weights4<S>> {
    let w = weights(spec, vac, x)?;
    Ok(Weights4 {
        p1: w[sp4_slot(1)].clone(),
        p2: w[sp4_slot(2)].clone(),
        m1: w[sp4_slot(-1)].clone(),
        m2: w[sp4_slot(-2)].clone(),
    })
}

/// Weights of the reduced vacuum Ω̂:
/// μ₁ = λ₁ F(ū,x-1), μ₂ = λ₂ / F(ū,x), μ₋₁ = λ₋₁ F(x+1,ū), μ₋₂ = λ₋₂ / F(x,ū)
pub fn reduced_weights<S: Scalar>(spec: &ChainSpec<S>, vac: &VacuumData, us: &[S], x: &S) -> Result<Weights4<S>> {
    let l = sp4_weights(spec, vac, x)?;
    Ok(Weights4 {
        p1: l.p1 * f_left(us, &shift(x, -1))?,
        p2: l.p2 / f_left(us, x)?,
        m1: l.m1 * f_right(&shift(x, 1), us)?,
        m2: l.m2 / f_right(x, us)?,
    })
}

/// Sign-sector blocks T^(+) = (T^i_k) and T^(-) = (T^{-i}_{-k}), i, k ∈ {1, 2},
/// each as an operator on (block leg) ⊗ chain.
#[derive(Clone, Debug)]
pub struct BlockMonodromy<S> {
    pub plus: Op<S>,
    pub minus: Op<S>,
}

impl<S: Scalar> BlockMonodromy<S> {
    pub fn sign(&self, s: Sign) -> &Op<S> {
        match s {
            Sign::Plus => &self.plus,
            Sign::Minus => &self.minus,
        }
    }
}

fn sector_block<S: Scalar>(grid: &MonodromyGrid<S>, s: Sign) -> Op<S> {
    let dim = grid.dim;
    let label = |a: usize| s.factor() * (a as i32 + 1);
    let mut entries = Vec::new();
    for a in 0..2 {
        for b in 0..2 {
            let op = grid.entry(sp4_slot(label(a)), sp4_slot(label(b)));
            for r in 0..dim {
                for (c, v) in op.row(r) {
                    entries.push((a * dim + r, b * dim + c, v.clone()));
                }
            }
        }
    }
    Op::from_triplets(2 * dim, entries)
}

pub fn block_monodromy<S: Scalar>(spec: &ChainSpec<S>, x: &S) -> Result<BlockMonodromy<S>> {
    if spec.model != Model::Sp4 {
        return Err(BetheError::Invalid("block monodromies exist only for sp4 chains".into()));
    }
    let grid = build_monodromy(spec, x)?;
    Ok(BlockMonodromy { plus: sector_block(&grid, Sign::Plus), minus: sector_block(&grid, Sign::Minus) })
}

/// Leg layout: `aux_legs` two-dimensional auxiliary legs, N dual legs, N minus legs, chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HatLayout {
    pub aux_legs: usize,
    pub n: usize,
    pub chain_dim: usize,
}

impl HatLayout {
    pub fn new(aux_legs: usize, n: usize, chain_dim: usize) -> Self {
        HatLayout { aux_legs, n, chain_dim }
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![2; self.aux_legs + 2 * self.n];
        d.push(self.chain_dim);
        d
    }

    pub fn dual(&self, j: usize) -> usize {
        self.aux_legs + j
    }

    pub fn minus(&self, j: usize) -> usize {
        self.aux_legs + self.n + j
    }

    pub fn chain(&self) -> usize {
        self.aux_legs + 2 * self.n
    }

    /// Dimension of Ŵ = (V₊*)^{⊗N} ⊗ V₋^{⊗N} ⊗ chain.
    pub fn inner_dim(&self) -> usize {
        (1usize << (2 * self.n)) * self.chain_dim
    }

    pub fn total(&self) -> usize {
        (1usize << self.aux_legs) * self.inner_dim()
    }
}

/// R̂^(ε,+)(x;u⃗) T^(ε)(x) R^(ε,-)(x;u⃗) with the dressing products ascending on the
/// dual legs and descending on the minus legs, acting through auxiliary leg `aux`.
/// `coincident = Some(k)` means x = u_k and the k-th factors take their summed form.
pub fn hatted_factors<S: Scalar>(
    spec: &ChainSpec<S>,
    sign: Sign,
    x: &S,
    us: &[S],
    layout: &HatLayout,
    aux: usize,
    coincident: Option<usize>,
) -> Result<Product<S>> {
    let dims = layout.dims();
    let n = us.len();
    let mut factors = Vec::with_capacity(2 * n + 1);
    for (j, u) in us.iter().enumerate() {
        let r = if coincident == Some(j) { hatted_r_coincident(sign) } else { hatted_r(sign, x, u)? };
        factors.push(lift(&r, &[aux, layout.dual(j)], &dims)?);
    }
    let block = block_monodromy(spec, x)?;
    factors.push(lift(block.sign(sign), &[aux, layout.chain()], &dims)?);
    for j in (0..n).rev() {
        let r = if coincident == Some(j) { minus_leg_r_coincident(sign) } else { minus_leg_r(sign, x, &us[j])? };
        factors.push(lift(&r, &[aux, layout.minus(j)], &dims)?);
    }
    Ok(Product::new(factors))
}

/// T̂^(ε)(x; u⃗) as a 2 × 2 grid of operators on Ŵ.
pub fn hatted_monodromy<S: Scalar>(spec: &ChainSpec<S>, sign: Sign, x: &S, us: &[S]) -> Result<AuxOperator<S>> {
    let layout = HatLayout::new(1, us.len(), spec.dim());
    let prod = hatted_factors(spec, sign, x, us, &layout, 0, None)?;
    Ok(AuxOperator { aux: 2, inner: layout.inner_dim(), prod })
}

/// The same at x = u_k, built from the summed coincident forms.
pub fn hatted_monodromy_coincident<S: Scalar>(
    spec: &ChainSpec<S>,
    sign: Sign,
    us: &[S],
    k: usize,
) -> Result<AuxOperator<S>> {
    let layout = HatLayout::new(1, us.len(), spec.dim());
    let prod = hatted_factors(spec, sign, &us[k], us, &layout, 0, Some(k))?;
    Ok(AuxOperator { aux: 2, inner: layout.inner_dim(), prod })
}

/// Ω̂ = f¹ ⊗ ... ⊗ f¹ ⊗ e₋₁ ⊗ ... ⊗ e₋₁ ⊗ ω. Both f¹ and e₋₁ sit in block slot 0.
pub fn reduced_vacuum_vector<S: Scalar>(spec: &ChainSpec<S>, vac: &VacuumData, n: usize) -> Vec<S> {
    let layout = HatLayout::new(0, n, spec.dim());
    crate::operator::basis_vec(layout.inner_dim(), vac.index)
}

/// Ω̂ together with the root set it was dressed by, checked against the six vacuum relations.
#[derive(Clone, Debug)]
pub struct ReducedVacuum<S> {
    pub omega: Vec<S>,
    pub us: Vec<S>,
}

impl<S: Scalar> ReducedVacuum<S> {
    pub fn mu(&self, spec: &ChainSpec<S>, vac: &VacuumData, x: &S) -> Result<Weights4<S>> {
        reduced_weights(spec, vac, &self.us, x)
    }
}

/// Residuals of T̂^1_2 Ω̂ = 0, T̂^{-2}_{-1} Ω̂ = 0 and the four diagonal relations
/// T̂^{±i}_{±i} Ω̂ = μ_{±i} Ω̂, in that order.
pub fn reduced_vacuum_residuals<S: Scalar>(
    spec: &ChainSpec<S>,
    vac: &VacuumData,
    us: &[S],
    x: &S,
) -> Result<[f64; 6]> {
    require_sp4(spec, vac)?;
    let omega = reduced_vacuum_vector(spec, vac, us.len());
    let tp = hatted_monodromy(spec, Sign::Plus, x, us)?;
    let tm = hatted_monodromy(spec, Sign::Minus, x, us)?;
    let mu = reduced_weights(spec, vac, us, x)?;
    let zero = vec![S::zero(); omega.len()];
    let diag = |t: &AuxOperator<S>, a: usize, m: &S| vec_residual(&t.apply_entry(a, a, &omega), &vec_scale(&omega, m));
    Ok([
        vec_residual(&tp.apply_entry(0, 1, &omega), &zero),
        vec_residual(&tm.apply_entry(1, 0, &omega), &zero),
        diag(&tp, 0, &mu.p1),
        diag(&tp, 1, &mu.p2),
        diag(&tm, 0, &mu.m1),
        diag(&tm, 1, &mu.m2),
    ])
}

fn identity_tolerance<S: Scalar>() -> f64 {
    if S::EXACT {
        0.0
    } else {
        1e-10
    }
}

/// Build Ω̂ for u⃗ and confirm the vacuum relations at `probe`.
pub fn reduced_vacuum<S: Scalar>(
    spec: &ChainSpec<S>,
    vac: &VacuumData,
    us: &[S],
    probe: &S,
) -> Result<ReducedVacuum<S>> {
    let res = reduced_vacuum_residuals(spec, vac, us, probe)?;
    let worst = res.iter().cloned().fold(0.0, f64::max);
    if worst > identity_tolerance::<S>() {
        return Err(BetheError::VacuumMismatch(format!("vacuum relation residuals {res:?}")));
    }
    Ok(ReducedVacuum { omega: reduced_vacuum_vector(spec, vac, us.len()), us: us.to_vec() })
}

/// B₁..N(args) with the factor at position p acting on dual/minus leg pair `order[p]`.
/// The pairing ⟨B, X⟩ contracts those legs of X against T^i_{-k}(args[p]).
#[derive(Clone, Debug)]
pub struct BChain<S> {
    grids: Vec<MonodromyGrid<S>>,
    order: Vec<usize>,
    chain_dim: usize,
}

impl<S: Scalar> BChain<S> {
    pub fn new(spec: &ChainSpec<S>, args: &[S], order: &[usize]) -> Result<Self> {
        let mut sorted = order.to_vec();
        sorted.sort_unstable();
        if args.len() != order.len() || sorted.iter().enumerate().any(|(i, &o)| i != o) {
            return Err(BetheError::Invalid(format!("leg order {order:?} is not a permutation")));
        }
        let grids = args.iter().map(|a| build_monodromy(spec, a)).collect::<Result<Vec<_>>>()?;
        Ok(BChain { grids, order: order.to_vec(), chain_dim: spec.dim() })
    }

    /// B₁(u₁) ... B_N(u_N) in the natural order.
    pub fn ordered(spec: &ChainSpec<S>, us: &[S]) -> Result<Self> {
        Self::new(spec, us, &(0..us.len()).collect::<Vec<_>>())
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// The chain operator T^{i_1}_{-k_1}(a_1) ... T^{i_N}_{-k_N}(a_N) for block slots (i⃗, k⃗),
    /// indices listed per leg.
    pub fn entry(&self, ii: &[usize], kk: &[usize]) -> Op<S> {
        let mut acc = Op::identity(self.chain_dim);
        for (pos, &leg) in self.order.iter().enumerate() {
            let op = self.grids[pos].entry(sp4_slot(ii[leg] as i32 + 1), sp4_slot(-(kk[leg] as i32 + 1)));
            acc = acc.mul(op);
        }
        acc
    }

    /// ⟨B, X⟩ for X on (V₊*)^{⊗N} ⊗ V₋^{⊗N} ⊗ chain.
    pub fn pair(&self, x: &[S]) -> Vec<S> {
        let n = self.len();
        let d = self.chain_dim;
        let leg_dims = vec![2; 2 * n];
        let mut out = vec![S::zero(); d];
        for multi in 0..(1usize << (2 * n)) {
            let idx = digits(multi, &leg_dims);
            let mut comp = x[multi * d..(multi + 1) * d].to_vec();
            if comp.iter().all(|c| c.is_zero()) {
                continue;
            }
            for pos in (0..n).rev() {
                let leg = self.order[pos];
                let op = self.grids[pos].entry(sp4_slot(idx[leg] as i32 + 1), sp4_slot(-(idx[n + leg] as i32 + 1)));
                comp = op.apply(&comp);
            }
            vec_add_assign(&mut out, &comp);
        }
        out
    }
}

/// A spanning set of W₀ = A^(+) A^(-) ω: ω, then T^{-i}_{-k}(x)ω at two points, then
/// T^i_k(x) applied to all of these, reduced to an independent subset.
pub fn w0_spanning_set<S: Scalar>(spec: &ChainSpec<S>, vac: &VacuumData) -> Result<Vec<Vec<S>>> {
    require_sp4(spec, vac)?;
    let points = [S::from_ratio(5, 13), S::from_ratio(-7, 10)];
    let grids = points.iter().map(|x| build_monodromy(spec, x)).collect::<Result<Vec<_>>>()?;
    let omega = vac.vector(spec.dim());
    let mut base = vec![omega];
    for grid in &grids {
        for i in [-1, -2] {
            for k in [-1, -2] {
                base.push(grid.entry(sp4_slot(i), sp4_slot(k)).apply(&base[0]));
            }
        }
    }
    let mut all = base.clone();
    for grid in &grids {
        for v in &base {
            for i in [1, 2] {
                for k in [1, 2] {
                    all.push(grid.entry(sp4_slot(i), sp4_slot(k)).apply(v));
                }
            }
        }
    }
    Ok(independent_subset(&all))
}

/// Every w ∈ `w0` placed in every dual/minus basis slot: a spanning set of Ŵ₀.
pub fn hat_spanning_set<S: Scalar>(w0: &[Vec<S>], n: usize) -> Vec<Vec<S>> {
    let d = w0.first().map_or(0, |w| w.len());
    let blocks = 1usize << (2 * n);
    let mut out = Vec::with_capacity(blocks * w0.len());
    for b in 0..blocks {
        for w in w0 {
            let mut v = vec![S::zero(); blocks * d];
            v[b * d..(b + 1) * d].clone_from_slice(w);
            out.push(v);
        }
    }
    out
}

/// Annihilation check: worst |T^{-i}_k(x) w| for i, k ∈ {1,2} over the spanning set.
pub fn lowering_on_w0<S: Scalar>(spec: &ChainSpec<S>, w0: &[Vec<S>], x: &S) -> Result<f64> {
    let grid = build_monodromy(spec, x)?;
    let mut worst: f64 = 0.0;
    for i in [1, 2] {
        for k in [1, 2] {
            let op = grid.entry(sp4_slot(-i), sp4_slot(k));
            let scale = grid.full.max_abs().max(1.0);
            for w in w0 {
                worst = worst.max(vec_max_abs(&op.apply(w)) / scale);
            }
        }
    }
    Ok(worst)
}

/// Residual of R^(ε,ε')(x,y) T̂^(ε)₀(x) T̂^(ε')₀'(y) = T̂^(ε')₀'(y) T̂^(ε)₀(x) R^(ε,ε')(x,y)
/// applied to aux ⊗ aux' ⊗ (spanning vectors of Ŵ₀). With u⃗ = ∅ this is the plain block RTT.
pub fn block_rtt_residual<S: Scalar>(
    spec: &ChainSpec<S>,
    us: &[S],
    signs: (Sign, Sign),
    x: &S,
    y: &S,
    spanning: &[Vec<S>],
) -> Result<f64> {
    let layout = HatLayout::new(2, us.len(), spec.dim());
    let dims = layout.dims();
    let r = lift(&block_r(signs.0, signs.1, x, y)?, &[0, 1], &dims)?;
    let tx = hatted_factors(spec, signs.0, x, us, &layout, 0, None)?;
    let ty = hatted_factors(spec, signs.1, y, us, &layout, 1, None)?;
    let inner = layout.inner_dim();
    let mut worst: f64 = 0.0;
    for a in 0..4 {
        for w in spanning {
            let mut v = vec![S::zero(); 4 * inner];
            v[a * inner..(a + 1) * inner].clone_from_slice(w);
            let lhs = r.apply(&tx.apply(&ty.apply(&v)));
            let rhs = ty.apply(&tx.apply(&r.apply(&v)));
            worst = worst.max(vec_residual(&lhs, &rhs));
        }
    }
    Ok(worst)
}

/// The same relation on the whole space, used to show it really needs W₀.
pub fn block_rtt_full_space_residual<S: Scalar>(spec: &ChainSpec<S>, signs: (Sign, Sign), x: &S, y: &S) -> Result<f64> {
    let d = spec.dim();
    let basis: Vec<Vec<S>> = (0..d).map(|i| crate::operator::basis_vec(d, i)).collect();
    block_rtt_residual(spec, &[], signs, x, y, &basis)
}

/// Access to T̃^i_k(x) realized by the dressed monodromies on Ŵ₀. Indices are
/// the signed labels ±1, ±2; both must have the same sign.
pub struct TildeRealization<'a, S> {
    pub spec: &'a ChainSpec<S>,
    pub us: Vec<S>,
}

impl<'a, S: Scalar> TildeRealization<'a, S> {
    pub fn new(spec: &'a ChainSpec<S>, us: &[S]) -> Self {
        TildeRealization { spec, us: us.to_vec() }
    }

    pub fn apply(&self, i: i32, k: i32, x: &S, v: &[S]) -> Result<Vec<S>> {
        let sign = if i > 0 { Sign::Plus } else { Sign::Minus };
        if (k > 0) != (i > 0) {
            return Err(BetheError::Invalid(format!("T̃^{i}_{k} mixes sign sectors")));
        }
        let t = hatted_monodromy(self.spec, sign, x, &self.us)?;
        Ok(t.apply_entry((i.unsigned_abs() - 1) as usize, (k.unsigned_abs() - 1) as usize, v))
    }

    /// T̃^2_1(v_1) ... T̃^2_1(v_P) applied to `v`.
    pub fn raise_plus(&self, vs: &[S], v: &[S]) -> Result<Vec<S>> {
        let mut out = v.to_vec();
        for x in vs.iter().rev() {
            out = self.apply(2, 1, x, &out)?;
        }
        Ok(out)
    }

    /// T̃^{-1}_{-2}(w_1) ... T̃^{-1}_{-2}(w_Q) applied to `v`.
    pub fn raise_minus(&self, ws: &[S], v: &[S]) -> Result<Vec<S>> {
        let mut out = v.to_vec();
        for x in ws.iter().rev() {
            out = self.apply(-1, -2, x, &out)?;
        }
        Ok(out)
    }

    /// |v̄; w̄⟩ = T̃^2_1(v̄) T̃^{-1}_{-2}(w̄) Ω̂
    pub fn state(&self, vac: &VacuumData, vs: &[S], ws: &[S]) -> Result<Vec<S>> {
        let omega = reduced_vacuum_vector(self.spec, vac, self.us.len());
        let m = self.raise_minus(ws, &omega)?;
        self.raise_plus(vs, &m)
    }
}

/// A root configuration (u⃗; v̄; w̄) with distinct entries inside each set.
#[derive(Clone, Debug, PartialEq)]
pub struct Sp4Config<S> {
    pub us: Vec<S>,
    pub vs: Vec<S>,
    pub ws: Vec<S>,
}

impl<S: Scalar> Sp4Config<S> {
    pub fn new(us: Vec<S>, vs: Vec<S>, ws: Vec<S>) -> Result<Self> {
        Ok(Sp4Config {
            us: RootSet::new(us)?.into_vec(),
            vs: RootSet::new(vs)?.into_vec(),
            ws: RootSet::new(ws)?.into_vec(),
        })
    }

    pub fn counts(&self) -> (usize, usize, usize) {
        (self.us.len(), self.vs.len(), self.ws.len())
    }
}

/// Φ(u⃗; v̄; w̄) = T̂^2_1(v̄; u⃗) T̂^{-1}_{-2}(w̄; u⃗) Ω̂ on Ŵ₀.
pub fn tilde_bethe_vector<S: Scalar>(spec: &ChainSpec<S>, vac: &VacuumData, cfg: &Sp4Config<S>) -> Result<Vec<S>> {
    require_sp4(spec, vac)?;
    TildeRealization::new(spec, &cfg.us).state(vac, &cfg.vs, &cfg.ws)
}

/// E^(+) = μ₁ F(x,v̄) F(x-2,w̄) + μ₂ F(v̄,x) F(w̄,x-2)
/// E^(-) = μ₋₁ F(v̄,x+2) F(w̄,x) + μ₋₂ F(x+2,v̄) F(x,w̄)
pub fn tilde_eigenvalues<S: Scalar>(
    spec: &ChainSpec<S>,
    vac: &VacuumData,
    cfg: &Sp4Config<S>,
    x: &S,
) -> Result<(S, S)> {
    let mu = reduced_weights(spec, vac, &cfg.us, x)?;
    Ok(tilde_eigenvalues_from(&mu, x, &cfg.vs, &cfg.ws)?)
}

fn tilde_eigenvalues_from<S: Scalar>(mu: &Weights4<S>, x: &S, vs: &[S], ws: &[S]) -> Result<(S, S)> {
    let xm2 = shift(x, -2);
    let xp2 = shift(x, 2);
    let plus = mu.p1.clone() * f_right(x, vs)? * f_right(&xm2, ws)?
        + mu.p2.clone() * f_left(vs, x)? * f_left(ws, &xm2)?;
    let minus = mu.m1.clone() * f_left(vs, &xp2)? * f_left(ws, x)?
        + mu.m2.clone() * f_right(&xp2, vs)? * f_right(x, ws)?;
    Ok((plus, minus))
}

/// The two condition families of the tilde ansatz written with the reduced weights μ:
/// μ₁(v_r) F(v_r,v̄_r) F(v_r-2,w̄) = μ₂(v_r) F(v̄_r,v_r) F(w̄,v_r-2)
/// μ₋₁(w_s) F(v̄,w_s+2) F(w̄_s,w_s) = μ₋₂(w_s) F(w_s+2,v̄) F(w_s,w̄_s)
pub fn tilde_residuals<S: Scalar>(
    spec: &ChainSpec<S>,
    vac: &VacuumData,
    cfg: &Sp4Config<S>,
) -> Result<(Vec<Condition<S>>, Vec<Condition<S>>)> {
    let (vs, ws) = (&cfg.vs, &cfg.ws);
    let mut fam_v = Vec::new();
    for (r, v) in vs.iter().enumerate() {
        let rest = without(vs, r);
        let mu = reduced_weights(spec, vac, &cfg.us, v)?;
        let vm2 = shift(v, -2);
        fam_v.push(Condition {
            lhs: mu.p1 * f_right(v, &rest)? * f_right(&vm2, ws)?,
            rhs: mu.p2 * f_left(&rest, v)? * f_left(ws, &vm2)?,
        });
    }
    let mut fam_w = Vec::new();
    for (s, w) in ws.iter().enumerate() {
        let rest = without(ws, s);
        let mu = reduced_weights(spec, vac, &cfg.us, w)?;
        let wp2 = shift(w, 2);
        fam_w.push(Condition {
            lhs: mu.m1 * f_left(vs, &wp2)? * f_left(&rest, w)?,
            rhs: mu.m2 * f_right(&wp2, vs)? * f_right(w, &rest)?,
        });
    }
    Ok((fam_v, fam_w))
}

/// The final Bethe vector ⟨B₁..N(u⃗), Φ(u⃗; v̄; w̄)⟩.
pub fn sp4_vector<S: Scalar>(spec: &ChainSpec<S>, vac: &VacuumData, cfg: &Sp4Config<S>) -> Result<Vec<S>> {
    let phi = tilde_bethe_vector(spec, vac, cfg)?;
    nonzero(BChain::ordered(spec, &cfg.us)?.pair(&phi))
}

/// E(x) = λ₁F(ū,x)F(ū,x-1)F(x,v̄)F(x-2,w̄) + λ₂F(v̄,x)F(w̄,x-2)
///      + λ₋₁F(x,ū)F(x+1,ū)F(v̄,x+2)F(w̄,x) + λ₋₂F(x+2,v̄)F(x,w̄)
pub fn sp4_eigenvalue<S: Scalar>(spec: &ChainSpec<S>, vac: &VacuumData, cfg: &Sp4Config<S>, x: &S) -> Result<S> {
    let l = sp4_weights(spec, vac, x)?;
    let (us, vs, ws) = (&cfg.us, &cfg.vs, &cfg.ws);
    let (xm1, xm2, xp1, xp2) = (shift(x, -1), shift(x, -2), shift(x, 1), shift(x, 2));
    Ok(l.p1 * f_left(us, x)? * f_left(us, &xm1)? * f_right(x, vs)? * f_right(&xm2, ws)?
        + l.p2 * f_left(vs, x)? * f_left(ws, &xm2)?
        + l.m1 * f_right(x, us)? * f_right(&xp1, us)? * f_left(vs, &xp2)? * f_left(ws, x)?
        + l.m2 * f_right(&xp2, vs)? * f_right(x, ws)?)
}

/// The three condition families of the final ansatz, one condition per root.
#[derive(Clone, Debug)]
pub struct Sp4Residuals<S> {
    pub u: Vec<Condition<S>>,
    pub v: Vec<Condition<S>>,
    pub w: Vec<Condition<S>>,
}

impl<S: Scalar> Sp4Residuals<S> {
    pub fn all(&self) -> impl Iterator<Item = &Condition<S>> {
        self.u.iter().chain(&self.v).chain(&self.w)
    }
}

/// λ₁(u_k)F(ū_k,u_k-1)F(ū_k,u_k)F(u_k,v̄)F(u_k-2,w̄) = λ₋₁(u_k)F(u_k+1,ū_k)F(u_k,ū_k)F(v̄,u_k+2)F(w̄,u_k)
/// λ₁(v_r)F(ū,v_r-1)F(ū,v_r)F(v_r,v̄_r)F(v_r-2,w̄) = λ₂(v_r)F(v̄_r,v_r)F(w̄,v_r-2)
/// λ₋₁(w_s)F(w_s+1,ū)F(w_s,ū)F(v̄,w_s+2)F(w̄_s,w_s) = λ₋₂(w_s)F(w_s+2,v̄)F(w_s,w̄_s)
pub fn sp4_residuals<S: Scalar>(
    spec: &ChainSpec<S>,
    vac: &VacuumData,
    cfg: &Sp4Config<S>,
) -> Result<Sp4Residuals<S>> {
    let (us, vs, ws) = (&cfg.us, &cfg.vs, &cfg.ws);
    let mut fam_u = Vec::new();
    for (k, u) in us.iter().enumerate() {
        let rest = without(us, k);
        let l = sp4_weights(spec, vac, u)?;
        fam_u.push(Condition {
            lhs: l.p1
                * f_left(&rest, &shift(u, -1))?
                * f_left(&rest, u)?
                * f_right(u, vs)?
                * f_right(&shift(u, -2), ws)?,
            rhs: l.m1 * f_right(&shift(u, 1), &rest)? * f_right(u, &rest)? * f_left(vs, &shift(u, 2))? * f_left(ws, u)?,
        });
    }
    let mut fam_v = Vec::new();
    for (r, v) in vs.iter().enumerate() {
        let rest = without(vs, r);
        let l = sp4_weights(spec, vac, v)?;
        fam_v.push(Condition {
            lhs: l.p1 * f_left(us, &shift(v, -1))? * f_left(us, v)? * f_right(v, &rest)? * f_right(&shift(v, -2), ws)?,
            rhs: l.p2 * f_left(&rest, v)? * f_left(ws, &shift(v, -2))?,
        });
    }
    let mut fam_w = Vec::new();
    for (s, w) in ws.iter().enumerate() {
        let rest = without(ws, s);
        let l = sp4_weights(spec, vac, w)?;
        fam_w.push(Condition {
            lhs: l.m1 * f_right(&shift(w, 1), us)? * f_right(w, us)? * f_left(vs, &shift(w, 2))? * f_left(&rest, w)?,
            rhs: l.m2 * f_right(&shift(w, 2), vs)? * f_right(w, &rest)?,
        });
    }
    Ok(Sp4Residuals { u: fam_u, v: fam_v, w: fam_w })
}

/// Residuals of the two dressed exchange expansions
///
/// T^(+)(x)⟨B(u⃗), X⟩ = F(ū,x)⟨B(u⃗), T̂^(+)(x;u⃗)X⟩ - Σ_k g(u_k,x)F(ū_k,u_k)⟨B_k(x)B(ū_k), 𝕊_k 𝕋̂^(+)_k X⟩
/// T^(-)(x)⟨B(u⃗), X⟩ = F(x,ū)⟨B(u⃗), T̂^(-)(x;u⃗)X⟩ - Σ_k g(x,u_k)F(u_k,ū_k)⟨B_k(x)B(ū_k), 𝕊_k 𝕋̂^(-)_k X⟩
///
/// where 𝕋̂_k is the coincident dressed monodromy at u_k and 𝕊_k reorders the
/// dual and minus legs so that leg k comes first. Applied to every X in `spanning`
/// (vectors of Ŵ₀) and every auxiliary entry.
pub fn b_exchange_residual<S: Scalar>(
    spec: &ChainSpec<S>,
    sign: Sign,
    x: &S,
    us: &[S],
    spanning: &[Vec<S>],
) -> Result<f64> {
    let n = us.len();
    let layout = HatLayout::new(0, n, spec.dim());
    let dims = layout.dims();
    let block = block_monodromy(spec, x)?;
    let t_block = AuxOperator { aux: 2, inner: spec.dim(), prod: Product::new(vec![block.sign(sign).clone()]) };
    let b_all = BChain::ordered(spec, us)?;
    let hat = hatted_monodromy(spec, sign, x, us)?;
    let lead = match sign {
        Sign::Plus => f_left(us, x)?,
        Sign::Minus => f_right(x, us)?,
    };
    struct Remainder<S> {
        coeff: S,
        coincident: AuxOperator<S>,
        reorder: Product<S>,
        chain: BChain<S>,
    }
    let mut rems = Vec::with_capacity(n);
    for (k, uk) in us.iter().enumerate() {
        let rest = without(us, k);
        let coeff = match sign {
            Sign::Plus => g(uk, x)? * f_left(&rest, uk)?,
            Sign::Minus => g(x, uk)? * f_right(uk, &rest)?,
        };
        let mut factors = Vec::new();
        for j in 0..k {
            factors.push(lift(&dual_pp(uk, &us[j])?, &[layout.dual(k), layout.dual(j)], &dims)?);
        }
        for j in 0..k {
            factors.push(lift(&block_r(Sign::Minus, Sign::Minus, &us[j], uk)?, &[layout.minus(j), layout.minus(k)], &dims)?);
        }
        let mut order = vec![k];
        order.extend((0..n).filter(|&j| j != k));
        let mut args = vec![x.clone()];
        args.extend(rest);
        rems.push(Remainder {
            coeff,
            coincident: hatted_monodromy_coincident(spec, sign, us, k)?,
            reorder: Product::new(factors),
            chain: BChain::new(spec, &args, &order)?,
        });
    }
    let mut worst: f64 = 0.0;
    for xv in spanning {
        let paired = b_all.pair(xv);
        for a in 0..2 {
            for b in 0..2 {
                let lhs = t_block.apply_entry(a, b, &paired);
                let mut rhs = vec_scale(&b_all.pair(&hat.apply_entry(a, b, xv)), &lead);
                for rem in &rems {
                    let moved = rem.reorder.apply(&rem.coincident.apply_entry(a, b, xv));
                    rhs = vec_sub(&rhs, &vec_scale(&rem.chain.pair(&moved), &rem.coeff));
                }
                worst = worst.max(vec_residual(&lhs, &rhs));
            }
        }
    }
    Ok(worst)
}

/// Residual of ⟨B₁(x)B₂(y), X⟩ = ⟨B₂(y)B₁(x), (R*)^(+,+)_{2*,1*}(y,x) R^(-,-)_{1,2}(x,y) X⟩
/// over the given vectors X of the N = 2 dressed space.
pub fn b_pair_exchange_residual<S: Scalar>(spec: &ChainSpec<S>, x: &S, y: &S, vectors: &[Vec<S>]) -> Result<f64> {
    let layout = HatLayout::new(0, 2, spec.dim());
    let dims = layout.dims();
    let lhs_chain = BChain::new(spec, &[x.clone(), y.clone()], &[0, 1])?;
    let rhs_chain = BChain::new(spec, &[y.clone(), x.clone()], &[1, 0])?;
    let ops = Product::new(vec![
        lift(&dual_pp(y, x)?, &[layout.dual(1), layout.dual(0)], &dims)?,
        lift(&block_r(Sign::Minus, Sign::Minus, x, y)?, &[layout.minus(0), layout.minus(1)], &dims)?,
    ]);
    let mut worst: f64 = 0.0;
    for v in vectors {
        worst = worst.max(vec_residual(&lhs_chain.pair(v), &rhs_chain.pair(&ops.apply(v))));
    }
    Ok(worst)
}

fn lift3<S: Scalar>(m: &Op<S>, legs: [usize; 2]) -> Result<Op<S>> {
    lift(m, &legs, &[2, 2, 2])
}

fn prod3<S: Scalar>(ops: &[Op<S>]) -> Op<S> {
    ops.iter().fold(Op::identity(8), |acc, o| acc.mul(o))
}

/// The four dressing identities on leg triples (aux, 1, 2) that drive the
/// reordering of remainder terms, at distinct points u1, u2:
///
/// (R*)_{2,1}(u2,u1) R̂^(+)_{0,1}(u2,u1) ℝ̂^(+)_{0,2} = ℝ̂^(+)_{0,2} R̂^(+)_{0,1}(u2,u1) (R*)_{2,1}(u2,u1)
/// R^(-,-)_{1,2}(u1,u2) ℝ^(+)_{0,2} R^(+,-)_{0,1}(u2,u1) = R^(+,-)_{0,1}(u2,u1) ℝ^(+)_{0,2} R^(-,-)_{1,2}(u1,u2)
/// and the same two with the minus-sign dressings.
pub fn dressing_identity_residuals<S: Scalar>(u1: &S, u2: &S) -> Result<[f64; 4]> {
    let rs = lift3(&dual_pp(u2, u1)?, [2, 1])?;
    let rmm = lift3(&block_r(Sign::Minus, Sign::Minus, u1, u2)?, [1, 2])?;
    let mut out = [0.0; 4];
    for (slot, sign) in Sign::both().into_iter().enumerate() {
        let hat = lift3(&hatted_r(sign, u2, u1)?, [0, 1])?;
        let hat_c = lift3(&hatted_r_coincident(sign), [0, 2])?;
        out[2 * slot] = crate::operator::op_residual(
            &prod3(&[rs.clone(), hat.clone(), hat_c.clone()]),
            &prod3(&[hat_c, hat, rs.clone()]),
        );
        let leg = lift3(&minus_leg_r(sign, u2, u1)?, [0, 1])?;
        let leg_c = lift3(&minus_leg_r_coincident(sign), [0, 2])?;
        out[2 * slot + 1] = crate::operator::op_residual(
            &prod3(&[rmm.clone(), leg_c.clone(), leg.clone()]),
            &prod3(&[leg, leg_c, rmm.clone()]),
        );
    }
    Ok(out)
}

/// The two three-term identities that close the induction for the remainder coefficients.
pub fn final_dressing_residuals<S: Scalar>(x: &S, u1: &S, uk: &S) -> Result<[f64; 2]> {
    use crate::operator::op_residual;
    let pm_c = lift3(&minus_leg_r_coincident(Sign::Plus), [0, 2])?;
    let lhs1 = prod3(&[
        lift3(&block_r(Sign::Minus, Sign::Minus, u1, x)?, [1, 2])?,
        pm_c.clone(),
        lift3(&minus_leg_r(Sign::Plus, x, u1)?, [0, 1])?,
    ])
    .scale(&(g(uk, x)? * f(u1, x)?))
    .sub(
        &prod3(&[lift3(&minus_leg_r_coincident(Sign::Minus), [1, 2])?, pm_c.clone(), lift3(&minus_leg_r_coincident(Sign::Plus), [0, 1])?])
            .scale(&(g(u1, x)? * g(uk, u1)?)),
    );
    let rhs1 = prod3(&[
        lift3(&block_r(Sign::Minus, Sign::Minus, u1, uk)?, [1, 2])?,
        pm_c,
        lift3(&minus_leg_r(Sign::Plus, uk, u1)?, [0, 1])?,
    ])
    .scale(&(g(uk, x)? * f(u1, uk)?));

    let mp_c2 = lift3(&hatted_r_coincident(Sign::Minus), [0, 2])?;
    let lhs2 = prod3(&[lift3(&dual_pp(x, u1)?, [2, 1])?, lift3(&hatted_r(Sign::Minus, x, u1)?, [0, 1])?, mp_c2.clone()])
        .scale(&(g(x, uk)? * f(x, u1)?))
        .sub(
            &prod3(&[lift3(&flip(2), [2, 1])?, lift3(&hatted_r_coincident(Sign::Minus), [0, 1])?, mp_c2.clone()])
                .scale(&(g(x, u1)? * g(u1, uk)?)),
        );
    let rhs2 = prod3(&[lift3(&dual_pp(uk, u1)?, [2, 1])?, lift3(&hatted_r(Sign::Minus, uk, u1)?, [0, 1])?, mp_c2])
        .scale(&(g(x, uk)? * f(uk, u1)?));
    Ok([op_residual(&lhs1, &rhs1), op_residual(&lhs2, &rhs2)])
}

/// R^(ε,ε')_{1,2}(x,y) R̂^(ε)_{1,3*}(x,z) R̂^(ε')_{2,3*}(y,z) = R̂^(ε')_{2,3*}(y,z) R̂^(ε)_{1,3*}(x,z) R^(ε,ε')_{1,2}(x,y)
pub fn mixed_ybe_residual<S: Scalar>(signs: (Sign, Sign), x: &S, y: &S, z: &S) -> Result<f64> {
    let r = lift3(&block_r(signs.0, signs.1, x, y)?, [0, 1])?;
    let h1 = lift3(&hatted_r(signs.0, x, z)?, [0, 2])?;
    let h2 = lift3(&hatted_r(signs.1, y, z)?, [1, 2])?;
    Ok(crate::operator::op_residual(&prod3(&[r.clone(), h1.clone(), h2.clone()]), &prod3(&[h2, h1, r])))
}

fn vecs_residual<S: Scalar>(pairs: &[(Vec<S>, Vec<S>)]) -> f64 {
    pairs.iter().map(|(l, r)| vec_residual(l, r)).fold(0.0, f64::max)
}

fn lin<S: Scalar>(terms: Vec<(S, Vec<S>)>, n: usize) -> Vec<S> {
    let mut acc = vec![S::zero(); n];
    for (c, v) in terms {
        vec_add_assign(&mut acc, &vec_scale(&v, &c));
    }
    acc
}

fn with_point<S: Scalar>(set: &[S], k: usize, x: &S) -> Vec<S> {
    let mut v = without(set, k);
    v.push(x.clone());
    v
}

/// The eight exchange relations of the tilde generators with the creation products
/// T̃^2_1(v̄) and T̃^{-1}_{-2}(w̄), including the cross relations with shifted
/// arguments x ∓ 2, each applied to every vector of `spanning`. Returns one
/// residual per relation.
pub fn tilde_exchange_residuals<S: Scalar>(
    real: &TildeRealization<S>,
    x: &S,
    vs: &[S],
    ws: &[S],
    spanning: &[Vec<S>],
) -> Result<[f64; 8]> {
    let mut out = [0.0f64; 8];
    let xm2 = shift(x, -2);
    let xp2 = shift(x, 2);
    for w0 in spanning {
        let n = w0.len();
        let t = |i: i32, k: i32, at: &S, v: &[S]| real.apply(i, k, at, v);
        let t21 = |set: &[S], v: &[S]| real.raise_plus(set, v);
        let t12m = |set: &[S], v: &[S]| real.raise_minus(set, v);
        let mut rel: Vec<(Vec<S>, Vec<S>)> = Vec::with_capacity(8);

        // T̃^1_1(x) T̃^2_1(v̄)
        let lhs = t(1, 1, x, &t21(vs, w0)?)?;
        let mut terms = vec![(f_right(x, vs)?, t21(vs, &t(1, 1, x, w0)?)?)];
        for (r, v) in vs.iter().enumerate() {
            let c = -(g(x, v)? * f_right(v, &without(vs, r))?);
            terms.push((c, t21(&with_point(vs, r, x), &t(1, 1, v, w0)?)?));
        }
        rel.push((lhs, lin(terms, n)));

        // T̃^2_2(x) T̃^2_1(v̄)
        let lhs = t(2, 2, x, &t21(vs, w0)?)?;
        let mut terms = vec![(f_left(vs, x)?, t21(vs, &t(2, 2, x, w0)?)?)];
        for (r, v) in vs.iter().enumerate() {
            let c = -(g(v, x)? * f_left(&without(vs, r), v)?);
            terms.push((c, t21(&with_point(vs, r, x), &t(2, 2, v, w0)?)?));
        }
        rel.push((lhs, lin(terms, n)));

        // T̃^{-1}_{-1}(x) T̃^{-1}_{-2}(w̄)
        let lhs = t(-1, -1, x, &t12m(ws, w0)?)?;
        let mut terms = vec![(f_left(ws, x)?, t12m(ws, &t(-1, -1, x, w0)?)?)];
        for (s, w) in ws.iter().enumerate() {
            let c = -(g(w, x)? * f_left(&without(ws, s), w)?);
            terms.push((c, t12m(&with_point(ws, s, x), &t(-1, -1, w, w0)?)?));
        }
        rel.push((lhs, lin(terms, n)));

        // T̃^{-2}_{-2}(x) T̃^{-1}_{-2}(w̄)
        let lhs = t(-2, -2, x, &t12m(ws, w0)?)?;
        let mut terms = vec![(f_right(x, ws)?, t12m(ws, &t(-2, -2, x, w0)?)?)];
        for (s, w) in ws.iter().enumerate() {
            let c = -(g(x, w)? * f_right(w, &without(ws, s))?);
            terms.push((c, t12m(&with_point(ws, s, x), &t(-2, -2, w, w0)?)?));
        }
        rel.push((lhs, lin(terms, n)));

        // T̃^1_1(x) T̃^{-1}_{-2}(w̄)
        let lhs = t(1, 1, x, &t12m(ws, w0)?)?;
        let mut terms = vec![(f_right(&xm2, ws)?, t12m(ws, &t(1, 1, x, w0)?)?)];
        for (s, w) in ws.iter().enumerate() {
            let rest = without(ws, s);
            let c = g(&xm2, w)? * f_right(w, &rest)?;
            terms.push((c, t(2, 1, x, &t12m(&rest, &t(-2, -2, w, w0)?)?)?));
        }
        rel.push((lhs, lin(terms, n)));

        // T̃^2_2(x) T̃^{-1}_{-2}(w̄)
        let lhs = t(2, 2, x, &t12m(ws, w0)?)?;
        let mut terms = vec![(f_left(ws, &xm2)?, t12m(ws, &t(2, 2, x, w0)?)?)];
        for (s, w) in ws.iter().enumerate() {
            let rest = without(ws, s);
            let c = g(w, &xm2)? * f_left(&rest, w)?;
            terms.push((c, t(2, 1, x, &t12m(&rest, &t(-1, -1, w, w0)?)?)?));
        }
        rel.push((lhs, lin(terms, n)));

        // T̃^{-1}_{-1}(x) T̃^2_1(v̄)
        let lhs = t(-1, -1, x, &t21(vs, w0)?)?;
        let mut terms = vec![(f_left(vs, &xp2)?, t21(vs, &t(-1, -1, x, w0)?)?)];
        for (r, v) in vs.iter().enumerate() {
            let rest = without(vs, r);
            let c = g(v, &xp2)? * f_left(&rest, v)?;
            terms.push((c, t21(&rest, &t(-1, -2, x, &t(2, 2, v, w0)?)?)?));
        }
        rel.push((lhs, lin(terms, n)));

        // T̃^{-2}_{-2}(x) T̃^2_1(v̄)
        let lhs = t(-2, -2, x, &t21(vs, w0)?)?;
        let mut terms = vec![(f_right(&xp2, vs)?, t21(vs, &t(-2, -2, x, w0)?)?)];
        for (r, v) in vs.iter().enumerate() {
            let rest = without(vs, r);
            let c = g(&xp2, v)? * f_right(v, &rest)?;
            terms.push((c, t21(&rest, &t(-1, -2, x, &t(1, 1, v, w0)?)?)?));
        }
        rel.push((lhs, lin(terms, n)));

        for (slot, pair) in rel.into_iter().enumerate() {
            out[slot] = out[slot].max(vecs_residual(&[pair]));
        }
    }
    Ok(out)
}

/// The four off-shell expansions of T̃^{±i}_{±i}(x)|v̄; w̄⟩ in states with one root
/// moved to x, using the reduced weights μ. Returns residuals for labels 1, 2, -1, -2.
pub fn tilde_offshell_residuals<S: Scalar>(
    spec: &ChainSpec<S>,
    vac: &VacuumData,
    us: &[S],
    x: &S,
    vs: &[S],
    ws: &[S],
) -> Result<[f64; 4]> {
    require_sp4(spec, vac)?;
    let real = TildeRealization::new(spec, us);
    let state = |v: &[S], w: &[S]| real.state(vac, v, w);
    let mu = |p: &S| reduced_weights(spec, vac, us, p);
    let base = state(vs, ws)?;
    let n = base.len();
    let (xm2, xp2) = (shift(x, -2), shift(x, 2));
    let mux = mu(x)?;
    let mut out = [0.0; 4];

    // shared pieces: v-removal and w-removal states and their coefficients
    let v_terms = |coef: &dyn Fn(&S, usize) -> Result<S>, to_w: bool| -> Result<Vec<(S, Vec<S>)>> {
        let mut t = Vec::new();
        for (r, v) in vs.iter().enumerate() {
            let rest = without(vs, r);
            let st = if to_w {
                let mut w2 = ws.to_vec();
                w2.push(x.clone());
                state(&rest, &w2)?
            } else {
                state(&with_point(vs, r, x), ws)?
            };
            t.push((coef(v, r)?, st));
        }
        Ok(t)
    };
    let w_terms = |coef: &dyn Fn(&S, usize) -> Result<S>, to_v: bool| -> Result<Vec<(S, Vec<S>)>> {
        let mut t = Vec::new();
        for (s, w) in ws.iter().enumerate() {
            let rest = without(ws, s);
            let st = if to_v {
                let mut v2 = vs.to_vec();
                v2.push(x.clone());
                state(&v2, &rest)?
            } else {
                state(vs, &with_point(ws, s, x))?
            };
            t.push((coef(w, s)?, st));
        }
        Ok(t)
    };

    // T̃^1_1
    let mut terms = vec![(mux.p1.clone() * f_right(x, vs)? * f_right(&xm2, ws)?, base.clone())];
    terms.extend(v_terms(
        &|v, r| Ok(-(mu(v)?.p1 * g(x, v)? * f_right(v, &without(vs, r))? * f_right(&shift(v, -2), ws)?)),
        false,
    )?);
    terms.extend(w_terms(
        &|w, s| Ok(mu(w)?.m2 * g(&xm2, w)? * f_right(&shift(w, 2), vs)? * f_right(w, &without(ws, s))?),
        true,
    )?);
    out[0] = vec_residual(&real.apply(1, 1, x, &base)?, &lin(terms, n));

    // T̃^2_2
    let mut terms = vec![(mux.p2.clone() * f_left(vs, x)? * f_left(ws, &xm2)?, base.clone())];
    terms.extend(v_terms(
        &|v, r| Ok(-(mu(v)?.p2 * g(v, x)? * f_left(&without(vs, r), v)? * f_left(ws, &shift(v, -2))?)),
        false,
    )?);
    terms.extend(w_terms(
        &|w, s| Ok(mu(w)?.m1 * g(w, &xm2)? * f_left(vs, &shift(w, 2))? * f_left(&without(ws, s), w)?),
        true,
    )?);
    out[1] = vec_residual(&real.apply(2, 2, x, &base)?, &lin(terms, n));

    // T̃^{-1}_{-1}
    let mut terms = vec![(mux.m1.clone() * f_left(vs, &xp2)? * f_left(ws, x)?, base.clone())];
    terms.extend(v_terms(
        &|v, r| Ok(mu(v)?.p2 * g(v, &xp2)? * f_left(&without(vs, r), v)? * f_left(ws, &shift(v, -2))?),
        true,
    )?);
    terms.extend(w_terms(
        &|w, s| Ok(-(mu(w)?.m1 * g(w, x)? * f_left(vs, &shift(w, 2))? * f_left(&without(ws, s), w)?)),
        false,
    )?);
    out[2] = vec_residual(&real.apply(-1, -1, x, &base)?, &lin(terms, n));

    // T̃^{-2}_{-2}
    let mut terms = vec![(mux.m2.clone() * f_right(&xp2, vs)? * f_right(x, ws)?, base.clone())];
    terms.extend(v_terms(
        &|v, r| Ok(mu(v)?.p1 * g(&xp2, v)? * f_right(v, &without(vs, r))? * f_right(&shift(v, -2), ws)?),
        true,
    )?);
    terms.extend(w_terms(
        &|w, s| Ok(-(mu(w)?.m2 * g(x, w)? * f_right(&shift(w, 2), vs)? * f_right(w, &without(ws, s))?)),
        false,
    )?);
    out[3] = vec_residual(&real.apply(-2, -2, x, &base)?, &lin(terms, n));
    Ok(out)
}

/// Commutation checks of the tilde generators on the given vectors:
/// T̃^i_k(x)T̃^i_k(y) for (i,k) ∈ {(1,2),(2,1),(1,1),(-1,-2),(-2,-1)},
/// T̃^i_k(x)T̃^{-k}_{-i}(y) for i ≠ k, and the traces H̃^(±).
pub fn tilde_commutation_residual<S: Scalar>(
    real: &TildeRealization<S>,
    x: &S,
    y: &S,
    spanning: &[Vec<S>],
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    let comm = |a: &dyn Fn(&S, &[S]) -> Result<Vec<S>>, b: &dyn Fn(&S, &[S]) -> Result<Vec<S>>, v: &[S]| -> Result<f64> {
        let lhs = a(x, &b(y, v)?)?;
        let rhs = b(y, &a(x, v)?)?;
        Ok(vec_residual(&lhs, &rhs))
    };
    let gen = |i: i32, k: i32| move |p: &S, v: &[S]| real.apply(i, k, p, v);
    let trace = |s: i32| {
        move |p: &S, v: &[S]| -> Result<Vec<S>> {
            let mut acc = real.apply(s, s, p, v)?;
            vec_add_assign(&mut acc, &real.apply(2 * s, 2 * s, p, v)?);
            Ok(acc)
        }
    };
    for v in spanning {
        for (i, k) in [(1, 2), (2, 1), (1, 1), (-1, -2), (-2, -1)] {
            worst = worst.max(comm(&gen(i, k), &gen(i, k), v)?);
        }
        for (i, k) in [(1, 2), (2, 1)] {
            worst = worst.max(comm(&gen(i, k), &gen(-k, -i), v)?);
        }
        for (a, b) in [(1, 1), (-1, -1), (1, -1)] {
            worst = worst.max(comm(&trace(a), &trace(b), v)?);
        }
    }
    Ok(worst)
}

/// Outcome of the two-step reduction check for the sp(4) ansatz.
#[derive(Clone, Debug)]
pub struct Sp4ReductionCheck {
    /// worst relative residual of Ĥ^(±) Φ = E^(±) Φ over the samples
    pub tilde_residual: f64,
    /// worst relative residual of H ψ = E ψ over the samples
    pub full_residual: f64,
    /// worst relative gap between F(ū,x)E^(+) + F(x,ū)E^(-) and the closed form of E(x)
    pub eigenvalue_gap: f64,
}

/// Check that Φ is a common eigenvector of the dressed transfer matrices and that
/// ⟨B, Φ⟩ is an eigenvector of H(x) with eigenvalue F(ū,x)E^(+) + F(x,ū)E^(-).
pub fn sp4_reduction_check<S: Scalar>(
    spec: &ChainSpec<S>,
    vac: &VacuumData,
    cfg: &Sp4Config<S>,
    samples: &[S],
) -> Result<Sp4ReductionCheck> {
    let phi = tilde_bethe_vector(spec, vac, cfg)?;
    let psi = nonzero(BChain::ordered(spec, &cfg.us)?.pair(&phi))?;
    let phi_norm = vec_norm(&phi).max(1e-300);
    let mut tilde_residual: f64 = 0.0;
    let mut full_residual: f64 = 0.0;
    let mut eigenvalue_gap: f64 = 0.0;
    for x in samples {
        let (ep, em) = tilde_eigenvalues(spec, vac, cfg, x)?;
        for (sign, e) in [(Sign::Plus, &ep), (Sign::Minus, &em)] {
            let t = hatted_monodromy(spec, sign, x, &cfg.us)?;
            let diff = vec_sub(&t.apply_trace(&phi), &vec_scale(&phi, e));
            tilde_residual = tilde_residual.max(vec_norm(&diff) / phi_norm);
        }
        let combined = f_left(&cfg.us, x)? * ep + f_right(x, &cfg.us)? * em;
        let closed = sp4_eigenvalue(spec, vac, cfg, x)?;
        eigenvalue_gap = eigenvalue_gap.max(crate::scalars::relative_gap(&combined, &closed).1);
        let h = crate::chain::transfer(spec, x)?;
        let diff = vec_sub(&h.apply(&psi), &vec_scale(&psi, &closed));
        full_residual = full_residual.max(vec_norm(&diff) / vec_norm(&psi));
    }
    Ok(Sp4ReductionCheck { tilde_residual, full_residual, eigenvalue_gap })
}
