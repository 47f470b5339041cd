//! Check registry and suite runner. Every identity check is registered on both
//! backends with the same rational sample points; end-to-end solver checks run
//! on floats only.

use std::time::Instant;

use globset::{Glob, GlobMatcher};
use num_complex::Complex64 as C64;
use num_rational::BigRational;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bethe_solver::{default_samples, negative_control, solve, verify_solution, SolveOptions, SolveProblem, Verdict};
use crate::chain::{check_commuting, check_rtt, detect_vacuum, ChainSpec, Model};
use crate::error::{BetheError, Result};
use crate::nested_gl::{gl2_exchange_residuals, gl3_hatted_rtt_residual, gl3_reduction_check, gl3_vacuum_residuals};
use crate::nested_sp4::*;
use crate::rmatrix::{check_unitarity, check_ybe, RKind, Sign};
use crate::scalars::{random_ratio, summation_identity_residuals, Scalar};

pub const SCHEMA: u32 = 1;
/// Exact checks on spaces larger than this are skipped.
pub const EXACT_CAPACITY: usize = 4096;
/// Bound for float residuals of identities that hold exactly.
pub const FLOAT_IDENTITY_BOUND: f64 = 1e-12;
const DRAW_ATTEMPTS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Exact,
    Float,
}

impl Backend {
    pub fn name(self) -> &'static str {
        match self {
            Backend::Exact => "exact",
            Backend::Float => "float",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    AtMost(f64),
    /// negative controls: the residual has to be large
    AtLeast(f64),
}

impl Bound {
    pub fn admits(self, r: f64) -> bool {
        match self {
            Bound::AtMost(b) => r <= b,
            Bound::AtLeast(b) => r >= b,
        }
    }

    fn identity(backend: Backend) -> Self {
        match backend {
            Backend::Exact => Bound::AtMost(0.0),
            Backend::Float => Bound::AtMost(FLOAT_IDENTITY_BOUND),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckCase {
    pub id: String,
    pub model: String,
    pub sizes: String,
    pub backend: Backend,
    pub seed: u64,
    pub status: Status,
    /// None when nothing could be measured (skip, error, null vector)
    pub residual: Option<f64>,
    pub bound: Bound,
    /// what the check asserts
    pub claim: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub runtime_ms: f64,
}

/// One measured value of a registered check.
#[derive(Clone, Debug)]
pub struct Measured {
    pub residual: f64,
    pub note: Option<String>,
}

impl Measured {
    fn plain(residual: f64) -> Self {
        Measured { residual, note: None }
    }
}

struct Part {
    suffix: &'static str,
    bound: Bound,
    claim: String,
}

type Runner = Box<dyn Fn(&mut ChaCha8Rng) -> Result<Vec<Measured>> + Send + Sync>;

struct CaseDef {
    base: String,
    model: &'static str,
    sizes: String,
    backend: Backend,
    /// dimension of the largest space the check multiplies on
    dim: usize,
    parts: Vec<Part>,
    run: Runner,
}

impl CaseDef {
    fn id(&self, part: &Part) -> String {
        if part.suffix.is_empty() {
            format!("{}.{}", self.base, self.backend.name())
        } else {
            format!("{}.{}.{}", self.base, part.suffix, self.backend.name())
        }
    }
}

/// FNV-1a, used to give every case its own stable seed.
fn fnv1a(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

fn worst(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, |acc, v| if v.is_nan() || acc.is_nan() { f64::NAN } else { acc.max(v) })
}

// ---- sampling -------------------------------------------------------------

type Ratio = (i64, i64);

fn draw(rng: &mut ChaCha8Rng) -> Ratio {
    random_ratio(rng, 12, 5)
}

/// `n` pairwise different rationals.
fn draw_distinct(rng: &mut ChaCha8Rng, n: usize) -> Vec<Ratio> {
    let mut out: Vec<Ratio> = Vec::with_capacity(n);
    while out.len() < n {
        let r = draw(rng);
        if out.iter().all(|o| o.0 * r.1 != r.0 * o.1) {
            out.push(r);
        }
    }
    out
}

fn lift<S: Scalar>(r: Ratio) -> S {
    S::from_ratio(r.0, r.1)
}

fn lift_all<S: Scalar>(rs: &[Ratio]) -> Vec<S> {
    rs.iter().map(|&r| lift(r)).collect()
}

/// Run `f` on fresh draws until it avoids every pole. Both backends see the
/// same draws, so they retry at the same places.
fn pole_free<T>(rng: &mut ChaCha8Rng, mut f: impl FnMut(&mut ChaCha8Rng) -> Result<T>) -> Result<T> {
    for _ in 0..DRAW_ATTEMPTS {
        match f(rng) {
            Err(BetheError::Pole(_)) => continue,
            other => return other,
        }
    }
    Err(BetheError::Numerical(format!("{DRAW_ATTEMPTS} consecutive draws hit poles")))
}

fn repeat(rng: &mut ChaCha8Rng, n: usize, mut f: impl FnMut(&mut ChaCha8Rng) -> Result<f64>) -> Result<Vec<Measured>> {
    let mut vals = Vec::with_capacity(n);
    for _ in 0..n {
        vals.push(pole_free(rng, &mut f)?);
    }
    Ok(vec![Measured::plain(worst(vals))])
}

fn sp4_chain<S: Scalar>(length: usize) -> Result<ChainSpec<S>> {
    ChainSpec::with_default_sites(Model::Sp4, length)
}

// ---- identity checks, generic over the backend -----------------------------

fn summation_check<S: Scalar>(rng: &mut ChaCha8Rng) -> Result<Vec<Measured>> {
    let mut vals = Vec::new();
    for i in 0..50 {
        let n = i % 7;
        vals.push(pole_free(rng, |rng| {
            let pts = draw_distinct(rng, n + 2);
            let all: Vec<S> = lift_all(&pts);
            let (r1, r2) = summation_identity_residuals(&all[2..], &all[0], &all[1])?;
            Ok(r1.max(r2))
        })?);
    }
    Ok(vec![Measured::plain(worst(vals))])
}

fn ybe_check<S: Scalar>(kind: RKind, rng: &mut ChaCha8Rng) -> Result<Vec<Measured>> {
    repeat(rng, 25, |rng| {
        let p: Vec<S> = lift_all(&draw_distinct(rng, 3));
        check_ybe(kind, &p[0], &p[1], &p[2])
    })
}

fn unitarity_check<S: Scalar>(kind: RKind, rng: &mut ChaCha8Rng) -> Result<Vec<Measured>> {
    repeat(rng, 25, |rng| {
        let p: Vec<S> = lift_all(&draw_distinct(rng, 2));
        check_unitarity(kind, &p[0], &p[1])
    })
}

fn rtt_check<S: Scalar>(model: Model, length: usize, commuting: bool, rng: &mut ChaCha8Rng) -> Result<Vec<Measured>> {
    let spec = ChainSpec::<S>::with_default_sites(model, length)?;
    repeat(rng, 10, |rng| {
        let p: Vec<S> = lift_all(&draw_distinct(rng, 2));
        if commuting {
            check_commuting(&spec, &p[0], &p[1])
        } else {
            check_rtt(&spec, &p[0], &p[1])
        }
    })
}

fn gl2_exchange_check<S: Scalar>(n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Measured>> {
    let spec = ChainSpec::<S>::with_default_sites(Model::Gl2, 2)?;
    repeat(rng, 5, |rng| {
        let p: Vec<S> = lift_all(&draw_distinct(rng, n + 1));
        let (a, b) = gl2_exchange_residuals(&spec, &p[0], &p[1..])?;
        Ok(a.max(b))
    })
}

fn gl3_vacuum_check<S: Scalar>(m: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Measured>> {
    let spec = ChainSpec::<S>::with_default_sites(Model::Gl3, 1)?;
    let vac = detect_vacuum(&spec)?;
    repeat(rng, 5, |rng| {
        let p: Vec<S> = lift_all(&draw_distinct(rng, m + 1));
        Ok(worst(gl3_vacuum_residuals(&spec, &vac, &p[0], &p[1..])?))
    })
}

fn gl3_hatted_rtt_check<S: Scalar>(rng: &mut ChaCha8Rng) -> Result<Vec<Measured>> {
    let spec = ChainSpec::<S>::with_default_sites(Model::Gl3, 1)?;
    repeat(rng, 3, |rng| {
        let p: Vec<S> = lift_all(&draw_distinct(rng, 3));
        gl3_hatted_rtt_residual(&spec, &p[0], &p[1], &p[2..])
    })
}

fn w0<S: Scalar>(spec: &ChainSpec<S>) -> Result<Vec<Vec<S>>> {
    let vac = detect_vacuum(spec)?;
    w0_spanning_set(spec, &vac)
}

fn lowering_check<S: Scalar>(rng: &mut ChaCha8Rng) -> Result<Vec<Measured>> {
    let spec = sp4_chain::<S>(2)?;
    let span = w0(&spec)?;
    repeat(rng, 5, |rng| lowering_on_w0(&spec, &span, &lift(draw(rng))))
}

fn sign_pairs() -> impl Iterator<Item = (Sign, Sign)> {
    Sign::both().into_iter().flat_map(|a| Sign::both().into_iter().map(move |b| (a, b)))
}

/// Block RTT on the dressed space; n = 0 is the undressed relation on W₀.
fn block_rtt_check<S: Scalar>(length: usize, n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Measured>> {
    let spec = sp4_chain::<S>(length)?;
    let span = hat_spanning_set(&w0(&spec)?, n);
    repeat(rng, 2, |rng| {
        let p: Vec<S> = lift_all(&draw_distinct(rng, n + 2));
        let mut vals = Vec::new();
        for signs in sign_pairs() {
            vals.push(block_rtt_residual(&spec, &p[2..], signs, &p[0], &p[1], &span)?);
        }
        Ok(worst(vals))
    })
}

fn b_exchange_check<S: Scalar>(n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Measured>> {
    let spec = sp4_chain::<S>(1)?;
    let span = hat_spanning_set(&w0(&spec)?, n);
    repeat(rng, 2, |rng| {
        let p: Vec<S> = lift_all(&draw_distinct(rng, n + 1));
        let mut vals = Vec::new();
        for s in Sign::both() {
            vals.push(b_exchange_residual(&spec, s, &p[0], &p[1..], &span)?);
        }
        Ok(worst(vals))
    })
}

fn b_pair_check<S: Scalar>(rng: &mut ChaCha8Rng) -> Result<Vec<Measured>> {
    let spec = sp4_chain::<S>(1)?;
    let span = hat_spanning_set(&w0(&spec)?, 2);
    repeat(rng, 2, |rng| {
        let p: Vec<S> = lift_all(&draw_distinct(rng, 2));
        b_pair_exchange_residual(&spec, &p[0], &p[1], &span)
    })
}

fn reduced_vacuum_check<S: Scalar>(n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Measured>> {
    let spec = sp4_chain::<S>(1)?;
    let vac = detect_vacuum(&spec)?;
    repeat(rng, 10, |rng| {
        let p: Vec<S> = lift_all(&draw_distinct(rng, n + 1));
        Ok(worst(reduced_vacuum_residuals(&spec, &vac, &p[1..], &p[0])?))
    })
}

fn dressing_check<S: Scalar>(rng: &mut ChaCha8Rng) -> Result<Vec<Measured>> {
    repeat(rng, 10, |rng| {
        let p: Vec<S> = lift_all(&draw_distinct(rng, 3));
        let a = dressing_identity_residuals(&p[1], &p[2])?;
        let b = final_dressing_residuals(&p[0], &p[1], &p[2])?;
        Ok(worst(a.into_iter().chain(b)))
    })
}

fn mixed_ybe_check<S: Scalar>(rng: &mut ChaCha8Rng) -> Result<Vec<Measured>> {
    repeat(rng, 5, |rng| {
        let p: Vec<S> = lift_all(&draw_distinct(rng, 3));
        let mut vals = Vec::new();
        for signs in sign_pairs() {
            vals.push(mixed_ybe_residual(signs, &p[0], &p[1], &p[2])?);
        }
        Ok(worst(vals))
    })
}

fn tilde_commutation_check<S: Scalar>(n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Measured>> {
    let spec = sp4_chain::<S>(1)?;
    let span = hat_spanning_set(&w0(&spec)?, n);
    repeat(rng, 3, |rng| {
        let p: Vec<S> = lift_all(&draw_distinct(rng, n + 2));
        let real = TildeRealization::new(&spec, &p[2..]);
        tilde_commutation_residual(&real, &p[0], &p[1], &span)
    })
}

fn tilde_exchange_check<S: Scalar>(pq: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Measured>> {
    let spec = sp4_chain::<S>(1)?;
    let span = hat_spanning_set(&w0(&spec)?, 1);
    repeat(rng, 2, |rng| {
        let p: Vec<S> = lift_all(&draw_distinct(rng, 2 + 2 * pq));
        let real = TildeRealization::new(&spec, &p[1..2]);
        let (vs, ws) = p[2..].split_at(pq);
        Ok(worst(tilde_exchange_residuals(&real, &p[0], vs, ws, &span)?))
    })
}

fn tilde_offshell_check<S: Scalar>(pq: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Measured>> {
    let spec = sp4_chain::<S>(1)?;
    let vac = detect_vacuum(&spec)?;
    repeat(rng, 2, |rng| {
        let p: Vec<S> = lift_all(&draw_distinct(rng, 2 + 2 * pq));
        let (vs, ws) = p[2..].split_at(pq);
        Ok(worst(tilde_offshell_residuals(&spec, &vac, &p[1..2], &p[0], vs, ws)?))
    })
}

// ---- end-to-end checks (float) ----------------------------------------------

/// An end-to-end Bethe problem: chain, root counts and optional seeds.
#[derive(Clone, Debug)]
pub struct EndToEnd {
    pub spec: ChainSpec<C64>,
    pub counts: (usize, usize, usize),
    pub guesses: Vec<Vec<C64>>,
    pub starts: usize,
}

pub const E2E_BETHE: f64 = 1e-11;
pub const E2E_SPECTRUM: f64 = 1e-7;
pub const E2E_NEGATIVE: f64 = 1e-4;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn real_chain(model: Model, zs: &[f64]) -> Result<ChainSpec<C64>> {
    ChainSpec::new(model, zs.iter().map(|&z| c(z, 0.0)).collect())
}

/// Solve, verify at three samples, then perturb the roots by 1e-3.
fn end_to_end(problem: &EndToEnd, seed: u64, with_tilde: bool, with_hatted: bool) -> Result<Vec<Measured>> {
    let opts = SolveOptions { starts: problem.starts, seed, ..SolveOptions::default() };
    let mut p = SolveProblem::new(problem.spec.clone(), problem.counts, opts)?;
    for g in &problem.guesses {
        p = p.with_guess(g.clone());
    }
    let found = solve(&p)?;
    let mut parts = Vec::new();
    let Some(best) = found.first() else {
        let note = Some(format!("no converged root configuration from {} starts", problem.starts + problem.guesses.len()));
        let n = 4 + usize::from(with_tilde) + usize::from(with_hatted);
        return Ok(vec![Measured { residual: f64::NAN, note }; n]);
    };
    let roots = serde_json::to_string(&best.roots.to_json()).unwrap_or_default();
    parts.push(Measured { residual: best.residual, note: Some(format!("roots {roots}")) });
    let samples = default_samples(3);
    let rep = verify_solution(&problem.spec, best, &samples)?;
    if rep.verdict == Verdict::NullVector {
        let note = Some(format!("roots {roots} satisfy the conditions but the Bethe vector is identically zero"));
        parts.push(Measured { residual: f64::NAN, note: note.clone() });
        parts.push(Measured { residual: f64::NAN, note: note.clone() });
        parts.push(Measured { residual: f64::NAN, note: Some("perturbed roots still give the zero vector".into()) });
    } else {
        parts.push(Measured::plain(rep.max_eigen_residual));
        parts.push(Measured::plain(rep.max_spectrum_gap));
        let neg = negative_control(&problem.spec, best, 1e-3, &samples)?;
        parts.push(Measured::plain(neg.max_eigen_residual));
    }
    let vac = detect_vacuum(&problem.spec)?;
    if with_tilde {
        let cfg = Sp4Config::new(best.roots.u.clone(), best.roots.v.clone(), best.roots.w.clone())?;
        let chk = sp4_reduction_check(&problem.spec, &vac, &cfg, &samples)?;
        parts.push(Measured::plain(chk.tilde_residual.max(chk.eigenvalue_gap)));
    }
    if with_hatted {
        let chk = gl3_reduction_check(&problem.spec, &vac, &best.roots.u, &best.roots.v, &samples)?;
        parts.push(Measured::plain(chk.hatted_residual.max(worst(chk.bridge))));
    }
    Ok(parts)
}

fn e2e_parts(eigen_bound: f64, ansatz: &str, with_tilde: bool, with_hatted: bool) -> Vec<Part> {
    let mut parts = vec![
        Part { suffix: "bethe", bound: Bound::AtMost(E2E_BETHE), claim: format!("the solver meets the {ansatz} Bethe conditions") },
        Part {
            suffix: "eigen",
            bound: Bound::AtMost(eigen_bound),
            claim: "the Bethe vector is an eigenvector of H(x) at 3 sample points".into(),
        },
        Part {
            suffix: "spectrum",
            bound: Bound::AtMost(E2E_SPECTRUM),
            claim: "the predicted eigenvalue matches dense diagonalization of H(x)".into(),
        },
        Part {
            suffix: "negative",
            bound: Bound::AtLeast(E2E_NEGATIVE),
            claim: "roots perturbed by 1e-3 give a large eigen-residual".into(),
        },
    ];
    if with_tilde {
        parts.push(Part {
            suffix: "tilde",
            bound: Bound::AtMost(1e-8),
            claim: "the nested vector is a common eigenvector of both dressed block transfer matrices".into(),
        });
    }
    if with_hatted {
        parts.push(Part {
            suffix: "hatted",
            bound: Bound::AtMost(1e-8),
            claim: "the nested vector is an eigenvector of the dressed transfer matrix".into(),
        });
    }
    parts
}

/// The end-to-end problems, keyed by case base id.
pub fn end_to_end_problems() -> Result<Vec<(&'static str, EndToEnd)>> {
    let gl2 = real_chain(Model::Gl2, &[0.0, 0.5])?;
    let gl3 = real_chain(Model::Gl3, &[0.0, 0.5])?;
    let gl3_long = real_chain(Model::Gl3, &[0.0, 0.5, 0.2])?;
    let sp4_one = real_chain(Model::Sp4, &[0.0])?;
    let sp4_two = real_chain(Model::Sp4, &[0.0, 0.5])?;
    let plain = |spec: &ChainSpec<C64>, counts| EndToEnd { spec: spec.clone(), counts, guesses: vec![], starts: 20 };
    let seeded = |spec: &ChainSpec<C64>, counts, guess: Vec<C64>| EndToEnd { spec: spec.clone(), counts, guesses: vec![guess], starts: 20 };
    Ok(vec![
        ("e2e.gl2.L2.N1", plain(&gl2, (1, 0, 0))),
        ("e2e.gl3.L2.M1", plain(&gl3, (0, 1, 0))),
        ("e2e.sp4.L1.N1", plain(&sp4_one, (1, 0, 0))),
        ("e2e.sp4.L2.N1P1", plain(&sp4_two, (1, 1, 0))),
        ("extra.gl3.L3.singlet", seeded(&gl3_long, (2, 1, 0), vec![c(-0.27, -0.25), c(-0.27, 0.25), c(-0.77, 0.01)])),
        ("extra.sp4.L2.singlet", seeded(&sp4_two, (1, 2, 0), vec![c(-1.25, 1e-4), c(0.27, 1e-4), c(-0.77, 0.0)])),
        ("extra.sp4.L2.P1", seeded(&sp4_two, (0, 1, 0), vec![c(-0.2, 0.01)])),
        ("extra.sp4.L2.Q1", seeded(&sp4_two, (0, 0, 1), vec![c(-2.2, 0.01)])),
    ])
}

// ---- registry ---------------------------------------------------------------

type Q = BigRational;

struct Registry(Vec<CaseDef>);

impl Registry {
    fn one(&mut self, base: String, model: &'static str, sizes: String, backend: Backend, dim: usize, claim: &str, run: Runner) {
        let part = Part { suffix: "", bound: Bound::identity(backend), claim: claim.to_string() };
        self.0.push(CaseDef { base, model, sizes, backend, dim, parts: vec![part], run });
    }

    /// Register an identity on both backends.
    fn both(
        &mut self,
        base: impl Into<String>,
        model: &'static str,
        sizes: impl Into<String>,
        dim: usize,
        claim: &str,
        exact: Runner,
        float: Runner,
    ) {
        let (base, sizes) = (base.into(), sizes.into());
        self.one(base.clone(), model, sizes.clone(), Backend::Exact, dim, claim, exact);
        self.one(base, model, sizes, Backend::Float, dim, claim, float);
    }
}

macro_rules! both {
    ($reg:expr, $base:expr, $model:expr, $sizes:expr, $dim:expr, $claim:expr, |$rng:ident| $f:ident ($($arg:expr),*)) => {
        $reg.both(
            $base,
            $model,
            $sizes,
            $dim,
            $claim,
            Box::new(move |$rng: &mut ChaCha8Rng| $f::<Q>($($arg,)* $rng)),
            Box::new(move |$rng: &mut ChaCha8Rng| $f::<C64>($($arg,)* $rng)),
        )
    };
}

fn registry() -> Result<Registry> {
    let mut reg = Registry(Vec::new());
    both!(reg, "scalars.summation_identity", "none", "|u| in 0..6, 50 instances", 1,
        "both partial-fraction summation identities over F and g", |rng| summation_check());

    for (name, kind) in [("gl2", RKind::Gl(2)), ("gl3", RKind::Gl(3)), ("sp4", RKind::Sp4), ("sp4_tilde", RKind::Sp4Tilde)] {
        let d = kind.leg_dims()[0];
        both!(reg, format!("rmatrix.{name}.ybe"), "rmatrix", "25 triples", d * d * d,
            "R12 R13 R23 = R23 R13 R12", |rng| ybe_check(kind));
        both!(reg, format!("rmatrix.{name}.unitarity"), "rmatrix", "25 pairs", d * d,
            "R12(x,y) R21(y,x) = 1", |rng| unitarity_check(kind));
    }

    for model in [Model::Gl2, Model::Gl3, Model::Sp4] {
        for length in [1usize, 2] {
            let d = model.local_dim();
            let dim = d * d * d.pow(length as u32);
            let sizes = format!("L={length}, 10 pairs");
            both!(reg, format!("chain.{}.L{length}.rtt", model.name()), model.name(), sizes.clone(), dim,
                "R T1(x) T2(y) = T2(y) T1(x) R on the chain", |rng| rtt_check(model, length, false));
            both!(reg, format!("chain.{}.L{length}.commuting", model.name()), model.name(), sizes, d.pow(length as u32),
                "[H(x), H(y)] = 0", |rng| rtt_check(model, length, true));
        }
    }

    for n in [1usize, 2] {
        both!(reg, format!("gl2.diagonal_exchange.N{n}.L2"), "gl2", format!("L=2, |u|={n}"), 4,
            "exchange of T11 and T22 with the product of creation operators", |rng| gl2_exchange_check(n));
    }
    for m in [0usize, 1, 2] {
        both!(reg, format!("gl3.dressed_vacuum.M{m}.L1"), "gl3", format!("L=1, M={m}"), 3 * 2usize.pow(m as u32),
            "dressed vacuum is annihilated by the lower entry with weights lambda1/F(v,x) and lambda2", |rng| gl3_vacuum_check(m));
    }
    both!(reg, "gl3.hatted_rtt.M1.L1", "gl3", "L=1, M=1", 4 * 2 * 3,
        "the dual-dressed 2x2 block satisfies the gl(2) RTT relation", |rng| gl3_hatted_rtt_check());

    both!(reg, "sp4.lowering_kills_w0.L2", "sp4", "L=2", 16,
        "T^{-i}_k annihilates every vector of W0", |rng| lowering_check());
    both!(reg, "sp4.block_rtt_on_w0.L2", "sp4", "L=2, 4 sign pairs", 4 * 16,
        "the four block RTT relations hold on W0", |rng| block_rtt_check(2, 0));
    let hatted_claim = "dressed block monodromies satisfy the block RTT relations on the dressed W0";
    for n in [1usize, 2] {
        both!(reg, format!("sp4.hatted_rtt.N{n}.L1"), "sp4", format!("L=1, N={n}, 4 sign pairs"), 4 * 4usize.pow(n as u32) * 4,
            hatted_claim, |rng| block_rtt_check(1, n));
    }
    // beyond the exact capacity: registered to exercise the skip path only
    reg.one(
        "sp4.hatted_rtt.N3.L3".into(),
        "sp4",
        "L=3, N=3, 4 sign pairs".into(),
        Backend::Exact,
        4 * 64 * 64,
        hatted_claim,
        Box::new(|rng: &mut ChaCha8Rng| block_rtt_check::<Q>(3, 3, rng)),
    );
    for n in [1usize, 2] {
        let claim = if n == 1 {
            "single B operator exchange with the block monodromies"
        } else {
            "action of the block monodromies on a product of B operators, including the reordering remainder"
        };
        both!(reg, format!("sp4.b_exchange.N{n}.L1"), "sp4", format!("L=1, N={n}, both signs"), 2 * 4usize.pow(n as u32) * 4,
            claim, |rng| b_exchange_check(n));
    }
    both!(reg, "sp4.b_pair_exchange.L1", "sp4", "L=1, N=2", 64,
        "exchange relation of two B operators", |rng| b_pair_check());
    for n in [1usize, 2, 3] {
        both!(reg, format!("sp4.reduced_vacuum.N{n}.L1"), "sp4", format!("L=1, N={n}, 10 instances"), 4usize.pow(n as u32) * 4,
            "all six dressed vacuum relations with the shifted weights mu", |rng| reduced_vacuum_check(n));
    }
    both!(reg, "sp4.dressing_identities", "rmatrix", "10 instances", 16,
        "auxiliary R-matrix identities used in the dressing induction", |rng| dressing_check());
    both!(reg, "sp4.mixed_ybe", "rmatrix", "4 sign pairs, 5 instances", 8,
        "mixed Yang-Baxter relations between block, dual and hatted R-matrices", |rng| mixed_ybe_check());
    for n in [0usize, 1] {
        both!(reg, format!("sp4.tilde_commutation.N{n}.L1"), "sp4", format!("L=1, N={n}"), 4usize.pow(n as u32) * 4 * 4,
            "T^i_k(x) and T^{-k}_{-i}(y) commute for i != k", |rng| tilde_commutation_check(n));
    }
    for pq in [1usize, 2] {
        both!(reg, format!("sp4.tilde_exchange.P{pq}Q{pq}.L1"), "sp4", format!("L=1, N=1, P=Q={pq}"), 64,
            "diagonal tilde generators exchanged with creation products", |rng| tilde_exchange_check(pq));
        both!(reg, format!("sp4.tilde_offshell.P{pq}Q{pq}.L1"), "sp4", format!("L=1, N=1, P=Q={pq}"), 64,
            "off-shell action of the diagonal tilde generators on the nested vector", |rng| tilde_offshell_check(pq));
    }

    for (base, problem) in end_to_end_problems()? {
        let model = problem.spec.model.name();
        let (n, p, q) = problem.counts;
        let sizes = format!("L={}, counts=({n},{p},{q})", problem.spec.length());
        let with_tilde = model == "sp4" && base.starts_with("extra") && n > 0;
        let with_hatted = model == "gl3" && base.starts_with("extra");
        let (eigen_bound, ansatz) = match problem.spec.model {
            Model::Gl2 => (1e-9, "gl(2)"),
            Model::Gl3 => (1e-9, "nested gl(3)"),
            Model::Sp4 => (1e-8, "sp(4)"),
        };
        let dim = problem.spec.dim();
        reg.0.push(CaseDef {
            base: base.to_string(),
            model,
            sizes,
            backend: Backend::Float,
            dim,
            parts: e2e_parts(eigen_bound, ansatz, with_tilde, with_hatted),
            run: Box::new(move |rng: &mut ChaCha8Rng| {
                use rand::RngCore;
                end_to_end(&problem, rng.next_u64(), with_tilde, with_hatted)
            }),
        });
    }
    Ok(reg)
}

/// Every registered case id, in registration order.
pub fn case_ids() -> Result<Vec<String>> {
    Ok(registry()?.0.iter().flat_map(|d| d.parts.iter().map(|p| d.id(p)).collect::<Vec<_>>()).collect())
}

fn run_def(def: &CaseDef, seed: u64, matcher: &GlobMatcher) -> Vec<CheckCase> {
    let selected: Vec<usize> = (0..def.parts.len()).filter(|&i| matcher.is_match(def.id(&def.parts[i]))).collect();
    if selected.is_empty() {
        return Vec::new();
    }
    // same seed for the exact and float twin so they draw the same points
    let case_seed = seed ^ fnv1a(&def.base);
    let started = Instant::now();
    let outcome = if def.backend == Backend::Exact && def.dim > EXACT_CAPACITY {
        Err(BetheError::Capacity(format!("dimension {} exceeds {EXACT_CAPACITY}", def.dim)))
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(case_seed);
        (def.run)(&mut rng)
    };
    let runtime_ms = started.elapsed().as_secs_f64() * 1e3;
    selected
        .into_iter()
        .map(|i| {
            let part = &def.parts[i];
            let (status, residual, reason) = match &outcome {
                Ok(values) => match values.get(i) {
                    Some(m) => {
                        let ok = !m.residual.is_nan() && part.bound.admits(m.residual);
                        let st = if ok { Status::Pass } else { Status::Fail };
                        (st, (!m.residual.is_nan()).then_some(m.residual), m.note.clone())
                    }
                    None => (Status::Fail, None, Some("check produced no value".into())),
                },
                Err(BetheError::Capacity(msg)) => (Status::Skip, None, Some(msg.clone())),
                Err(e) => (Status::Fail, None, Some(e.to_string())),
            };
            CheckCase {
                id: def.id(part),
                model: def.model.to_string(),
                sizes: def.sizes.clone(),
                backend: def.backend,
                seed: case_seed,
                status,
                residual,
                bound: part.bound,
                claim: part.claim.clone(),
                reason,
                runtime_ms,
            }
        })
        .collect()
}

/// Run every registered case whose id matches the glob `filter`, in parallel.
/// The result is sorted by id and, timing aside, depends only on `seed`.
pub fn run_suite(filter: &str, seed: u64) -> Result<Vec<CheckCase>> {
    let matcher = Glob::new(filter).map_err(|e| BetheError::Parse(e.to_string()))?.compile_matcher();
    let reg = registry()?;
    let mut cases: Vec<CheckCase> = reg.0.par_iter().flat_map_iter(|d| run_def(d, seed, &matcher)).collect();
    cases.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(cases)
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema: u32,
    pub seed: u64,
    pub filter: String,
    pub summary: Summary,
    /// failures first, then the rest in id order
    pub cases: Vec<CheckCase>,
}

pub fn report(mut cases: Vec<CheckCase>, filter: &str, seed: u64) -> Report {
    cases.sort_by(|a, b| (a.status != Status::Fail).cmp(&(b.status != Status::Fail)).then_with(|| a.id.cmp(&b.id)));
    let mut summary = Summary { total: cases.len(), ..Summary::default() };
    for c in &cases {
        match c.status {
            Status::Pass => summary.passed += 1,
            Status::Fail => summary.failed += 1,
            Status::Skip => summary.skipped += 1,
        }
    }
    Report { schema: SCHEMA, seed, filter: filter.to_string(), summary, cases }
}

impl Report {
    /// 0 all pass, 1 any failure, 2 nothing matched the filter.
    pub fn exit_code(&self) -> i32 {
        if self.cases.is_empty() {
            2
        } else if self.summary.failed > 0 {
            1
        } else {
            0
        }
    }

    pub fn table(&self) -> String {
        let width = self.cases.iter().map(|c| c.id.len()).max().unwrap_or(2).max(2);
        let mut out = format!("{:<width$}  {:<6}  {:>10}  {:>12}  {:>9}\n", "id", "status", "residual", "bound", "ms");
        for c in &self.cases {
            let status = match c.status {
                Status::Pass => "pass",
                Status::Fail => "FAIL",
                Status::Skip => "skip",
            };
            let residual = c.residual.map_or("-".to_string(), |r| format!("{r:.2e}"));
            let bound = match c.bound {
                Bound::AtMost(b) => format!("<= {b:.0e}"),
                Bound::AtLeast(b) => format!(">= {b:.0e}"),
            };
            out += &format!("{:<width$}  {status:<6}  {residual:>10}  {bound:>12}  {:>9.1}\n", c.id, c.runtime_ms);
            if let (Some(r), Status::Fail | Status::Skip) = (&c.reason, c.status) {
                out += &format!("{:<width$}    {r}\n", "");
            }
        }
        let s = &self.summary;
        out += &format!("{} cases: {} passed, {} failed, {} skipped\n", s.total, s.passed, s.failed, s.skipped);
        out
    }
}
