//! Damped Newton on the Bethe conditions (complex float backend) and
//! verification of solutions against the brute-force spectrum.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use crate::chain::{detect_vacuum, eigenspace_overlap, spectrum, transfer, ChainSpec, Model, VacuumData, SPECTRUM_CAPACITY};
use crate::error::{BetheError, Result};
use crate::nested_gl::{gl2_eigenvalue, gl2_residuals, gl2_vector, gl3_eigenvalue, gl3_residuals, gl3_vector, Condition};
use crate::nested_sp4::{sp4_eigenvalue, sp4_residuals, sp4_vector, Sp4Config};
use crate::operator::{vec_norm, vec_scale, vec_sub};
use crate::scalars::{RootSet, Scalar};

type C64 = Complex64;

/// The three root sets. gl(2) uses only `u`; gl(3) uses `u` (ū) and `v` (v⃗).
#[derive(Clone, Debug, PartialEq)]
pub struct Roots<S> {
    pub u: Vec<S>,
    pub v: Vec<S>,
    pub w: Vec<S>,
}

impl<S: Scalar> Roots<S> {
    pub fn new(u: Vec<S>, v: Vec<S>, w: Vec<S>) -> Self {
        Roots { u, v, w }
    }

    pub fn counts(&self) -> (usize, usize, usize) {
        (self.u.len(), self.v.len(), self.w.len())
    }

    pub fn flat(&self) -> Vec<S> {
        self.u.iter().chain(&self.v).chain(&self.w).cloned().collect()
    }

    pub fn from_flat(z: &[S], counts: (usize, usize, usize)) -> Self {
        let (n, p, _) = counts;
        Roots { u: z[..n].to_vec(), v: z[n..n + p].to_vec(), w: z[n + p..].to_vec() }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let conv = |v: &[S]| serde_json::Value::Array(v.iter().map(Scalar::to_json).collect());
        serde_json::json!({ "u": conv(&self.u), "v": conv(&self.v), "w": conv(&self.w) })
    }
}

fn check_counts(model: Model, counts: (usize, usize, usize)) -> Result<()> {
    let ok = match model {
        Model::Gl2 => counts.1 == 0 && counts.2 == 0,
        Model::Gl3 => counts.2 == 0,
        Model::Sp4 => true,
    };
    if ok {
        Ok(())
    } else {
        Err(BetheError::Invalid(format!("{} has no root set for counts {counts:?}", model.name())))
    }
}

/// Bethe conditions of the model, stacked u then v then w.
pub fn model_conditions<S: Scalar>(
    spec: &ChainSpec<S>,
    vac: &VacuumData,
    roots: &Roots<S>,
) -> Result<Vec<Condition<S>>> {
    check_counts(spec.model, roots.counts())?;
    match spec.model {
        Model::Gl2 => gl2_residuals(spec, vac, &roots.u),
        Model::Gl3 => {
            let (a, b) = gl3_residuals(spec, vac, &roots.u, &roots.v)?;
            Ok(a.into_iter().chain(b).collect())
        }
        Model::Sp4 => {
            let cfg = Sp4Config { us: roots.u.clone(), vs: roots.v.clone(), ws: roots.w.clone() };
            let r = sp4_residuals(spec, vac, &cfg)?;
            Ok(r.u.into_iter().chain(r.v).chain(r.w).collect())
        }
    }
}

pub fn model_vector<S: Scalar>(spec: &ChainSpec<S>, vac: &VacuumData, roots: &Roots<S>) -> Result<Vec<S>> {
    check_counts(spec.model, roots.counts())?;
    for set in [&roots.u, &roots.v, &roots.w] {
        RootSet::new(set.clone())?;
    }
    match spec.model {
        Model::Gl2 => gl2_vector(spec, vac, &roots.u),
        Model::Gl3 => gl3_vector(spec, vac, &roots.u, &roots.v),
        Model::Sp4 => {
            sp4_vector(spec, vac, &Sp4Config { us: roots.u.clone(), vs: roots.v.clone(), ws: roots.w.clone() })
        }
    }
}

pub fn model_eigenvalue<S: Scalar>(spec: &ChainSpec<S>, vac: &VacuumData, roots: &Roots<S>, x: &S) -> Result<S> {
    check_counts(spec.model, roots.counts())?;
    match spec.model {
        Model::Gl2 => gl2_eigenvalue(spec, vac, x, &roots.u),
        Model::Gl3 => gl3_eigenvalue(spec, vac, x, &roots.u, &roots.v),
        Model::Sp4 => {
            let cfg = Sp4Config { us: roots.u.clone(), vs: roots.v.clone(), ws: roots.w.clone() };
            sp4_eigenvalue(spec, vac, &cfg, x)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// number of random starts on top of the supplied guesses
    pub starts: usize,
    pub seed: u64,
    /// damping increases tried before an iteration gives up
    pub damping_tries: usize,
    pub fd_step: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { tol: 1e-11, max_iter: 100, starts: 20, seed: 7, damping_tries: 20, fd_step: 1e-7 }
    }
}

#[derive(Clone, Debug)]
pub struct SolveProblem {
    pub spec: ChainSpec<C64>,
    /// (N, P, Q)
    pub counts: (usize, usize, usize),
    pub guesses: Vec<Vec<C64>>,
    pub options: SolveOptions,
}

impl SolveProblem {
    pub fn new(spec: ChainSpec<C64>, counts: (usize, usize, usize), options: SolveOptions) -> Result<Self> {
        check_counts(spec.model, counts)?;
        if options.tol <= 0.0 {
            return Err(BetheError::Invalid("tolerance must be positive".into()));
        }
        Ok(SolveProblem { spec, counts, guesses: Vec::new(), options })
    }

    pub fn with_guess(mut self, guess: Vec<C64>) -> Self {
        self.guesses.push(guess);
        self
    }

    fn unknowns(&self) -> usize {
        self.counts.0 + self.counts.1 + self.counts.2
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveResult {
    pub roots: Roots<C64>,
    /// max-norm of the relative residual vector
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// σ_max / σ_min of the final Jacobian
    pub condition: f64,
}

impl Serialize for SolveResult {
    fn serialize<Z: Serializer>(&self, s: Z) -> std::result::Result<Z::Ok, Z::Error> {
        let mut m = s.serialize_map(Some(5))?;
        m.serialize_entry("roots", &self.roots.to_json())?;
        m.serialize_entry("residual", &self.residual)?;
        m.serialize_entry("iterations", &self.iterations)?;
        m.serialize_entry("converged", &self.converged)?;
        m.serialize_entry("condition", &self.condition)?;
        m.end()
    }
}

impl SolveResult {
    /// Every root multiplied by (1 + eps): an off-shell configuration for negative controls.
    pub fn perturbed(&self, eps: f64) -> Roots<C64> {
        let scale = C64::new(1.0 + eps, 0.0);
        let p = |v: &[C64]| v.iter().map(|z| z * scale).collect();
        Roots { u: p(&self.roots.u), v: p(&self.roots.v), w: p(&self.roots.w) }
    }
}

/// The ratios f_k = lhs_k / rhs_k - 1 and the worst relative residual, with
/// condition k belonging to root k of the flattened list.
fn evaluate(
    spec: &ChainSpec<C64>,
    vac: &VacuumData,
    z: &[C64],
    counts: (usize, usize, usize),
) -> Result<(DVector<C64>, f64)> {
    let conds = model_conditions(spec, vac, &Roots::from_flat(z, counts))?;
    let mut g = DVector::zeros(conds.len());
    for (k, c) in conds.iter().enumerate() {
        if c.rhs.norm() == 0.0 {
            return Err(BetheError::Numerical("vanishing right-hand side".into()));
        }
        g[k] = c.lhs / c.rhs - C64::new(1.0, 0.0);
    }
    if g.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(BetheError::Numerical("non-finite residual".into()));
    }
    Ok((g, relative_residual(&conds)))
}

/// The real least-squares vector [Re, Im] of w_k f_k. f_k decays like 1/z_k
/// when z_k runs away, so a plain merit has a spurious zero at infinity; the
/// weight w_k = (1 + |z_k - c|)², c the mean inhomogeneity, makes the merit
/// grow there instead. The weight is not holomorphic, hence the real
/// formulation.
fn weighted(spec: &ChainSpec<C64>, z: &[C64], g: &DVector<C64>) -> DVector<f64> {
    let c = mean_site(spec);
    let m = g.len();
    let mut out = DVector::zeros(2 * m);
    for k in 0..m {
        let v = g[k] * (1.0 + (z[k] - c).norm()).powi(2);
        out[k] = v.re;
        out[m + k] = v.im;
    }
    out
}

fn relative_residual(conds: &[Condition<C64>]) -> f64 {
    conds.iter().map(|c| c.relative()).fold(0.0, f64::max)
}

fn mean_site(spec: &ChainSpec<C64>) -> C64 {
    spec.zs.iter().sum::<C64>() / C64::new(spec.zs.len() as f64, 0.0)
}

fn jacobian(
    spec: &ChainSpec<C64>,
    vac: &VacuumData,
    z: &[C64],
    g: &DVector<C64>,
    counts: (usize, usize, usize),
    h: f64,
) -> Result<DMatrix<C64>> {
    let n = z.len();
    let mut j = DMatrix::zeros(g.len(), n);
    for c in 0..n {
        let mut zp = z.to_vec();
        let step = h * z[c].norm().max(1.0);
        zp[c] += C64::new(step, 0.0);
        let (gp, _) = evaluate(spec, vac, &zp, counts)?;
        j.set_column(c, &((gp - g) / C64::new(step, 0.0)));
    }
    Ok(j)
}

fn condition_number(j: &DMatrix<C64>) -> f64 {
    let sv = j.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

fn real_jacobian(
    spec: &ChainSpec<C64>,
    vac: &VacuumData,
    z: &[C64],
    rho: &DVector<f64>,
    counts: (usize, usize, usize),
    h: f64,
) -> Result<DMatrix<f64>> {
    let n = z.len();
    let mut j = DMatrix::zeros(rho.len(), 2 * n);
    for c in 0..n {
        let step = h * z[c].norm().max(1.0);
        for (col, dir) in [(c, C64::new(step, 0.0)), (n + c, C64::new(0.0, step))] {
            let mut zp = z.to_vec();
            zp[c] += dir;
            let (gp, _) = evaluate(spec, vac, &zp, counts)?;
            j.set_column(col, &((weighted(spec, &zp, &gp) - rho) / step));
        }
    }
    Ok(j)
}

/// Levenberg-Marquardt on the weighted residual; stops once the plain relative
/// residual meets the tolerance.
fn refine(problem: &SolveProblem, vac: &VacuumData, start: Vec<C64>) -> Result<SolveResult> {
    let spec = &problem.spec;
    let opts = &problem.options;
    let counts = problem.counts;
    let n = start.len();
    let mut z = start;
    let (mut g, mut residual) = evaluate(spec, vac, &z, counts)?;
    let mut rho = weighted(spec, &z, &g);
    let mut m = rho.norm_squared();
    let mut mu = 1e-3;
    let mut iterations = 0;
    while iterations < opts.max_iter && residual > opts.tol {
        iterations += 1;
        let j = real_jacobian(spec, vac, &z, &rho, counts, opts.fd_step)?;
        let a = j.transpose() * &j;
        let b = -(j.transpose() * &rho);
        let mut accepted = false;
        for _ in 0..=opts.damping_tries {
            let mut damped = a.clone();
            for i in 0..2 * n {
                damped[(i, i)] += mu * (a[(i, i)] + 1e-12);
            }
            let Some(step) = damped.lu().solve(&b) else {
                mu *= 4.0;
                continue;
            };
            let trial: Vec<C64> = (0..n).map(|i| z[i] + C64::new(step[i], step[n + i])).collect();
            if let Ok((gt, rt)) = evaluate(spec, vac, &trial, counts) {
                let rt_vec = weighted(spec, &trial, &gt);
                let mt = rt_vec.norm_squared();
                if mt < m {
                    (z, g, residual, rho, m) = (trial, gt, rt, rt_vec, mt);
                    mu = (mu / 3.0).max(1e-15);
                    accepted = true;
                    break;
                }
            }
            mu *= 4.0;
        }
        if !accepted || z.iter().any(|c| c.norm() > 10.0 * ESCAPE_RADIUS) {
            break;
        }
    }
    let condition = match jacobian(spec, vac, &z, &g, counts, opts.fd_step) {
        Ok(j) => condition_number(&j),
        Err(_) => f64::INFINITY,
    };
    Ok(SolveResult {
        roots: Roots::from_flat(&z, counts),
        residual,
        iterations,
        converged: residual <= opts.tol,
        condition,
    })
}

/// Roots this far from the inhomogeneities are runaways: every relative
/// residual tends to zero at infinity.
const ESCAPE_RADIUS: f64 = 1e4;

fn escaped(spec: &ChainSpec<C64>, roots: &Roots<C64>) -> bool {
    let mean = mean_site(spec);
    roots.flat().iter().any(|z| !z.re.is_finite() || !z.im.is_finite() || (z - mean).norm() > ESCAPE_RADIUS)
}

fn collides(roots: &Roots<C64>) -> bool {
    [&roots.u, &roots.v, &roots.w]
        .iter()
        .any(|set| (0..set.len()).any(|i| (0..i).any(|j| (set[i] - set[j]).norm() < 1e-8)))
}

fn canonical(mut roots: Roots<C64>) -> Roots<C64> {
    for set in [&mut roots.u, &mut roots.v, &mut roots.w] {
        set.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    }
    roots
}

fn same_roots(a: &Roots<C64>, b: &Roots<C64>) -> bool {
    let (x, y) = (a.flat(), b.flat());
    x.len() == y.len() && x.iter().zip(&y).all(|(p, q)| (p - q).norm() < 1e-6)
}

fn lex_cmp(a: &Roots<C64>, b: &Roots<C64>) -> std::cmp::Ordering {
    for (p, q) in a.flat().iter().zip(b.flat().iter()) {
        let o = p.re.total_cmp(&q.re).then(p.im.total_cmp(&q.im));
        if o != std::cmp::Ordering::Equal {
            return o;
        }
    }
    std::cmp::Ordering::Equal
}

fn random_start(spec: &ChainSpec<C64>, n: usize, seed: u64, index: usize) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let mean = mean_site(spec);
    (0..n)
        .map(|_| {
            // uniform in the disc of radius 2
            let r = 2.0 * rng.random::<f64>().sqrt();
            let phi = rng.random::<f64>() * std::f64::consts::TAU;
            mean + C64::from_polar(r, phi) + C64::new(0.0, 0.1)
        })
        .collect()
}

/// Run every start in parallel, keep converged collision-free results, merge
/// duplicates and sort by residual then root order.
pub fn solve(problem: &SolveProblem) -> Result<Vec<SolveResult>> {
    let vac = detect_vacuum(&problem.spec)?;
    let n = problem.unknowns();
    if n == 0 {
        return Ok(vec![SolveResult {
            roots: Roots::new(vec![], vec![], vec![]),
            residual: 0.0,
            iterations: 0,
            converged: true,
            condition: 1.0,
        }]);
    }
    let mut starts = problem.guesses.clone();
    for g in &starts {
        if g.len() != n {
            return Err(BetheError::Invalid(format!("guess has {} entries, expected {n}", g.len())));
        }
    }
    starts.extend((0..problem.options.starts).map(|i| random_start(&problem.spec, n, problem.options.seed, i)));
    let found: Vec<SolveResult> = starts
        .into_par_iter()
        .filter_map(|start| {
            let retry: Vec<C64> = start.iter().map(|z| z * C64::new(1.0 + 1e-3, 1e-3)).collect();
            let out = refine(problem, &vac, start).or_else(|_| refine(problem, &vac, retry)).ok()?;
            (out.converged && !collides(&out.roots) && !escaped(&problem.spec, &out.roots)).then(|| SolveResult { roots: canonical(out.roots.clone()), ..out })
        })
        .collect();
    let mut sorted = found;
    sorted.sort_by(|a, b| a.residual.total_cmp(&b.residual).then_with(|| lex_cmp(&a.roots, &b.roots)));
    let mut unique: Vec<SolveResult> = Vec::new();
    for r in sorted {
        if !unique.iter().any(|u| same_roots(&u.roots, &r.roots)) {
            unique.push(r);
        }
    }
    Ok(unique)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Eigenvector,
    /// the roots satisfy the conditions but the constructed vector vanishes
    NullVector,
    NotEigenvector,
}

#[derive(Clone, Debug, Serialize)]
pub struct SampleReport {
    pub x: [f64; 2],
    pub eigenvalue: Option<[f64; 2]>,
    pub eigen_residual: Option<f64>,
    pub nearest_eigenvalue: Option<[f64; 2]>,
    pub spectrum_gap: Option<f64>,
    pub overlap: Option<f64>,
    pub skipped: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub verdict: Verdict,
    pub samples: Vec<SampleReport>,
    pub max_eigen_residual: f64,
    pub max_spectrum_gap: f64,
    pub min_overlap: f64,
}

fn pair(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

/// Fixed sample points off the real axis.
pub fn default_samples(n: usize) -> Vec<C64> {
    let base = [C64::new(0.3, 0.7), C64::new(1.9, -0.4), C64::new(-1.2, 0.5), C64::new(0.77, -1.3), C64::new(-0.45, -0.85)];
    (0..n).map(|i| base[i % base.len()] + C64::new(0.0, 0.31 * (i / base.len()) as f64)).collect()
}

/// Build the Bethe vector for `roots`, then at every sample compare H(x)ψ with
/// E(x)ψ and E(x) with the nearest eigenvalue of H(x).
pub fn verify_roots(spec: &ChainSpec<C64>, roots: &Roots<C64>, samples: &[C64]) -> Result<VerifyReport> {
    let vac = detect_vacuum(spec)?;
    let psi = match model_vector(spec, &vac, roots) {
        Ok(v) => v,
        Err(BetheError::ZeroVector) => {
            return Ok(VerifyReport {
                verdict: Verdict::NullVector,
                samples: Vec::new(),
                max_eigen_residual: f64::NAN,
                max_spectrum_gap: f64::NAN,
                min_overlap: f64::NAN,
            })
        }
        Err(e) => return Err(e),
    };
    let norm = vec_norm(&psi);
    let mut reports = Vec::with_capacity(samples.len());
    let (mut max_res, mut max_gap, mut min_overlap) = (0.0f64, 0.0f64, 1.0f64);
    for x in samples {
        let mut rep = SampleReport {
            x: pair(*x),
            eigenvalue: None,
            eigen_residual: None,
            nearest_eigenvalue: None,
            spectrum_gap: None,
            overlap: None,
            skipped: None,
        };
        let (e, h) = match model_eigenvalue(spec, &vac, roots, x).and_then(|e| Ok((e, transfer(spec, x)?))) {
            Ok(v) => v,
            Err(BetheError::Pole(p)) => {
                rep.skipped = Some(format!("pole at {p}"));
                reports.push(rep);
                continue;
            }
            Err(e) => return Err(e),
        };
        let res = vec_norm(&vec_sub(&h.apply(&psi), &vec_scale(&psi, &e))) / norm;
        rep.eigenvalue = Some(pair(e));
        rep.eigen_residual = Some(res);
        max_res = max_res.max(res);
        if spec.dim() <= SPECTRUM_CAPACITY {
            let spec_vals = spectrum(spec, x)?;
            let nearest = spec_vals
                .iter()
                .map(|(ev, _)| *ev)
                .min_by(|a, b| (a - e).norm().total_cmp(&(b - e).norm()))
                .ok_or_else(|| BetheError::Numerical("empty spectrum".into()))?;
            let gap = (nearest - e).norm();
            let overlap = eigenspace_overlap(&h.to_nalgebra(), nearest, &psi);
            rep.nearest_eigenvalue = Some(pair(nearest));
            rep.spectrum_gap = Some(gap);
            rep.overlap = Some(overlap);
            max_gap = max_gap.max(gap);
            min_overlap = min_overlap.min(overlap);
        } else {
            rep.skipped = Some(format!("spectrum skipped: dimension {} > {SPECTRUM_CAPACITY}", spec.dim()));
        }
        reports.push(rep);
    }
    let verdict = if max_res <= 1e-8 { Verdict::Eigenvector } else { Verdict::NotEigenvector };
    Ok(VerifyReport { verdict, samples: reports, max_eigen_residual: max_res, max_spectrum_gap: max_gap, min_overlap })
}

pub fn verify_solution(spec: &ChainSpec<C64>, result: &SolveResult, samples: &[C64]) -> Result<VerifyReport> {
    verify_roots(spec, &result.roots, samples)
}

/// Verify the roots scaled by (1 + eps); an honest check should now fail.
pub fn negative_control(spec: &ChainSpec<C64>, result: &SolveResult, eps: f64, samples: &[C64]) -> Result<VerifyReport> {
    verify_roots(spec, &result.perturbed(eps), samples)
}

