use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use betheforge::bethe_solver::{
    default_samples, model_conditions, solve, verify_roots, Roots, SolveOptions, SolveProblem, Verdict, VerifyReport,
};
use betheforge::chain::{check_commuting, check_rtt, detect_vacuum, weights, ChainSpec, Model};
use betheforge::harness::{report, run_suite, FLOAT_IDENTITY_BOUND};
use betheforge::nested_gl::gl3_reduction_check;
use betheforge::rmatrix::{check_unitarity, check_ybe, RKind};
use betheforge::scalars::Scalar;
use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use num_rational::BigRational;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "betheforge", version, about = "Bethe ansatz checks for gl(2), gl(3) and sp(4) spin chains")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Exact,
    Float,
}

#[derive(Subcommand)]
enum Cmd {
    /// Yang-Baxter and unitarity residuals of one R-matrix at given points
    Ybe {
        #[arg(long)]
        kind: String,
        #[arg(long, allow_hyphen_values = true)]
        x: String,
        #[arg(long, allow_hyphen_values = true)]
        y: String,
        #[arg(long, allow_hyphen_values = true)]
        z: String,
        #[arg(long, value_enum, default_value = "exact")]
        backend: BackendArg,
    },
    /// Vacuum, weights, RTT and commutativity of the transfer matrix for a chain file
    ChainCheck {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        x: String,
        #[arg(long, allow_hyphen_values = true)]
        y: String,
        #[arg(long, value_enum, default_value = "exact")]
        backend: BackendArg,
    },
    /// Nested gl(3) ansatz: Bethe residuals, optionally the full eigenvector check
    Gl3 {
        #[arg(long)]
        spec: PathBuf,
        /// comma separated, e.g. "0.1+0.2i, -0.3"
        #[arg(long, default_value = "", allow_hyphen_values = true)]
        u: String,
        #[arg(long, default_value = "", allow_hyphen_values = true)]
        v: String,
        #[arg(long)]
        check: bool,
        #[arg(long, default_value_t = 3)]
        samples: usize,
    },
    /// sp(4) ansatz: Bethe residuals, optionally verified against H(x)
    Sp4 {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value = "", allow_hyphen_values = true)]
        u: String,
        #[arg(long, default_value = "", allow_hyphen_values = true)]
        v: String,
        #[arg(long, default_value = "", allow_hyphen_values = true)]
        w: String,
        #[arg(long)]
        verify: bool,
        #[arg(long, default_value_t = 3)]
        samples: usize,
    },
    /// Solve the Bethe conditions numerically
    Solve {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        model: Option<String>,
        #[arg(long = "N", default_value_t = 0)]
        n: usize,
        #[arg(long = "P", default_value_t = 0)]
        p: usize,
        #[arg(long = "Q", default_value_t = 0)]
        q: usize,
        #[arg(long, default_value_t = 20)]
        starts: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 1e-11)]
        tol: f64,
        #[arg(long, default_value_t = 100)]
        max_iter: usize,
        /// starting point, all roots comma separated in u, v, w order; repeatable
        #[arg(long, allow_hyphen_values = true)]
        guess: Vec<String>,
    },
    /// Run the check suite and write the report
    Verify {
        #[arg(long, conflicts_with = "filter")]
        all: bool,
        /// glob over case ids, e.g. "sp4.reduced_vacuum.*"
        #[arg(long)]
        filter: Option<String>,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cmd: Cmd) -> Result<u8> {
    match cmd {
        Cmd::Ybe { kind, x, y, z, backend } => {
            let kind = RKind::parse(&kind)?;
            match backend {
                BackendArg::Exact => ybe::<BigRational>(kind, &x, &y, &z),
                BackendArg::Float => ybe::<Complex64>(kind, &x, &y, &z),
            }
        }
        Cmd::ChainCheck { spec, x, y, backend } => match backend {
            BackendArg::Exact => chain_check::<BigRational>(&spec, &x, &y),
            BackendArg::Float => chain_check::<Complex64>(&spec, &x, &y),
        },
        Cmd::Gl3 { spec, u, v, check, samples } => gl3(&spec, &u, &v, check, samples),
        Cmd::Sp4 { spec, u, v, w, verify, samples } => sp4(&spec, &u, &v, &w, verify, samples),
        Cmd::Solve { spec, model, n, p, q, starts, seed, tol, max_iter, guess } => {
            let spec = load::<Complex64>(&spec)?;
            if let Some(m) = model {
                let m = Model::parse(&m)?;
                if m != spec.model {
                    bail!("--model {} but the chain file describes {}", m.name(), spec.model.name());
                }
            }
            let opts = SolveOptions { tol, max_iter, starts, seed, ..SolveOptions::default() };
            let mut problem = SolveProblem::new(spec, (n, p, q), opts)?;
            for g in &guess {
                problem = problem.with_guess(parse_list::<Complex64>(g)?);
            }
            let results = solve(&problem)?;
            println!("{}", serde_json::to_string_pretty(&results)?);
            Ok(if results.is_empty() { 1 } else { 0 })
        }
        Cmd::Verify { all, filter, seed, out } => {
            let filter = match (all, filter) {
                (true, _) => "*".to_string(),
                (false, Some(f)) => f,
                (false, None) => bail!("pass --all or --filter GLOB"),
            };
            let rep = report(run_suite(&filter, seed)?, &filter, seed);
            print!("{}", rep.table());
            let doc = serde_json::to_string_pretty(&rep)?;
            match out {
                Some(path) => fs::write(&path, doc).with_context(|| format!("writing {}", path.display()))?,
                None => println!("{doc}"),
            }
            Ok(rep.exit_code() as u8)
        }
    }
}

fn load<S: Scalar>(path: &Path) -> Result<ChainSpec<S>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(ChainSpec::from_json_str(&text)?)
}

fn parse_list<S: Scalar>(s: &str) -> Result<Vec<S>> {
    s.split(',').map(str::trim).filter(|t| !t.is_empty()).map(|t| Ok(S::parse_literal(t)?)).collect()
}

fn exact_or_float_bound<S: Scalar>() -> f64 {
    if S::EXACT {
        0.0
    } else {
        FLOAT_IDENTITY_BOUND
    }
}

fn ybe<S: Scalar>(kind: RKind, x: &str, y: &str, z: &str) -> Result<u8> {
    let (x, y, z) = (S::parse_literal(x)?, S::parse_literal(y)?, S::parse_literal(z)?);
    let ybe = check_ybe(kind, &x, &y, &z)?;
    let unitarity = check_unitarity(kind, &x, &y)?;
    println!("ybe residual: {ybe:e}");
    println!("unitarity residual: {unitarity:e}");
    let bound = exact_or_float_bound::<S>();
    Ok(if ybe <= bound && unitarity <= bound { 0 } else { 1 })
}

fn chain_check<S: Scalar>(path: &Path, x: &str, y: &str) -> Result<u8> {
    let spec = load::<S>(path)?;
    let (x, y) = (S::parse_literal(x)?, S::parse_literal(y)?);
    let vac = detect_vacuum(&spec)?;
    let rtt = check_rtt(&spec, &x, &y)?;
    let commuting = check_commuting(&spec, &x, &y)?;
    let lambda: Vec<Value> = weights(&spec, &vac, &x)?.iter().map(Scalar::to_json).collect();
    let out = json!({
        "chain": spec.to_file(),
        "backend": S::BACKEND,
        "vacuum": { "local_slot": vac.local, "index": vac.index, "convention": format!("{:?}", vac.convention) },
        "weights_at_x": lambda,
        "rtt_residual": rtt,
        "commuting_residual": commuting,
    });
    println!("{}", serde_json::to_string_pretty(&out)?);
    let bound = exact_or_float_bound::<S>();
    Ok(if rtt <= bound && commuting <= bound { 0 } else { 1 })
}

fn floats(v: &[Complex64]) -> Vec<Value> {
    v.iter().map(Scalar::to_json).collect()
}

fn verification_json(rep: &VerifyReport) -> (Value, Value) {
    let matched: Vec<Value> = rep.samples.iter().map(|s| json!(s.nearest_eigenvalue)).collect();
    let eigen = if rep.max_eigen_residual.is_nan() { Value::Null } else { json!(rep.max_eigen_residual) };
    (eigen, Value::Array(matched))
}

fn gl3(path: &Path, u: &str, v: &str, check: bool, samples: usize) -> Result<u8> {
    let spec = load::<Complex64>(path)?;
    if spec.model != Model::Gl3 {
        bail!("the chain file describes {}, not gl3", spec.model.name());
    }
    let roots = Roots::new(parse_list(u)?, parse_list(v)?, vec![]);
    let vac = detect_vacuum(&spec)?;
    let conds = model_conditions(&spec, &vac, &roots)?;
    let (cu, cv) = conds.split_at(roots.u.len());
    let rel = |c: &[betheforge::nested_gl::Condition<Complex64>]| c.iter().map(|c| c.relative()).collect::<Vec<_>>();
    let mut out = json!({
        "config": { "chain": spec.to_file(), "u": floats(&roots.u), "v": floats(&roots.v) },
        "residuals": { "u": rel(cu), "v": rel(cv) },
        "backend": "float",
    });
    let mut code = 0;
    if check {
        let xs = default_samples(samples);
        let rep = verify_roots(&spec, &roots, &xs)?;
        let (eigen, matched) = verification_json(&rep);
        out["verdict"] = json!(rep.verdict);
        out["eigen_residual"] = eigen;
        out["matched_eigenvalue"] = matched;
        match gl3_reduction_check(&spec, &vac, &roots.u, &roots.v, &xs) {
            Ok(r) => {
                out["hatted_residual"] = json!(r.hatted_residual);
                out["bridge_residuals"] = json!(r.bridge);
            }
            Err(e) => out["hatted_residual"] = json!(e.to_string()),
        }
        if rep.verdict != Verdict::Eigenvector {
            code = 1;
        }
    }
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(code)
}

fn sp4(path: &Path, u: &str, v: &str, w: &str, verify: bool, samples: usize) -> Result<u8> {
    let spec = load::<Complex64>(path)?;
    if spec.model != Model::Sp4 {
        bail!("the chain file describes {}, not sp4", spec.model.name());
    }
    let roots = Roots::new(parse_list(u)?, parse_list(v)?, parse_list(w)?);
    let vac = detect_vacuum(&spec)?;
    let conds = model_conditions(&spec, &vac, &roots)?;
    let (n, p, _) = roots.counts();
    let rel: Vec<f64> = conds.iter().map(|c| c.relative()).collect();
    let mut out = json!({
        "config": { "chain": spec.to_file(), "u": floats(&roots.u), "v": floats(&roots.v), "w": floats(&roots.w) },
        "residuals": { "u": &rel[..n], "v": &rel[n..n + p], "w": &rel[n + p..] },
        "eigen_residual": Value::Null,
        "matched_eigenvalue": Value::Null,
        "backend": "float",
    });
    let mut code = 0;
    if verify {
        let rep = verify_roots(&spec, &roots, &default_samples(samples))?;
        let (eigen, matched) = verification_json(&rep);
        out["verdict"] = json!(rep.verdict);
        out["eigen_residual"] = eigen;
        out["matched_eigenvalue"] = matched;
        if rep.verdict != Verdict::Eigenvector {
            code = 1;
        }
    }
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(code)
}
