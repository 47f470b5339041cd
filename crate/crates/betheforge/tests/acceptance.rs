//! One line per acceptance criterion. Criteria that cannot hold on fundamental
//! chains are expected to fail and are reported as such; anything else that
//! fails makes the target exit non-zero.

use std::collections::HashMap;
use std::process::ExitCode;
use std::time::Instant;

use betheforge::harness::{run_suite, Backend, Bound, CheckCase, Status, FLOAT_IDENTITY_BOUND};

const SEED: u64 = 7;

struct Line {
    number: String,
    text: &'static str,
    pass: bool,
    detail: String,
    /// the criterion cannot hold on these chains; failing is the honest outcome
    expected_failure: Option<&'static str>,
}

fn select<'a>(cases: &'a [CheckCase], prefixes: &[&str], backend: Option<Backend>) -> Vec<&'a CheckCase> {
    cases
        .iter()
        .filter(|c| prefixes.iter().any(|p| c.id.starts_with(p)))
        .filter(|c| backend.is_none_or(|b| c.backend == b))
        .collect()
}

/// All pass (skips allowed when `allow_skip`), and at least one case ran.
fn all_pass(cases: &[&CheckCase], allow_skip: bool) -> (bool, String) {
    let ran = cases.iter().filter(|c| c.status != Status::Skip).count();
    let bad: Vec<&str> = cases
        .iter()
        .filter(|c| c.status == Status::Fail || (!allow_skip && c.status == Status::Skip))
        .map(|c| c.id.as_str())
        .collect();
    // negative controls must stay large, so only upper-bounded checks count here
    let worst = cases
        .iter()
        .filter(|c| matches!(c.bound, Bound::AtMost(_)))
        .filter_map(|c| c.residual)
        .fold(0.0f64, f64::max);
    let detail = if bad.is_empty() {
        format!("{ran} cases, max residual {worst:.1e}")
    } else {
        format!("{} of {} cases failed: {}", bad.len(), cases.len(), bad.join(", "))
    };
    (ran > 0 && bad.is_empty(), detail)
}

fn timed(filter: &str) -> (Vec<CheckCase>, f64) {
    let t = Instant::now();
    let cases = run_suite(filter, SEED).expect("suite runs");
    (cases, t.elapsed().as_secs_f64())
}

fn main() -> ExitCode {
    let (ybe_cases, ybe_secs) = timed("rmatrix.*.exact");
    let (gl2_cases, gl2_secs) = timed("e2e.gl2.*");
    let all = run_suite("*", SEED).expect("suite runs");
    let mut lines = Vec::new();

    let (pass, detail) = all_pass(&select(&ybe_cases, &["rmatrix."], None), false);
    lines.push(Line {
        number: "1".into(),
        text: "Yang-Baxter and unitarity exact for gl2, gl3, sp4, sp4 tilde (25 samples each, < 10 s)",
        pass: pass && ybe_secs < 10.0,
        detail: format!("{detail}, {ybe_secs:.2} s"),
        expected_failure: None,
    });

    let (pass, detail) = all_pass(&select(&all, &["chain."], Some(Backend::Exact)), false);
    lines.push(Line {
        number: "2".into(),
        text: "transfer matrices commute exactly (and RTT holds) for all models, L = 1, 2",
        pass,
        detail,
        expected_failure: None,
    });

    let (pass, detail) = all_pass(&select(&all, &["scalars.summation_identity"], Some(Backend::Exact)), false);
    lines.push(Line {
        number: "3".into(),
        text: "summation identities exact for |u| in 0..6, 50 instances",
        pass,
        detail,
        expected_failure: None,
    });

    let (pass, detail) = all_pass(&select(&all, &["sp4.reduced_vacuum."], Some(Backend::Exact)), false);
    lines.push(Line {
        number: "4".into(),
        text: "six dressed vacuum relations exact for N = 1, 2, 3 on L = 1 sp(4)",
        pass,
        detail,
        expected_failure: None,
    });

    let identity_prefixes = [
        "gl2.diagonal_exchange",
        "gl3.dressed_vacuum",
        "gl3.hatted_rtt",
        "sp4.lowering_kills_w0",
        "sp4.block_rtt_on_w0",
        "sp4.hatted_rtt",
        "sp4.b_exchange",
        "sp4.b_pair_exchange",
        "sp4.tilde_commutation",
        "sp4.tilde_exchange",
        "sp4.tilde_offshell",
        "sp4.dressing_identities",
        "sp4.mixed_ybe",
    ];
    let (pass, detail) = all_pass(&select(&all, &identity_prefixes, Some(Backend::Exact)), true);
    lines.push(Line {
        number: "5".into(),
        text: "operator identity suite exact on the declared small instances (capacity skips allowed)",
        pass,
        detail,
        expected_failure: None,
    });

    let (pass, detail) = all_pass(&select(&gl2_cases, &["e2e.gl2."], None), false);
    lines.push(Line {
        number: "6".into(),
        text: "end-to-end gl(2), L = 2, N = 1: root, eigenvector, spectrum match (< 5 s)",
        pass: pass && gl2_secs < 5.0,
        detail: format!("{detail}, {gl2_secs:.2} s"),
        expected_failure: None,
    });

    let (pass, detail) = all_pass(&select(&all, &["e2e.gl3.L2.M1."], None), false);
    lines.push(Line {
        number: "7".into(),
        text: "end-to-end gl(3), L = 2, M = 1, empty u",
        pass,
        detail,
        expected_failure: Some("this vector is identically zero on fundamental gl(3) chains"),
    });

    let (pass, detail) = all_pass(&select(&all, &["e2e.sp4.L1.N1."], None), false);
    lines.push(Line {
        number: "8".into(),
        text: "end-to-end sp(4), L = 1, (N,P,Q) = (1,0,0)",
        pass,
        detail,
        expected_failure: Some("this vector is identically zero on fundamental sp(4) chains"),
    });
    let (pass, detail) = all_pass(&select(&all, &["e2e.sp4.L2.N1P1."], None), false);
    lines.push(Line {
        number: "8b".into(),
        text: "stretch: end-to-end sp(4), L = 2, (N,P,Q) = (1,1,0)",
        pass,
        detail,
        expected_failure: Some("non-dominant weight, no finite Bethe roots"),
    });

    let (pass, detail) = all_pass(&select(&all, &["e2e.gl2.L2.N1.negative", "e2e.gl3.L2.M1.negative", "e2e.sp4.L1.N1.negative"], None), false);
    lines.push(Line {
        number: "9".into(),
        text: "negative controls: roots perturbed by 1e-3 give eigen-residual >= 1e-4 in cases 6 to 8",
        pass,
        detail,
        expected_failure: Some("cases 7 and 8 have no nonzero vector to perturb"),
    });

    // every float twin of an exact zero stays below the float bound
    let exact: HashMap<String, &CheckCase> = all
        .iter()
        .filter(|c| c.backend == Backend::Exact && c.residual == Some(0.0))
        .map(|c| (c.id.trim_end_matches(".exact").to_string(), c))
        .collect();
    let mut compared = 0;
    let mut worst = 0.0f64;
    let mut bad = Vec::new();
    for c in all.iter().filter(|c| c.backend == Backend::Float) {
        if exact.contains_key(c.id.trim_end_matches(".float")) {
            compared += 1;
            match c.residual {
                Some(r) if r <= FLOAT_IDENTITY_BOUND => worst = worst.max(r),
                _ => bad.push(c.id.clone()),
            }
        }
    }
    lines.push(Line {
        number: "10".into(),
        text: "backend agreement: float residual <= 1e-12 wherever the exact residual is 0",
        pass: compared > 0 && bad.is_empty(),
        detail: if bad.is_empty() {
            format!("{compared} pairs, worst float residual {worst:.1e}")
        } else {
            format!("disagreeing: {}", bad.join(", "))
        },
        expected_failure: None,
    });

    let supplementary = [
        ("S1", "extra.gl3.L3.singlet.", "supplementary gl(3), L = 3, two level-2 roots and one level-1 root"),
        ("S2", "extra.sp4.L2.singlet.", "supplementary sp(4), L = 2, (N,P,Q) = (1,2,0)"),
        ("S3", "extra.sp4.L2.P1.", "supplementary sp(4), L = 2, (N,P,Q) = (0,1,0)"),
        ("S4", "extra.sp4.L2.Q1.", "supplementary sp(4), L = 2, (N,P,Q) = (0,0,1)"),
    ];
    for (number, prefix, text) in supplementary {
        let (pass, detail) = all_pass(&select(&all, &[prefix], None), false);
        lines.push(Line { number: number.into(), text, pass, detail, expected_failure: None });
    }

    let mut unexpected = 0;
    for l in &lines {
        let verdict = match (l.pass, l.expected_failure) {
            (true, _) => "PASS".to_string(),
            (false, Some(why)) => format!("FAIL (expected: {why})"),
            (false, None) => {
                unexpected += 1;
                "FAIL".to_string()
            }
        };
        println!("criterion {:>2}: {verdict}: {} [{}]", l.number, l.text, l.detail);
    }
    if unexpected > 0 {
        println!("{unexpected} unexpected failure(s)");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
