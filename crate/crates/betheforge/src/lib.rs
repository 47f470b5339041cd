//! Exact and floating-point Bethe ansatz checks for gl(2), gl(3) and sp(4) spin chains.

pub mod bethe_solver;
pub mod chain;
pub mod error;
pub mod harness;
pub mod nested_gl;
pub mod nested_sp4;
pub mod operator;
pub mod rmatrix;
pub mod scalars;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/scalars.md")]
    mod scalars {}
    #[doc = include_str!("../../../book/src/rmatrices.md")]
    mod rmatrices {}
    #[doc = include_str!("../../../book/src/chains.md")]
    mod chains {}
    #[doc = include_str!("../../../book/src/nested_gl.md")]
    mod nested_gl {}
    #[doc = include_str!("../../../book/src/nested_sp4.md")]
    mod nested_sp4 {}
    #[doc = include_str!("../../../book/src/solver.md")]
    mod solver {}
    #[doc = include_str!("../../../book/src/harness.md")]
    mod harness {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
