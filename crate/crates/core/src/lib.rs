//! Numerical laboratory for the nonlocal porous-medium equation
//! `u_t = ∇·(G'(u) ∇(-Δ)^{-s} u)` on a periodic box.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod fracops;
pub mod grid;
pub mod nonlinearity;
pub mod quadrature;
pub mod stepper;

pub use diagnostics::{CheckResult, LedgerSettings, RunLedger, SmoothingFit};
pub use error::{Error, Result};
pub use fracops::{FracOperator, FracOperatorSpec, SymbolMode, SymbolTable};
pub use grid::{inverse_transform, make_grid, transform, Field, Grid, Spectrum};
pub use nonlinearity::{NonlinearityKind, NonlinearitySpec};
pub use stepper::{Scheme, SolverConfig, Stepper};
