//! Numerical solver for Caputo-type fractional differential equations and
//! uncertain fractional differential equations (UFDEs).
//!
//! The core of the crate is an n-order fractional Adams predictor–corrector
//! built on product integration: on every subinterval the smooth factor of
//! the weakly singular integrand is replaced by a Lagrange interpolant, whose
//! monomial coefficients ([`lagrange`]) are paired with exact kernel moments
//! ∫ (t*−s)^{ν−1} s^k ds ([`moments`]) to form quadrature weights. The
//! stepper itself lives in [`adams`].
//!
//! On top of the deterministic solver, [`uncertain`] maps a UFDE driven by a
//! Liu process onto its family of α-path FDEs and sweeps them into an
//! inverse-distribution surface, and [`analytics`] post-processes surfaces
//! into extreme-value curves, first-hitting-time distributions, expected
//! values and error studies. [`oracle`] holds the independent truth sources
//! (Mittag-Leffler series, a closed form for the linear benchmark, adaptive
//! quadrature, fine-grid reference solves) used by the test suites.

// validation compares as `!(a < b)` on purpose: NaN must be rejected, and
// `a >= b` would accept it
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adams;
pub mod analytics;
pub mod error;
pub mod grid;
pub mod lagrange;
pub mod moments;
pub mod oracle;
pub mod uncertain;

pub use adams::{
    solve, truncation_bound, CaputoProblem, CheckedRhs, DomainPolicy, DomainViolation, FnRhs,
    MemoryMode, Rhs, SolverConfig, Stepper, Trajectory,
};
pub use analytics::{
    error_study, expected_value, extreme_value, fht_distribution, CurveKind, Direction,
    DistributionCurve, ExtremeMode, MonotoneMap, StudyConfig, StudyKind, StudyRow,
};
pub use error::{Error, Result};
pub use grid::{AlphaGrid, TimeGrid};
pub use lagrange::{eval_basis, split_lagrange, BasisCoefficients, NodeWindow};
pub use moments::{interval_weights, moment, moment_checked, MomentQuery, WeightSet};
pub use uncertain::{
    alpha_path_problem, liu_inverse_std, sweep, sweep_partial, AlphaSurface, UncertainProblem,
};
