//! Multiple positive radial solutions of the p-Laplacian on an annulus with
//! oscillating nonlinearities.
//!
//! Radial problems on `a < |x| < b` are mapped onto the two-point problem
//! `(|v'|^{p-2} v')' + q(t) f(v) = 0` on `(0, 1)`. The crate builds
//! oscillating nonlinearities, checks the growth hypotheses, certifies the
//! energy estimates that force infinitely many solutions, and computes
//! solutions numerically by shooting and energy descent.

pub mod certificates;
pub mod cli;
pub mod coordinates;
pub mod discretization;
pub mod error;
pub mod exec;
pub mod nonlinearity;
pub mod quadrature;
pub mod solver;

pub use coordinates::{AnnulusSpec, CoordinateMap, Profile, WeightFunction};
pub use discretization::{FEFunction, Functional, Mesh};
pub use error::{Error, Result};
pub use exec::Execution;
pub use nonlinearity::{Branch, Nonlinearity, OscillationSequences};
pub use solver::{Solution, TwoPointProblem};
