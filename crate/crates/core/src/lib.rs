//! Numerical study of `−Δu = λc(x)u + μ(x)|∇u|² + h(x)` with zero Dirichlet
//! data on intervals and rectangles.
//!
//! The crate is organised bottom-up:
//! * [`grid`]: uniform grids, grid functions, `−Δ_h + d`, quadrature, `≪`;
//! * [`transform`]: the exponential changes of variables;
//! * [`eigen`]: weighted principal eigenpairs;
//! * [`solve`]: residuals, Newton solvers, monotone iteration and the
//!   lower/upper solution constructions;
//! * [`branch`]: continuation, folds, deflation and the parameter sweeps;
//! * [`timemap`]: phase-plane analysis of the one-dimensional problem.

pub mod error;
pub mod grid;
pub mod linalg;
pub mod problem;
pub mod eigen;
pub mod solve;
pub mod branch;
pub mod transform;
pub mod timemap;

pub use error::{Error, Result};
pub use problem::{Mu, ProblemSpec};
