//! Principal eigenpairs of the weighted pencil `(−Δ_h + d) φ = ξ c φ`.
//!
//! The weight `c` may vanish on parts of the domain, so the pencil is
//! singular there. We run inverse iteration on `(A + σC)⁻¹ C` with
//! `A = −Δ_h + diag(d)` and `C = diag(c)`; the shifted matrix is a symmetric
//! Z-matrix and, once positive definite, an M-matrix with a positive inverse,
//! so the iterates stay positive and converge to the Perron vector.

use crate::error::{Error, Result};
use crate::grid::{build_operator, Grid, GridFunction};
use crate::linalg::{dot, norm_inf, BandLu, Pivoting};
use crate::problem::ProblemSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    /// Positive at every interior node, `‖·‖∞ = 1`.
    pub function: GridFunction,
    /// `‖(−Δ_h + d)φ − value·c·φ‖∞`.
    pub residual: f64,
    pub iterations: usize,
    pub shift: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct EigenConfig {
    pub max_iters: usize,
    /// Relative change of successive Rayleigh quotients.
    pub rq_tol: f64,
    /// Residual target; relaxed to the rounding floor of `A` when larger.
    pub residual_tol: f64,
}

impl Default for EigenConfig {
    fn default() -> Self {
        Self {
            max_iters: 2000,
            rq_tol: 1e-12,
            residual_tol: 1e-8,
        }
    }
}

pub fn principal_eigen(grid: &Grid, d: &GridFunction, c: &GridFunction) -> Result<EigenPair> {
    principal_eigen_with(grid, d, c, &EigenConfig::default())
}

pub fn principal_eigen_with(
    grid: &Grid,
    d: &GridFunction,
    c: &GridFunction,
    cfg: &EigenConfig,
) -> Result<EigenPair> {
    if c.len() != grid.len() || d.len() != grid.len() {
        return Err(Error::Shape {
            expected: grid.len(),
            found: c.len().min(d.len()),
        });
    }
    if c.values().iter().any(|&v| v < 0.0) {
        return Err(Error::Input("weight c must be nonnegative".into()));
    }
    if c.max() <= 0.0 {
        return Err(Error::Input("weight c vanishes identically".into()));
    }
    let op = build_operator(grid, Some(d))?;
    let a = op.to_band();

    let mut shift = 1.0
        + c.values()
            .iter()
            .zip(d.values())
            .filter(|(ci, _)| **ci > 0.0)
            .map(|(ci, di)| -di / ci)
            .fold(0.0, f64::max);
    let mut factor = None;
    let mut last_failure = (0usize, 0.0f64);
    for _ in 0..6 {
        let mut b = a.clone();
        for (k, ck) in c.values().iter().enumerate() {
            b.add(k, k, shift * ck);
        }
        let lu = BandLu::factor(&b, Pivoting::None);
        match lu {
            Ok(lu) => match lu.first_nonpositive_pivot() {
                None => {
                    factor = Some(lu);
                    break;
                }
                Some(fail) => last_failure = fail,
            },
            Err(Error::Singular { min_pivot, .. }) => last_failure = (0, min_pivot),
            Err(e) => return Err(e),
        }
        shift *= 4.0;
    }
    let lu = factor.ok_or(Error::Definiteness {
        shift,
        pivot: last_failure.1,
        row: last_failure.0,
    })?;

    let cw = c.values();
    let floor = 64.0 * f64::EPSILON * a.norm_inf();
    let res_tol = cfg.residual_tol.max(floor);
    let mut x = vec![1.0; grid.len()];
    let mut rq_prev = f64::NAN;
    let mut residual = f64::INFINITY;
    for it in 1..=cfg.max_iters {
        let cx: Vec<f64> = x.iter().zip(cw).map(|(xi, ci)| xi * ci).collect();
        let mut y = lu.solve(&cx);
        let scale = y.iter().copied().fold(0.0, |m: f64, v| if v.abs() > m.abs() { v } else { m });
        for yi in y.iter_mut() {
            *yi /= scale;
        }
        let ay = a.mul_vec(&y);
        let cy: Vec<f64> = y.iter().zip(cw).map(|(yi, ci)| yi * ci).collect();
        let rq = dot(&y, &ay) / dot(&y, &cy);
        let r: Vec<f64> = ay.iter().zip(&cy).map(|(p, q)| p - rq * q).collect();
        residual = norm_inf(&r);
        x = y;
        if (rq - rq_prev).abs() <= cfg.rq_tol * rq.abs().max(1e-300) && residual <= res_tol {
            let function = GridFunction::new(*grid, x)?;
            if let Some(node) = function.values().iter().position(|&v| v <= 0.0) {
                return Err(Error::Domain {
                    node,
                    detail: "principal eigenfunction lost positivity".into(),
                });
            }
            return Ok(EigenPair {
                value: rq,
                function,
                residual,
                iterations: it,
                shift,
            });
        }
        rq_prev = rq;
    }
    Err(Error::Iteration {
        iterations: cfg.max_iters,
        residual,
    })
}

/// `γ₁`: potential `0`, weight `c`.
pub fn gamma1(problem: &ProblemSpec) -> Result<EigenPair> {
    let g = problem.grid();
    principal_eigen(g, &GridFunction::zeros(*g), problem.c())
}

/// `ν₁`: potential `μ₂ h̃⁻`, weight `c`. `h_tilde_minus` is the (nonnegative)
/// negative part itself.
pub fn nu1(problem: &ProblemSpec, h_tilde_minus: &GridFunction) -> Result<EigenPair> {
    if h_tilde_minus.min() < 0.0 {
        return Err(Error::Input("negative part must be nonnegative".into()));
    }
    let d = h_tilde_minus.scaled(problem.mu2());
    principal_eigen(problem.grid(), &d, problem.c())
}

/// `ν̃₁`: potential `μ₁ h⁻`, weight `c`.
pub fn nu_tilde1(problem: &ProblemSpec) -> Result<EigenPair> {
    let d = problem.h().negative_part().scaled(problem.mu1());
    principal_eigen(problem.grid(), &d, problem.c())
}

/// `ξ₁`: potential `−μh`, weight `c`.
pub fn xi1(problem: &ProblemSpec, mu_const: f64) -> Result<EigenPair> {
    let d = problem.h().scaled(-mu_const);
    principal_eigen(problem.grid(), &d, problem.c())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coercivity {
    pub coercive: bool,
    /// Smallest eigenvalue of `−Δ_h − μ₂ diag(h⁺)` (unit weight).
    pub margin: f64,
}

pub fn coercivity_check(problem: &ProblemSpec) -> Result<Coercivity> {
    let g = problem.grid();
    let d = problem.h().positive_part().scaled(-problem.mu2());
    let pair = principal_eigen(g, &d, &GridFunction::constant(*g, 1.0))?;
    Ok(Coercivity {
        coercive: pair.value > 0.0,
        margin: pair.value,
    })
}
