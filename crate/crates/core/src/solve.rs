//! Nonlinear solvers for `−Δu = λcu + μ|∇u|² + h`.
//!
//! The discrete gradient term is [`weighted_gradient_term`], so for constant
//! `μ` the direct residual and the residual of the transformed problem in
//! `v = e^{μu} − 1` satisfy `F(u) = F_T(v) / (μ(1+v))` node by node. Both
//! Newton paths therefore converge to the same discrete solution.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::eigen::{gamma1, nu1, principal_eigen, EigenPair};
use crate::error::{Error, Result};
use crate::grid::{
    add_weighted_gradient_jacobian, apply_neg_laplacian, build_operator, integrate, linear_solve,
    neg_laplacian_band, strictly_below, weighted_gradient_term, Domain, Grid, GridFunction,
    DEFAULT_EPSILON_MIN,
};
use crate::linalg::{norm_inf, BandLu, BandMatrix, Pivoting};
use crate::problem::ProblemSpec;
use crate::transform::{cole_hopf_forward, cole_hopf_inverse, SemilinearRhs};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Formulation {
    Direct,
    Transformed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MonotoneStart {
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub tol: f64,
    pub step_tol: f64,
    pub max_iters: usize,
    pub max_monotone_iters: usize,
    pub max_halvings: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            step_tol: 1e-12,
            max_iters: 200,
            max_monotone_iters: 100_000,
            max_halvings: 40,
        }
    }
}

impl SolverConfig {
    pub fn with_max_iters(self, max_iters: usize) -> Self {
        Self { max_iters, ..self }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    /// The solution `u` of the original problem.
    pub solution: GridFunction,
    /// `v = e^{μu} − 1` when the transformed problem was solved.
    pub transformed: Option<GridFunction>,
    /// Sup norm of the residual of the formulation that was solved.
    pub residual_inf: f64,
    /// The tolerance actually applied: `tol`, raised to the rounding level
    /// of the discrete operator when that is larger.
    pub tolerance: f64,
    pub iterations: usize,
    pub converged: bool,
    pub formulation: Formulation,
}

/// `lower ≪ upper` certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderedCertificate {
    pub lower: GridFunction,
    pub upper: GridFunction,
    /// Largest `ε` with `upper − lower ≥ εφ₁`.
    pub epsilon: f64,
    /// `max(lower − upper)`; nonpositive when the order holds nodewise.
    pub max_violation: f64,
    pub holds: bool,
}

impl OrderedCertificate {
    pub fn new(lower: &GridFunction, upper: &GridFunction, phi1: &GridFunction) -> Result<Self> {
        let order = strictly_below(lower, upper, phi1, DEFAULT_EPSILON_MIN)?;
        let max_violation = lower
            .values()
            .iter()
            .zip(upper.values())
            .map(|(a, b)| a - b)
            .fold(f64::NEG_INFINITY, f64::max);
        Ok(Self {
            lower: lower.clone(),
            upper: upper.clone(),
            epsilon: order.epsilon,
            max_violation,
            holds: order.holds,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verification {
    pub holds: bool,
    /// Worst signed gap of the inequality; positive means violated.
    pub max_violation: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub rel_gap: f64,
}

/// Sum of the stencil weights at an interior node, i.e. half of `‖−Δ_h‖∞`.
fn stencil_diagonal(grid: &Grid) -> f64 {
    grid.neighbours(0).iter().map(|(_, w)| w).sum()
}

/// Rounding level of `‖−Δ_h x‖∞ − …` evaluated in floating point.
fn roundoff_floor(grid: &Grid, x_norm: f64, rest: f64) -> f64 {
    4.0 * f64::EPSILON * (2.0 * stencil_diagonal(grid) * x_norm + rest)
}

fn data_scale(problem: &ProblemSpec, lambda: f64) -> f64 {
    problem.h().sup_norm() + lambda.abs() * problem.c().sup_norm()
}

/// Convergence tolerance of the direct residual at `u`: `cfg.tol`, raised to
/// the rounding level of `−Δ_h u` when that is larger.
pub(crate) fn direct_tolerance(problem: &ProblemSpec, lambda: f64, u: &[f64], cfg: &SolverConfig) -> f64 {
    let un = norm_inf(u);
    let lc = lambda.abs() * problem.c().sup_norm();
    cfg.tol
        .max(roundoff_floor(problem.grid(), un, lc * un + problem.h().sup_norm()))
}

fn residual_vec(problem: &ProblemSpec, lambda: f64, u: &[f64], mu: &[f64]) -> Result<Vec<f64>> {
    let grid = *problem.grid();
    let uf = GridFunction::new(grid, u.to_vec())?;
    let q = weighted_gradient_term(&uf, mu)?;
    let lap = apply_neg_laplacian(&grid, u);
    let c = problem.c().values();
    let h = problem.h().values();
    Ok((0..u.len())
        .map(|k| lap[k] - lambda * c[k] * u[k] - q.values()[k] - h[k])
        .collect())
}

/// `F(u) = −Δ_h u − λcu − μ|∇u|² − h` with the fitted gradient term.
pub fn residual_direct(problem: &ProblemSpec, lambda: f64, u: &GridFunction) -> Result<GridFunction> {
    problem.c().check_same_grid(u)?;
    let r = residual_vec(problem, lambda, u.values(), &problem.mu_values())?;
    GridFunction::new(*u.grid(), r)
}

/// Jacobian of [`residual_direct`] at `u`.
pub fn jacobian_direct(problem: &ProblemSpec, lambda: f64, u: &GridFunction) -> BandMatrix {
    let grid = problem.grid();
    let mut jac = neg_laplacian_band(grid);
    for (k, ck) in problem.c().values().iter().enumerate() {
        jac.add(k, k, -lambda * ck);
    }
    add_weighted_gradient_jacobian(&mut jac, grid, u.values(), &problem.mu_values(), -1.0);
    jac
}

fn require_constant_mu(problem: &ProblemSpec) -> Result<f64> {
    problem
        .constant_mu()
        .ok_or_else(|| Error::Precondition("this operation needs a constant mu".into()))
}

fn semilinear(problem: &ProblemSpec, lambda: f64) -> Result<SemilinearRhs> {
    let mu = require_constant_mu(problem)?;
    SemilinearRhs::new(lambda, mu, problem.c().clone(), problem.h().clone())
}

/// `F_T(v) = −Δ_h v − λc(1+v)ln(1+v) − μh(1+v)`.
pub fn residual_transformed(problem: &ProblemSpec, lambda: f64, v: &GridFunction) -> Result<GridFunction> {
    let rhs = semilinear(problem, lambda)?;
    let (f, _) = rhs.eval(v)?;
    let lap = apply_neg_laplacian(problem.grid(), v.values());
    GridFunction::new(
        *v.grid(),
        lap.iter().zip(f.values()).map(|(a, b)| a - b).collect(),
    )
}

/// Deflation factor `Π (1 + 1/‖u − rᵢ‖∞²)` and the scalar `s` such that the
/// deflated Newton step is the undeflated one divided by `1 − s`.
fn deflation(u: &[f64], du: &[f64], known: &[GridFunction]) -> (f64, f64) {
    let mut m = 1.0;
    let mut s = 0.0;
    for r in known {
        let (j, d) = u
            .iter()
            .zip(r.values())
            .map(|(a, b)| a - b)
            .enumerate()
            .fold((0, 0.0f64), |acc, (i, e)| if e.abs() > acc.1.abs() { (i, e) } else { acc });
        let dist = d.abs().max(1e-300);
        let inv2 = dist.powi(-2);
        m *= 1.0 + inv2;
        s += -2.0 * dist.powi(-3) * d.signum() * du[j] / (1.0 + inv2);
    }
    (m, s)
}

fn min_distance(u: &[f64], known: &[GridFunction]) -> f64 {
    known
        .iter()
        .map(|r| {
            u.iter()
                .zip(r.values())
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
        })
        .fold(f64::INFINITY, f64::min)
}

/// Distance below which a root is considered a copy of a known one.
pub const DISTINCT_ROOT_DISTANCE: f64 = 1e-4;

/// Damped Newton on [`residual_direct`].
pub fn newton_direct(
    problem: &ProblemSpec,
    lambda: f64,
    u0: &GridFunction,
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    newton_deflated(problem, lambda, u0, &[], cfg)
}

/// Damped Newton on the residual deflated at each of `known`. With `known`
/// empty this is plain [`newton_direct`].
pub fn newton_deflated(
    problem: &ProblemSpec,
    lambda: f64,
    u0: &GridFunction,
    known: &[GridFunction],
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    problem.c().check_same_grid(u0)?;
    let grid = *problem.grid();
    let mu = problem.mu_values();
    let mut u = u0.values().to_vec();
    let mut f = residual_vec(problem, lambda, &u, &mu)?;
    let mut tol = cfg.tol;
    let mut rn = norm_inf(&f);
    let mut iterations = 0;
    let mut converged = false;
    for it in 0..=cfg.max_iters {
        iterations = it;
        tol = direct_tolerance(problem, lambda, &u, cfg);
        if rn <= tol {
            converged = known.is_empty() || min_distance(&u, known) >= DISTINCT_ROOT_DISTANCE;
            break;
        }
        if it == cfg.max_iters {
            break;
        }
        let uf = GridFunction::new(grid, u.clone())?;
        let jac = jacobian_direct(problem, lambda, &uf);
        let lu = BandLu::factor(&jac, Pivoting::Partial)?;
        let neg: Vec<f64> = f.iter().map(|x| -x).collect();
        let mut du = lu.solve(&neg);
        let (m0, s) = deflation(&u, &du, known);
        if !known.is_empty() {
            let tau = 1.0 / (1.0 - s);
            if tau.is_finite() && tau > 0.0 {
                du.iter_mut().for_each(|d| *d *= tau);
            }
        }
        let merit = m0 * rn;
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=cfg.max_halvings {
            let trial: Vec<f64> = u.iter().zip(&du).map(|(a, d)| a + t * d).collect();
            if let Ok(ft) = residual_vec(problem, lambda, &trial, &mu) {
                let m = if known.is_empty() { 1.0 } else { deflation(&trial, &du, known).0 };
                let rt = norm_inf(&ft);
                if rt.is_finite() && m * rt <= (1.0 - 1e-4 * t) * merit {
                    accepted = Some((trial, ft, rt));
                    break;
                }
            }
            t *= 0.5;
        }
        match accepted {
            Some((trial, ft, rt)) => {
                let step = t * norm_inf(&du);
                u = trial;
                f = ft;
                rn = rt;
                if step <= cfg.step_tol * (1.0 + norm_inf(&u)) && rn > tol {
                    // Stagnated above tolerance.
                    tol = direct_tolerance(problem, lambda, &u, cfg);
                    converged = rn <= tol
                        && (known.is_empty() || min_distance(&u, known) >= DISTINCT_ROOT_DISTANCE);
                    iterations = it + 1;
                    break;
                }
            }
            None => break,
        }
    }
    Ok(SolveReport {
        solution: GridFunction::new(grid, u)?,
        transformed: None,
        residual_inf: rn,
        tolerance: tol,
        iterations,
        converged,
        formulation: Formulation::Direct,
    })
}

/// Smallest admissible value of `v` on the transformed path.
const V_FLOOR: f64 = -1.0 + 1e-12;

/// Damped Newton on the transformed problem; constant `μ` only.
pub fn newton_transformed(
    problem: &ProblemSpec,
    lambda: f64,
    v0: &GridFunction,
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    problem.c().check_same_grid(v0)?;
    let mu = require_constant_mu(problem)?;
    let rhs = semilinear(problem, lambda)?;
    if let Some(node) = v0.values().iter().position(|&x| x <= V_FLOOR) {
        return Err(Error::Domain {
            node,
            detail: "starting iterate must satisfy v > -1".into(),
        });
    }
    let grid = *problem.grid();
    let band = neg_laplacian_band(&grid);
    let data = mu * problem.h().sup_norm();
    let lc = lambda.abs() * problem.c().sup_norm();
    let eval = |v: &[f64]| -> (Vec<f64>, Vec<f64>) {
        let lap = apply_neg_laplacian(&grid, v);
        let mut r = Vec::with_capacity(v.len());
        let mut fp = Vec::with_capacity(v.len());
        for (k, x) in v.iter().enumerate() {
            let (fk, fpk) = rhs.eval_node(k, *x);
            r.push(lap[k] - fk);
            fp.push(fpk);
        }
        (r, fp)
    };
    let mut v = v0.values().to_vec();
    let (mut f, mut fp) = eval(&v);
    let mut rn = norm_inf(&f);
    let mut tol = cfg.tol;
    let mut iterations = 0;
    let mut converged = false;
    for it in 0..=cfg.max_iters {
        iterations = it;
        let vn = norm_inf(&v);
        let ln = v.iter().map(|x| x.ln_1p().abs()).fold(0.0, f64::max);
        tol = cfg.tol.max(roundoff_floor(&grid, vn, (lc * (1.0 + vn) * (1.0 + ln)) + data * (1.0 + vn)));
        if rn <= tol {
            converged = true;
            break;
        }
        if it == cfg.max_iters {
            break;
        }
        let mut jac = band.clone();
        for (k, d) in fp.iter().enumerate() {
            jac.add(k, k, -d);
        }
        let lu = BandLu::factor(&jac, Pivoting::Partial)?;
        let neg: Vec<f64> = f.iter().map(|x| -x).collect();
        let dv = lu.solve(&neg);
        let mut t = 1.0;
        let mut admissible_seen = false;
        let mut accepted = None;
        for _ in 0..=cfg.max_halvings {
            let trial: Vec<f64> = v.iter().zip(&dv).map(|(a, d)| a + t * d).collect();
            if trial.iter().all(|&x| x > V_FLOOR) {
                admissible_seen = true;
                let (ft, fpt) = eval(&trial);
                let rt = norm_inf(&ft);
                if rt.is_finite() && rt <= (1.0 - 1e-4 * t) * rn {
                    accepted = Some((trial, ft, fpt, rt));
                    break;
                }
            }
            t *= 0.5;
        }
        match accepted {
            Some((trial, ft, fpt, rt)) => {
                let step = t * norm_inf(&dv);
                v = trial;
                f = ft;
                fp = fpt;
                rn = rt;
                if step <= cfg.step_tol * (1.0 + norm_inf(&v)) && rn > tol {
                    iterations = it + 1;
                    break;
                }
            }
            None if !admissible_seen => {
                let node = v
                    .iter()
                    .zip(&dv)
                    .enumerate()
                    .min_by(|a, b| (a.1 .0 + a.1 .1).total_cmp(&(b.1 .0 + b.1 .1)))
                    .map_or(0, |(k, _)| k);
                return Err(Error::Domain {
                    node,
                    detail: "no admissible Newton step keeps v > -1".into(),
                });
            }
            None => break,
        }
    }
    let vf = GridFunction::new(grid, v)?;
    Ok(SolveReport {
        solution: cole_hopf_inverse(&vf, mu)?,
        transformed: Some(vf),
        residual_inf: rn,
        tolerance: tol,
        iterations,
        converged,
        formulation: Formulation::Transformed,
    })
}

fn verification_tol(problem: &ProblemSpec, lambda: f64, x_norm: f64) -> f64 {
    let data = data_scale(problem, lambda);
    1e-9 * (1.0 + data) + roundoff_floor(problem.grid(), x_norm, data * (1.0 + x_norm))
}

/// Checks `F(α) ≤ 0` nodewise (up to tolerance).
pub fn verify_lower(problem: &ProblemSpec, lambda: f64, alpha: &GridFunction) -> Result<Verification> {
    let f = residual_direct(problem, lambda, alpha)?;
    let tolerance = verification_tol(problem, lambda, alpha.sup_norm());
    let max_violation = f.max();
    Ok(Verification {
        holds: max_violation <= tolerance,
        max_violation,
        tolerance,
    })
}

/// Checks `F(β) ≥ 0` nodewise (up to tolerance).
pub fn verify_upper(problem: &ProblemSpec, lambda: f64, beta: &GridFunction) -> Result<Verification> {
    let f = residual_direct(problem, lambda, beta)?;
    let tolerance = verification_tol(problem, lambda, beta.sup_norm());
    let max_violation = -f.min();
    Ok(Verification {
        holds: max_violation <= tolerance,
        max_violation,
        tolerance,
    })
}

/// Transformed-problem analogue of [`verify_lower`] / [`verify_upper`];
/// `sign = 1` for lower, `−1` for upper. Returns `(worst node, violation, tol)`.
fn verify_transformed(
    problem: &ProblemSpec,
    lambda: f64,
    v: &GridFunction,
    sign: f64,
) -> Result<(usize, f64, f64)> {
    let r = residual_transformed(problem, lambda, v)?;
    let mu = require_constant_mu(problem)?;
    let vn = v.sup_norm();
    let tol = verification_tol(problem, lambda, vn) * mu.max(1.0) * (1.0 + vn);
    let (node, worst) = r
        .values()
        .iter()
        .map(|x| sign * x)
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (k, x)| if x > acc.1 { (k, x) } else { acc });
    Ok((node, worst, tol))
}

/// K-shifted monotone iteration for the transformed problem between the
/// lower solution `alpha_v` and the upper solution `beta_v`.
pub fn monotone_iterate(
    problem: &ProblemSpec,
    lambda: f64,
    alpha_v: &GridFunction,
    beta_v: &GridFunction,
    from: MonotoneStart,
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    let mu = require_constant_mu(problem)?;
    let rhs = semilinear(problem, lambda)?;
    alpha_v.check_same_grid(beta_v)?;
    problem.c().check_same_grid(alpha_v)?;
    if let Some(node) = alpha_v.values().iter().position(|&x| x <= -1.0) {
        return Err(Error::Domain {
            node,
            detail: "lower solution must satisfy v > -1".into(),
        });
    }
    if let Some((node, (a, b))) = alpha_v
        .values()
        .iter()
        .zip(beta_v.values())
        .enumerate()
        .find(|(_, (a, b))| a > b)
    {
        return Err(Error::Certificate {
            node,
            violation: a - b,
        });
    }
    for (v, sign) in [(alpha_v, 1.0), (beta_v, -1.0)] {
        let (node, violation, tol) = verify_transformed(problem, lambda, v, sign)?;
        if violation > tol {
            return Err(Error::Certificate { node, violation });
        }
    }

    let grid = *problem.grid();
    let amin = alpha_v.min();
    let min_fp = (0..grid.len())
        .map(|k| rhs.eval_node(k, amin).1)
        .fold(f64::INFINITY, f64::min);
    let shift = (-min_fp).max(0.0) + 1.0;
    let mut m = neg_laplacian_band(&grid);
    for k in 0..grid.len() {
        m.add(k, k, shift);
    }
    let lu = BandLu::factor(&m, Pivoting::Partial)?;

    let mut v = match from {
        MonotoneStart::Lower => alpha_v.values().to_vec(),
        MonotoneStart::Upper => beta_v.values().to_vec(),
    };
    let direction = match from {
        MonotoneStart::Lower => 1.0,
        MonotoneStart::Upper => -1.0,
    };
    let mut iterations = 0;
    let mut converged = false;
    for it in 1..=cfg.max_monotone_iters {
        iterations = it;
        let b: Vec<f64> = v
            .iter()
            .enumerate()
            .map(|(k, &x)| rhs.eval_node(k, x).0 + shift * x)
            .collect();
        let next = lu.solve(&b);
        let scale = 1.0 + norm_inf(&next);
        let slack = 1e-10 * scale;
        let mut change = 0.0f64;
        for (k, (a, b)) in v.iter().zip(&next).enumerate() {
            let d = direction * (b - a);
            if d < -slack {
                return Err(Error::Certificate { node: k, violation: -d });
            }
            change = change.max(d.abs());
        }
        if next.iter().any(|&x| x <= -1.0) {
            return Err(Error::Domain {
                node: next.iter().position(|&x| x <= -1.0).unwrap_or(0),
                detail: "monotone iterate left v > -1".into(),
            });
        }
        v = next;
        if change <= cfg.step_tol * scale {
            converged = true;
            break;
        }
    }
    let vf = GridFunction::new(grid, v)?;
    let residual_inf = residual_transformed(problem, lambda, &vf)?.sup_norm();
    Ok(SolveReport {
        solution: cole_hopf_inverse(&vf, mu)?,
        transformed: Some(vf),
        residual_inf,
        tolerance: cfg.tol,
        iterations,
        converged,
        formulation: Formulation::Transformed,
    })
}

/// Largest `k` tried by the doubling in [`construct_lower_solution`].
const MAX_LOWER_K: f64 = 1.152_921_504_606_847e18; // 2^60

/// A lower solution lying below every upper solution of the problem.
///
/// First tries `α_k` solving `−Δα = −λkc − h⁻ − 1`, doubling `k` from 1
/// until `min α_k ≥ −k`. When no `k` works (`λ·max A⁻¹c ≥ 1`), falls back to
/// the lower solution of `−Δv = λcv + μ|∇v|² − h⁻ − 1`, tracked from `λ = 0`.
pub fn construct_lower_solution(problem: &ProblemSpec, lambda: f64) -> Result<GridFunction> {
    if !(lambda >= 0.0) {
        return Err(Error::Input(format!("lambda must be nonnegative, got {lambda}")));
    }
    let grid = *problem.grid();
    let op = build_operator(&grid, None)?;
    let a = linear_solve(&op, &problem.c().scaled(-lambda))?;
    let b = linear_solve(&op, &problem.h().negative_part().map(|x| -x - 1.0))?;
    let mut k = 1.0;
    let alpha = loop {
        let alpha = a.axpby(k, &b, 1.0)?;
        if alpha.min() >= -k {
            break Some(alpha);
        }
        if a.min() <= -1.0 || k >= MAX_LOWER_K {
            break None;
        }
        k *= 2.0;
    };
    let alpha = match alpha {
        Some(alpha) => alpha,
        None => auxiliary_lower_solution(problem, lambda, &b)?,
    };
    let check = verify_lower(problem, lambda, &alpha)?;
    if !check.holds {
        let f = residual_direct(problem, lambda, &alpha)?;
        let node = f
            .values()
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map_or(0, |(k, _)| k);
        return Err(Error::Certificate {
            node,
            violation: check.max_violation,
        });
    }
    Ok(alpha)
}

fn auxiliary_lower_solution(problem: &ProblemSpec, lambda: f64, start: &GridFunction) -> Result<GridFunction> {
    let aux = problem.with_h(problem.h().negative_part().map(|x| -x - 1.0))?;
    let cfg = SolverConfig::default();
    let first = newton_direct(&aux, 0.0, start, &cfg)?;
    if !first.converged {
        return Err(Error::Iteration {
            iterations: first.iterations,
            residual: first.residual_inf,
        });
    }
    let mut u = first.solution;
    let mut at = 0.0;
    let mut step = (lambda / 8.0).max(1e-3);
    while at < lambda {
        let next = (at + step).min(lambda);
        match newton_direct(&aux, next, &u, &cfg) {
            Ok(r) if r.converged && r.solution.max() <= 0.0 => {
                u = r.solution;
                at = next;
                step *= 1.5;
            }
            _ => {
                step *= 0.5;
                if step < 1e-8 * lambda.max(1.0) {
                    return Err(Error::Iteration {
                        iterations: 0,
                        residual: f64::NAN,
                    });
                }
            }
        }
    }
    Ok(u)
}

/// Positive upper solution `β = ln(1 + w)/μ` of the `λ = 0` problem, where
/// `−Δw − μhw = μh⁺`. `None` when the principal eigenvalue with potential
/// `−μh` is not positive, in which case the `λ = 0` problem has no solution.
pub fn construct_upper_solution_p0(problem: &ProblemSpec) -> Result<Option<GridFunction>> {
    let mu = require_constant_mu(problem)?;
    let grid = *problem.grid();
    let d = problem.h().scaled(-mu);
    match principal_eigen(&grid, &d, problem.c()) {
        Ok(pair) if pair.value > 0.0 => {}
        Ok(_) | Err(Error::Definiteness { .. }) => return Ok(None),
        Err(e) => return Err(e),
    }
    let op = build_operator(&grid, Some(&d))?;
    let w = linear_solve(&op, &problem.h().positive_part().scaled(mu))?;
    // Clip rounding-level negatives; the maximum principle gives w ≥ 0.
    let w = w.map(|x| x.max(0.0));
    Ok(Some(cole_hopf_inverse(&w, mu)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct NegativeUpper {
    /// `β ≪ 0`.
    pub beta: GridFunction,
    /// Scale `k` of the positive part: `β` is an upper solution for the data
    /// `k·h⁺ − h⁻`. When `h⁺ ≡ 0` it is the factor in `β = k·w` and the data
    /// are unchanged.
    pub k: f64,
    /// Parameter of the anti-maximum linear problem.
    pub lambda0: f64,
    /// Principal eigenvalue with potential `μ₂h⁻`.
    pub nu1: f64,
}

/// Negative upper solution built from the anti-maximum principle.
///
/// Bisects `λ₀` down from `(ν₁ + λ)/2` towards `ν₁` until the solution `w` of
/// `−Δw + μ₂h⁻w = λ₀cw + g` satisfies `w ≪ 0`, with `g = μ₂h⁺` (or `g = 1`
/// when `h⁺ ≡ 0`). Then `β = ln(1 + kw)/μ₂` (or `β = kw`), halving `k` from
/// `k_scale` until the upper-solution inequality holds. `None` when
/// `λ ≤ ν₁` or no window is found.
pub fn construct_negative_upper_solution(
    problem: &ProblemSpec,
    lambda: f64,
    k_scale: f64,
) -> Result<Option<NegativeUpper>> {
    if !(k_scale > 0.0) {
        return Err(Error::Input(format!("k_scale must be positive, got {k_scale}")));
    }
    let grid = *problem.grid();
    let hm = problem.h().negative_part();
    let hp = problem.h().positive_part();
    let mu2 = problem.mu2();
    let nu = nu1(problem, &hm)?;
    if lambda <= nu.value {
        return Ok(None);
    }
    let forced = hp.max() > 0.0;
    let g = if forced { hp.scaled(mu2) } else { GridFunction::constant(grid, 1.0) };
    let d = hm.scaled(mu2);
    let zero = GridFunction::zeros(grid);

    let mut lambda0 = 0.5 * (nu.value + lambda);
    let mut w = None;
    for _ in 0..60 {
        let pot = d.zip_map(problem.c(), |di, ci| di - lambda0 * ci)?;
        let op = build_operator(&grid, Some(&pot))?;
        if let Ok(candidate) = linear_solve(&op, &g) {
            if strictly_below(&candidate, &zero, &nu.function, DEFAULT_EPSILON_MIN)?.holds {
                w = Some(candidate);
                break;
            }
        }
        lambda0 = nu.value + 0.5 * (lambda0 - nu.value);
    }
    let Some(w) = w else { return Ok(None) };

    let mut k = k_scale;
    for _ in 0..200 {
        let kw = w.scaled(k);
        if kw.min() > -1.0 {
            let (beta, target) = if forced {
                let beta = kw.map(|x| x.ln_1p() / mu2);
                let data = hp.axpby(k, &hm, -1.0)?;
                (beta, problem.with_h(data)?)
            } else {
                (kw, problem.clone())
            };
            if verify_upper(&target, lambda, &beta)?.holds
                && strictly_below(&beta, &zero, &nu.function, DEFAULT_EPSILON_MIN)?.holds
            {
                return Ok(Some(NegativeUpper {
                    beta,
                    k,
                    lambda0,
                    nu1: nu.value,
                }));
            }
        }
        k *= 0.5;
        if k < 1e-30 {
            break;
        }
    }
    Ok(None)
}

/// Both sides of `(γ₁ − λ)∫cuφ₁ = ∫μ|∇u|²φ₁ + ∫hφ₁`.
pub fn check_identity_phi1(problem: &ProblemSpec, lambda: f64, u: &GridFunction) -> Result<IdentityCheck> {
    let pair = gamma1(problem)?;
    check_identity_phi1_with(problem, lambda, u, &pair)
}

/// [`check_identity_phi1`] with a precomputed principal pair.
pub fn check_identity_phi1_with(
    problem: &ProblemSpec,
    lambda: f64,
    u: &GridFunction,
    pair: &EigenPair,
) -> Result<IdentityCheck> {
    let phi = &pair.function;
    let cu_phi = problem.c().zip_map(u, |a, b| a * b)?.zip_map(phi, |a, b| a * b)?;
    let lhs = (pair.value - lambda) * integrate(&cu_phi);
    let q = weighted_gradient_term(u, &problem.mu_values())?;
    let rhs = integrate(&q.zip_map(phi, |a, b| a * b)?) + integrate(&problem.h().zip_map(phi, |a, b| a * b)?);
    Ok(IdentityCheck {
        lhs,
        rhs,
        rel_gap: (lhs - rhs).abs() / (lhs.abs() + rhs.abs() + 1e-300),
    })
}

/// The deterministic start family `{0, ±α, ±tφ₁ : t ∈ {1, 5, 25, 125}}`
/// followed by `extra` (branch extrapolants). `α` is omitted when it cannot
/// be constructed.
pub fn multistart_family(
    problem: &ProblemSpec,
    lambda: f64,
    phi1: &GridFunction,
    extra: &[GridFunction],
) -> Vec<GridFunction> {
    let grid = *problem.grid();
    let mut starts = vec![GridFunction::zeros(grid)];
    if let Ok(alpha) = construct_lower_solution(problem, lambda.max(0.0)) {
        starts.push(alpha.scaled(-1.0));
        starts.push(alpha);
    }
    for t in [1.0, 5.0, 25.0, 125.0] {
        starts.push(phi1.scaled(t));
        starts.push(phi1.scaled(-t));
    }
    starts.extend(extra.iter().cloned());
    starts
}

/// `count` seeded pseudo-random starts: `A·φ₁^p + B·φ₁·sin(m·θ)`, with a
/// log-uniform amplitude `A ∈ ±[0.1, 150]`.
pub fn random_starts(phi1: &GridFunction, count: usize, seed: u64) -> Vec<GridFunction> {
    let grid = *phi1.grid();
    let (lx, ly) = match grid.domain() {
        Domain::Interval { length } => (length, 1.0),
        Domain::Rectangle { lx, ly } => (lx, ly),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            let amp = sign * 10f64.powf(rng.random_range(-1.0..150f64.log10()));
            let p = rng.random_range(0.5..3.0);
            let b = amp * rng.random_range(-0.5..0.5);
            let m = rng.random_range(1..5) as f64;
            let values = (0..grid.len())
                .map(|k| {
                    let (x, y) = grid.coords(k);
                    let theta = x / lx + y.unwrap_or(0.0) / ly;
                    let ph = phi1.values()[k];
                    amp * ph.powf(p) + b * ph * (m * std::f64::consts::PI * theta).sin()
                })
                .collect();
            GridFunction::new(grid, values).expect("finite start")
        })
        .collect()
}

/// Runs [`newton_direct`] from every start and returns the converged reports
/// (errors count as failures).
pub fn multistart_solve(
    problem: &ProblemSpec,
    lambda: f64,
    starts: &[GridFunction],
    cfg: &SolverConfig,
) -> Vec<SolveReport> {
    starts
        .iter()
        .filter_map(|s| newton_direct(problem, lambda, s, cfg).ok())
        .filter(|r| r.converged)
        .collect()
}

/// Pulls a transformed iterate back and evaluates the direct residual.
pub fn pulled_back_residual(problem: &ProblemSpec, lambda: f64, v: &GridFunction) -> Result<f64> {
    let mu = require_constant_mu(problem)?;
    let u = cole_hopf_inverse(v, mu)?;
    Ok(residual_direct(problem, lambda, &u)?.sup_norm())
}

/// `v = e^{μu} − 1` for constant-μ problems.
pub fn to_transformed(problem: &ProblemSpec, u: &GridFunction) -> Result<GridFunction> {
    cole_hopf_forward(u, require_constant_mu(problem)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::gradient_sq;

    fn flat(n: usize, h: f64) -> ProblemSpec {
        let g = Grid::interval(1.0, n).unwrap();
        ProblemSpec::with_constant_mu(g, |_, _| 1.0, move |_, _| h, 1.0).unwrap()
    }

    #[test]
    fn zero_is_a_solution_when_h_vanishes() {
        let p = flat(31, 0.0);
        let z = GridFunction::zeros(*p.grid());
        assert_eq!(residual_direct(&p, 3.0, &z).unwrap().sup_norm(), 0.0);
        let r = newton_direct(&p, 3.0, &z, &SolverConfig::default()).unwrap();
        assert!(r.converged && r.iterations == 0);
        let r = newton_transformed(&p, 3.0, &z, &SolverConfig::default()).unwrap();
        assert!(r.converged && r.solution.sup_norm() == 0.0);
    }

    #[test]
    fn linear_solution_leaves_only_the_gradient_term() {
        let p = flat(63, -1.0);
        let op = build_operator(p.grid(), None).unwrap();
        let u = linear_solve(&op, p.h()).unwrap();
        let r = residual_direct(&p, 0.0, &u).unwrap();
        let q = weighted_gradient_term(&u, &p.mu_values()).unwrap();
        assert!(r.distance(&q.scaled(-1.0)).unwrap() < 1e-12);
        // The fitted term is the central-difference gradient up to O(h²).
        let g = gradient_sq(&u);
        assert!(q.distance(&g).unwrap() < 10.0 * p.grid().spacing().powi(2));
    }

    #[test]
    fn manufactured_solution_through_the_transform() {
        // λ = 0, μ = 1: v solves −Δv − hv = h, so u = ln(1+v) solves the
        // direct problem.
        let p = flat(127, -1.0);
        let d = p.h().scaled(-1.0);
        let op = build_operator(p.grid(), Some(&d)).unwrap();
        let v = linear_solve(&op, p.h()).unwrap();
        let u = cole_hopf_inverse(&v, 1.0).unwrap();
        assert!(residual_direct(&p, 0.0, &u).unwrap().sup_norm() < 1e-9);
    }

    #[test]
    fn direct_and_transformed_newton_agree() {
        let p = flat(127, -1.0);
        let z = GridFunction::zeros(*p.grid());
        let cfg = SolverConfig::default();
        let d = newton_direct(&p, 0.0, &z, &cfg).unwrap();
        let t = newton_transformed(&p, 0.0, &z, &cfg).unwrap();
        assert!(d.converged && t.converged);
        assert!(d.solution.max() < 0.0);
        assert!(d.solution.distance(&t.solution).unwrap() <= 1e-8);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let g = Grid::interval(1.0, 31).unwrap();
        let p = ProblemSpec::new(
            g,
            GridFunction::from_fn(g, |x, _| 1.0 + x * x),
            GridFunction::from_fn(g, |x, _| x.cos()),
            crate::problem::Mu::Variable {
                field: GridFunction::from_fn(g, |x, _| 1.0 + 0.5 * x),
                mu1: 0.5,
                mu2: 1.5,
            },
        )
        .unwrap();
        let u = GridFunction::from_fn(g, |x, _| (3.0 * x).sin() * 0.7);
        let jac = jacobian_direct(&p, 2.0, &u);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let eps = 1e-6;
        for _ in 0..10 {
            let dir: Vec<f64> = (0..g.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let df = GridFunction::new(g, dir.clone()).unwrap();
            let fp = residual_direct(&p, 2.0, &u.axpby(1.0, &df, eps).unwrap()).unwrap();
            let fm = residual_direct(&p, 2.0, &u.axpby(1.0, &df, -eps).unwrap()).unwrap();
            let jd = jac.mul_vec(&dir);
            for k in 0..g.len() {
                let fd = (fp.values()[k] - fm.values()[k]) / (2.0 * eps);
                assert!((fd - jd[k]).abs() <= 1e-5 * (1.0 + fd.abs()), "{fd} vs {}", jd[k]);
            }
        }
    }

    #[test]
    fn lower_solution_examples() {
        let p = flat(127, 0.0);
        let a = construct_lower_solution(&p, 0.0).unwrap();
        assert!((a.min() + 0.125).abs() < 1e-3);
        for (x, v) in a.values().iter().enumerate() {
            let (x, _) = p.grid().coords(x);
            let s = x + 0.5;
            assert!((v + s * (1.0 - s) / 2.0).abs() < 1e-10);
        }
        for (lambda, h) in [(0.5, -1.0), (3.0, 2.0), (15.0, 0.0), (30.0, -1.0)] {
            let p = flat(63, h);
            let a = construct_lower_solution(&p, lambda).unwrap();
            assert!(a.max() <= 0.0);
            assert!(verify_lower(&p, lambda, &a).unwrap().holds);
        }
    }

    #[test]
    fn upper_solution_at_zero() {
        let p = flat(127, -2.0);
        let b = construct_upper_solution_p0(&p).unwrap().unwrap();
        assert_eq!(b.sup_norm(), 0.0);
        let p = flat(127, 1.0);
        let b = construct_upper_solution_p0(&p).unwrap().unwrap();
        assert!(b.min() > 0.0);
        assert!(verify_upper(&p, 0.0, &b).unwrap().holds);
        let a = construct_lower_solution(&p, 0.0).unwrap();
        assert!(a.values().iter().zip(b.values()).all(|(x, y)| x <= y));
        assert!(construct_upper_solution_p0(&flat(127, 10.0)).unwrap().is_none());
    }

    #[test]
    fn verification_examples() {
        let p = flat(63, -1.0);
        let z = GridFunction::zeros(*p.grid());
        assert!(verify_upper(&p, 2.0, &z).unwrap().holds);
        assert!(!verify_lower(&p, 2.0, &z).unwrap().holds);
        let p = flat(63, 1.0);
        assert!(verify_lower(&p, 2.0, &z).unwrap().holds);
    }

    #[test]
    fn monotone_iteration_brackets_the_newton_solution() {
        let p = flat(63, -1.0);
        let cfg = SolverConfig::default();
        let alpha = construct_lower_solution(&p, 0.0).unwrap();
        let av = to_transformed(&p, &alpha).unwrap();
        let bv = GridFunction::zeros(*p.grid());
        let lo = monotone_iterate(&p, 0.0, &av, &bv, MonotoneStart::Lower, &cfg).unwrap();
        let hi = monotone_iterate(&p, 0.0, &av, &bv, MonotoneStart::Upper, &cfg).unwrap();
        let nw = newton_direct(&p, 0.0, &bv, &cfg).unwrap();
        assert!(lo.converged && hi.converged && nw.converged);
        assert!(lo.solution.distance(&nw.solution).unwrap() < 1e-9);
        assert!(hi.solution.distance(&nw.solution).unwrap() < 1e-9);
        let exact = nw.transformed.clone().unwrap_or(to_transformed(&p, &nw.solution).unwrap());
        let fixed = monotone_iterate(&p, 0.0, &exact, &exact, MonotoneStart::Lower, &cfg).unwrap();
        assert!(fixed.solution.distance(&nw.solution).unwrap() < 1e-10);
    }

    #[test]
    fn monotone_rejects_non_lower_input() {
        let p = flat(31, -1.0);
        let z = GridFunction::zeros(*p.grid());
        let e = monotone_iterate(&p, 0.0, &z, &z, MonotoneStart::Lower, &SolverConfig::default());
        assert!(matches!(e, Err(Error::Certificate { .. })));
    }

    #[test]
    fn negative_upper_solutions() {
        let p = flat(63, 0.0);
        let g1 = gamma1(&p).unwrap().value;
        assert!(construct_negative_upper_solution(&p, 0.9 * g1, 1.0).unwrap().is_none());
        let nu = construct_negative_upper_solution(&p, 1.5 * g1, 1.0).unwrap().unwrap();
        assert!(nu.beta.max() < 0.0 && nu.lambda0 > g1);
        assert!(verify_upper(&p, 1.5 * g1, &nu.beta).unwrap().holds);

        let p = flat(63, 1.0);
        let nu = construct_negative_upper_solution(&p, 1.5 * g1, 1.0).unwrap().unwrap();
        assert!(nu.beta.max() < 0.0);
        let pk = p.with_h(p.h().scaled(nu.k)).unwrap();
        assert!(verify_upper(&pk, 1.5 * g1, &nu.beta).unwrap().holds);
    }

    #[test]
    fn identity_on_solutions() {
        let p = flat(511, -1.0);
        let z = GridFunction::zeros(*p.grid());
        let r = newton_direct(&p, 0.5, &z, &SolverConfig::default()).unwrap();
        assert!(r.converged);
        let id = check_identity_phi1(&p, 0.5, &r.solution).unwrap();
        assert!(id.rel_gap <= 1e-3, "{id:?}");
        let p0 = flat(31, 0.0);
        let id = check_identity_phi1(&p0, 1.0, &GridFunction::zeros(*p0.grid())).unwrap();
        assert_eq!((id.lhs, id.rhs), (0.0, 0.0));
    }

    #[test]
    fn deflation_finds_the_second_solution() {
        let p = flat(127, -1.0);
        let cfg = SolverConfig::default();
        let z = GridFunction::zeros(*p.grid());
        let first = newton_direct(&p, 0.5, &z, &cfg).unwrap();
        let phi = gamma1(&p).unwrap().function;
        let mut found = None;
        for s in multistart_family(&p, 0.5, &phi, &[]) {
            if let Ok(r) = newton_deflated(&p, 0.5, &s, &[first.solution.clone()], &cfg) {
                if r.converged {
                    found = Some(r);
                    break;
                }
            }
        }
        let second = found.expect("second solution");
        assert!(second.solution.max() > 0.0);
        let cert = OrderedCertificate::new(&first.solution, &second.solution, &phi).unwrap();
        assert!(cert.holds && cert.max_violation < 0.0);
    }

    #[test]
    fn random_starts_are_reproducible() {
        let g = Grid::interval(1.0, 31).unwrap();
        let phi = GridFunction::from_fn(g, |x, _| (std::f64::consts::PI * (x + 0.5)).sin());
        assert_eq!(random_starts(&phi, 5, 9), random_starts(&phi, 5, 9));
        assert_ne!(random_starts(&phi, 5, 9), random_starts(&phi, 5, 10));
    }
}
