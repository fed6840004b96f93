//! Continuation in `λ` and in the auxiliary parameters `a` (data `h + ac`)
//! and `k` (data `k h̃⁺ − h̃⁻`), fold detection, deflation and the blow-up
//! diagnostics.
//!
//! All three parameters enter affinely, so one [`Family`] type covers them:
//! `λ(p) = λ₀ + p·dλ` and `h(p) = h₀ + p·dh`.

use crate::eigen::{gamma1, nu1};
use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::linalg::{norm_inf, BandLu, Pivoting};
use crate::problem::ProblemSpec;
use crate::solve::{
    construct_lower_solution, direct_tolerance, jacobian_direct, multistart_family, newton_deflated,
    newton_direct, random_starts, residual_direct, OrderedCertificate, SolveReport, SolverConfig,
    DISTINCT_ROOT_DISTANCE,
};

#[derive(Debug, Clone, PartialEq)]
pub struct BranchPoint {
    pub param: f64,
    pub solution: GridFunction,
    pub sup_norm: f64,
    pub min_val: f64,
    pub max_val: f64,
    pub step_used: f64,
    pub residual_inf: f64,
    /// Set on the point that approximates the fold.
    pub fold: bool,
}

impl BranchPoint {
    fn new(param: f64, solution: GridFunction, step_used: f64, residual_inf: f64) -> Self {
        Self {
            param,
            sup_norm: solution.sup_norm(),
            min_val: solution.min(),
            max_val: solution.max(),
            solution,
            step_used,
            residual_inf,
            fold: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fold {
    pub param_estimate: f64,
    /// Parameters of the two refined points whose tangents straddle the fold.
    pub bracket: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Fold,
    ParamLimit,
    BlowupGuard,
    SolverFailure,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::Fold => "fold",
            Termination::ParamLimit => "param_limit",
            Termination::BlowupGuard => "blowup_guard",
            Termination::SolverFailure => "solver_failure",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub points: Vec<BranchPoint>,
    pub fold: Option<Fold>,
    pub terminated_by: Termination,
}

impl Branch {
    pub fn last(&self) -> Option<&BranchPoint> {
        self.points.last()
    }

    /// The point reached at the parameter limit, if the run got there.
    pub fn endpoint(&self) -> Option<&BranchPoint> {
        match self.terminated_by {
            Termination::ParamLimit => self.points.last(),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuationConfig {
    /// Initial parameter step; defaults to `1e-2·max(span, 1)`.
    pub initial_step: Option<f64>,
    /// Largest parameter step; defaults to `0.1·max(span, 1)`.
    pub max_step: Option<f64>,
    /// Smallest arclength step before giving up.
    pub min_step: f64,
    /// Natural stepping switches to arclength below this fraction of the span.
    pub switch_fraction: f64,
    pub blowup_guard: f64,
    /// Relative arclength resolution of the fold refinement.
    pub fold_resolution: f64,
    /// Stop this many points after the fold; `None` keeps going to the limit.
    pub points_after_fold: Option<usize>,
    pub max_points: usize,
    pub corrector_iters: usize,
    pub solver: SolverConfig,
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        Self {
            initial_step: None,
            max_step: None,
            min_step: 1e-8,
            switch_fraction: 1e-6,
            blowup_guard: 1e6,
            fold_resolution: 1e-4,
            points_after_fold: Some(5),
            max_points: 5000,
            corrector_iters: 30,
            solver: SolverConfig {
                max_iters: 30,
                ..SolverConfig::default()
            },
        }
    }
}

/// One-parameter affine family of problems.
#[derive(Debug, Clone, PartialEq)]
pub struct Family {
    base: ProblemSpec,
    lambda0: f64,
    dlambda: f64,
    h0: GridFunction,
    dh: GridFunction,
}

impl Family {
    /// Parameter `λ`, data fixed.
    pub fn in_lambda(base: &ProblemSpec) -> Self {
        Self {
            base: base.clone(),
            lambda0: 0.0,
            dlambda: 1.0,
            h0: base.h().clone(),
            dh: GridFunction::zeros(*base.grid()),
        }
    }

    /// Parameter `a`, data `h + a·c`, `λ` fixed.
    pub fn in_a(base: &ProblemSpec, lambda: f64) -> Self {
        Self {
            base: base.clone(),
            lambda0: lambda,
            dlambda: 0.0,
            h0: base.h().clone(),
            dh: base.c().clone(),
        }
    }

    /// Parameter `k`, data `k·h̃⁺ − h̃⁻`, `λ` fixed.
    pub fn in_k(base: &ProblemSpec, lambda: f64, h_tilde: &GridFunction) -> Self {
        Self {
            base: base.clone(),
            lambda0: lambda,
            dlambda: 0.0,
            h0: h_tilde.negative_part().scaled(-1.0),
            dh: h_tilde.positive_part(),
        }
    }

    pub fn lambda_at(&self, p: f64) -> f64 {
        self.lambda0 + p * self.dlambda
    }

    pub fn problem_at(&self, p: f64) -> Result<ProblemSpec> {
        if self.dh.sup_norm() == 0.0 {
            return Ok(self.base.with_h(self.h0.clone())?);
        }
        self.base.with_h(self.h0.axpby(1.0, &self.dh, p)?)
    }

    /// `∂F/∂p = −dλ·c·u − dh`.
    fn dparam(&self, u: &GridFunction) -> Vec<f64> {
        let c = self.base.c().values();
        u.values()
            .iter()
            .zip(c)
            .zip(self.dh.values())
            .map(|((ui, ci), dhi)| -self.dlambda * ci * ui - dhi)
            .collect()
    }
}

/// Tangent `(τ_u, τ_p)` normalised in `vol·|τ_u|² + τ_p² = 1`.
#[derive(Debug, Clone)]
struct Tangent {
    u: Vec<f64>,
    p: f64,
}

struct Continuer<'a> {
    family: &'a Family,
    cfg: &'a ContinuationConfig,
    vol: f64,
}

impl<'a> Continuer<'a> {
    fn dot(&self, a: &Tangent, b: &Tangent) -> f64 {
        self.vol * a.u.iter().zip(&b.u).map(|(x, y)| x * y).sum::<f64>() + a.p * b.p
    }

    fn tangent(&self, p: f64, u: &GridFunction, orient: Orientation) -> Result<Tangent> {
        let prob = self.family.problem_at(p)?;
        let jac = jacobian_direct(&prob, self.family.lambda_at(p), u);
        let lu = BandLu::factor(&jac, Pivoting::Partial)?;
        let a = lu.solve(&self.family.dparam(u));
        let mut t = Tangent {
            u: a.iter().map(|x| -x).collect(),
            p: 1.0,
        };
        let norm = self.dot(&t, &t).sqrt();
        t.u.iter_mut().for_each(|x| *x /= norm);
        t.p /= norm;
        let flip = match orient {
            Orientation::Param(dir) => t.p * dir < 0.0,
            Orientation::Follow(prev) => self.dot(&t, prev) < 0.0,
        };
        if flip {
            t.u.iter_mut().for_each(|x| *x = -*x);
            t.p = -t.p;
        }
        Ok(t)
    }

    /// Pseudo-arclength corrector on the hyperplane through the predictor
    /// orthogonal to `tau`.
    fn correct(&self, pred_u: &GridFunction, pred_p: f64, tau: &Tangent) -> Option<(GridFunction, f64, f64)> {
        let mut u = pred_u.clone();
        let mut p = pred_p;
        for _ in 0..=self.cfg.corrector_iters {
            let prob = self.family.problem_at(p).ok()?;
            let lambda = self.family.lambda_at(p);
            let f = residual_direct(&prob, lambda, &u).ok()?;
            let d = u.values().iter().zip(pred_u.values()).zip(&tau.u);
            let n = self.vol * d.map(|((a, b), t)| (a - b) * t).sum::<f64>() + tau.p * (p - pred_p);
            let rn = f.sup_norm();
            let tol = direct_tolerance(&prob, lambda, u.values(), &self.cfg.solver);
            if rn <= tol && n.abs() <= 1e-10 * (1.0 + p.abs()) {
                return Some((u, p, rn));
            }
            if !rn.is_finite() || rn > 1e12 {
                return None;
            }
            let jac = jacobian_direct(&prob, lambda, &u);
            let lu = BandLu::factor(&jac, Pivoting::Partial).ok()?;
            let a = lu.solve(&self.family.dparam(&u));
            let neg: Vec<f64> = f.values().iter().map(|x| -x).collect();
            let b = lu.solve(&neg);
            let ta: f64 = tau.u.iter().zip(&a).map(|(x, y)| x * y).sum();
            let tb: f64 = tau.u.iter().zip(&b).map(|(x, y)| x * y).sum();
            let denom = tau.p - self.vol * ta;
            if denom == 0.0 || !denom.is_finite() {
                return None;
            }
            let dp = (-n - self.vol * tb) / denom;
            let vals: Vec<f64> = u
                .values()
                .iter()
                .zip(b.iter().zip(&a))
                .map(|(x, (bi, ai))| x + bi - dp * ai)
                .collect();
            u = GridFunction::new(*u.grid(), vals).ok()?;
            p += dp;
        }
        None
    }

    fn advance(&self, u: &GridFunction, p: f64, tau: &Tangent, s: f64) -> Option<(GridFunction, f64, f64)> {
        let vals: Vec<f64> = u.values().iter().zip(&tau.u).map(|(x, t)| x + s * t).collect();
        let pred = GridFunction::new(*u.grid(), vals).ok()?;
        let pred_p = p + s * tau.p;
        let (v, q, r) = self.correct(&pred, pred_p, tau)?;
        // Reject corrections larger than half the step: likely a jump.
        let dv = Tangent {
            u: v.values().iter().zip(pred.values()).map(|(a, b)| a - b).collect(),
            p: q - pred_p,
        };
        if self.dot(&dv, &dv).sqrt() > 0.5 * s {
            return None;
        }
        Some((v, q, r))
    }
}

enum Orientation<'t> {
    Param(f64),
    Follow(&'t Tangent),
}

/// Continues a solution of `family` from `p_start` towards `p_limit`.
pub fn continue_family(
    family: &Family,
    p_start: f64,
    u_start: &GridFunction,
    p_limit: f64,
    cfg: &ContinuationConfig,
) -> Result<Branch> {
    let prob0 = family.problem_at(p_start)?;
    let r0 = residual_direct(&prob0, family.lambda_at(p_start), u_start)?.sup_norm();
    let tol0 = direct_tolerance(&prob0, family.lambda_at(p_start), u_start.values(), &cfg.solver);
    if r0 > tol0.max(1e-9) {
        return Err(Error::Precondition(format!(
            "starting point is not a solution (residual {r0:e})"
        )));
    }
    let dir = if p_limit >= p_start { 1.0 } else { -1.0 };
    let span = (p_limit - p_start).abs();
    let scale = span.max(1.0);
    let max_step = cfg.max_step.unwrap_or(0.1 * scale);
    let mut dp = cfg.initial_step.unwrap_or(1e-2 * scale).min(max_step);
    let lo = p_start.min(p_limit);
    let hi = p_start.max(p_limit);
    let c = Continuer {
        family,
        cfg,
        vol: u_start.grid().cell_volume(),
    };

    let mut points = vec![BranchPoint::new(p_start, u_start.clone(), 0.0, r0)];
    let mut u = u_start.clone();
    let mut p = p_start;

    // Natural-parameter stepping.
    let mut last_step = dp;
    let switched = loop {
        if (p_limit - p) * dir <= 0.0 {
            return Ok(Branch { points, fold: None, terminated_by: Termination::ParamLimit });
        }
        if points.len() >= cfg.max_points {
            return Ok(Branch { points, fold: None, terminated_by: Termination::SolverFailure });
        }
        if dp < cfg.switch_fraction * scale {
            break true;
        }
        let Ok(tau) = c.tangent(p, &u, Orientation::Param(dir)) else { break true };
        let z: Vec<f64> = tau.u.iter().map(|t| t / tau.p).collect();
        let step = dp.min((p_limit - p).abs());
        let next_p = if step == (p_limit - p).abs() { p_limit } else { p + dir * step };
        let pred_vals: Vec<f64> = u.values().iter().zip(&z).map(|(x, zi)| x + (next_p - p) * zi).collect();
        let pred = GridFunction::new(*u.grid(), pred_vals)?;
        let prob = family.problem_at(next_p)?;
        let lambda = family.lambda_at(next_p);
        let ok = match newton_direct(&prob, lambda, &pred, &cfg.solver) {
            Ok(r) if r.converged => {
                let corr = r.solution.distance(&pred)?;
                let allowed = (0.5 * step * norm_inf(&z)).max(1e-6 * (1.0 + u.sup_norm()));
                let resid = residual_direct(&prob, lambda, &r.solution)?.sup_norm();
                (corr <= allowed && resid <= r.tolerance.max(1e-9)).then_some((r, resid))
            }
            _ => None,
        };
        match ok {
            Some((r, resid)) => {
                u = r.solution;
                p = next_p;
                last_step = step;
                points.push(BranchPoint::new(p, u.clone(), step, resid));
                if u.sup_norm() > cfg.blowup_guard {
                    return Ok(Branch { points, fold: None, terminated_by: Termination::BlowupGuard });
                }
                dp = (1.5 * dp).min(max_step);
            }
            None => dp *= 0.5,
        }
    };
    debug_assert!(switched);

    // Pseudo-arclength stepping.
    let mut tau = match c.tangent(p, &u, Orientation::Param(dir)) {
        Ok(t) => t,
        Err(_) => return Ok(Branch { points, fold: None, terminated_by: Termination::SolverFailure }),
    };
    let mut s = (last_step / tau.p.abs().max(1e-12)).min(max_step).max(16.0 * cfg.min_step);
    let mut fold: Option<Fold> = None;
    let mut after = 0usize;
    loop {
        if points.len() >= cfg.max_points {
            return Ok(Branch { points, fold, terminated_by: Termination::SolverFailure });
        }
        let Some((v, q, r)) = c.advance(&u, p, &tau, s) else {
            s *= 0.5;
            if s < cfg.min_step {
                let t = if fold.is_some() { Termination::Fold } else { Termination::SolverFailure };
                return Ok(Branch { points, fold, terminated_by: t });
            }
            continue;
        };
        let Ok(t_new) = c.tangent(q, &v, Orientation::Follow(&tau)) else {
            s *= 0.5;
            continue;
        };
        if fold.is_none() && t_new.p * dir < 0.0 {
            let (f, fp) = refine_fold(&c, &u, p, &tau, s, dir);
            fold = Some(f);
            if let Some(fp) = fp {
                points.push(fp);
            }
        }
        points.push(BranchPoint::new(q, v.clone(), s, r));
        u = v;
        p = q;
        tau = t_new;
        if u.sup_norm() > cfg.blowup_guard {
            return Ok(Branch { points, fold, terminated_by: Termination::BlowupGuard });
        }
        if fold.is_some() {
            after += 1;
            if cfg.points_after_fold.is_some_and(|m| after >= m) {
                return Ok(Branch { points, fold, terminated_by: Termination::Fold });
            }
        }
        if p < lo || p > hi {
            let t = if fold.is_some() { Termination::Fold } else { Termination::ParamLimit };
            return Ok(Branch { points, fold, terminated_by: t });
        }
        s = (1.5 * s).min(max_step);
    }
}

/// Bisects in arclength between `(u, p)` (tangent still pointing along
/// `dir`) and the point a step `s` further, whose tangent has turned.
fn refine_fold(
    c: &Continuer<'_>,
    u: &GridFunction,
    p: f64,
    tau: &Tangent,
    s: f64,
    dir: f64,
) -> (Fold, Option<BranchPoint>) {
    let (mut lo, mut hi) = (0.0, s);
    let mut p_lo = p;
    let mut p_hi = p + s * tau.p;
    let mut best: Option<BranchPoint> = None;
    let mut best_p = p;
    for _ in 0..60 {
        if hi - lo <= c.cfg.fold_resolution * s {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let Some((v, q, r)) = c.correct(
            &GridFunction::new(*u.grid(), u.values().iter().zip(&tau.u).map(|(x, t)| x + mid * t).collect())
                .expect("finite"),
            p + mid * tau.p,
            tau,
        ) else {
            break;
        };
        if q * dir > best_p * dir {
            best_p = q;
            let mut bp = BranchPoint::new(q, v.clone(), mid, r);
            bp.fold = true;
            best = Some(bp);
        }
        match c.tangent(q, &v, Orientation::Follow(tau)) {
            Ok(t) if t.p * dir > 0.0 => {
                lo = mid;
                p_lo = q;
            }
            Ok(_) => {
                hi = mid;
                p_hi = q;
            }
            Err(_) => break,
        }
    }
    (
        Fold {
            param_estimate: best_p,
            bracket: (p_lo.min(p_hi), p_lo.max(p_hi)),
        },
        best,
    )
}

/// Continuation in `λ` from a solution at `lambda_start` towards `lambda_limit`.
pub fn continue_lambda(
    problem: &ProblemSpec,
    lambda_start: f64,
    u_start: &GridFunction,
    lambda_limit: f64,
    cfg: &ContinuationConfig,
) -> Result<Branch> {
    continue_family(&Family::in_lambda(problem), lambda_start, u_start, lambda_limit, cfg)
}

/// Minimal solution at `lambda ≥ 0`: the unique `λ = 0` solution (Newton from
/// the constructed lower solution) followed along its branch.
pub fn minimal_solution(problem: &ProblemSpec, lambda: f64, cfg: &ContinuationConfig) -> Result<GridFunction> {
    let alpha = construct_lower_solution(problem, 0.0)?;
    let grid = *problem.grid();
    let mut u0 = None;
    for start in [alpha, GridFunction::zeros(grid)] {
        if let Ok(r) = newton_direct(problem, 0.0, &start, &SolverConfig::default()) {
            if r.converged {
                u0 = Some(r.solution);
                break;
            }
        }
    }
    let u0 = u0.ok_or_else(|| Error::Precondition("no solution found at lambda = 0".into()))?;
    if lambda == 0.0 {
        return Ok(u0);
    }
    let cfg = ContinuationConfig { points_after_fold: Some(0), ..*cfg };
    let branch = continue_lambda(problem, 0.0, &u0, lambda, &cfg)?;
    match branch.endpoint() {
        Some(pt) if pt.param == lambda => Ok(pt.solution.clone()),
        _ => Err(Error::Precondition(format!(
            "the minimal branch does not reach lambda = {lambda} (terminated by {})",
            branch.terminated_by.as_str()
        ))),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SecondSolution {
    pub report: SolveReport,
    /// Certificate for the pair ordered by the sign of the mean difference.
    pub certificate: OrderedCertificate,
}

/// Deflated Newton from the multistart family (plus `extra`), repelling
/// `first`. Returns the first distinct converged root, or the last report
/// with `converged = false` when every start fails.
pub fn find_second_solution(
    problem: &ProblemSpec,
    lambda: f64,
    first: &GridFunction,
    extra: &[GridFunction],
    cfg: &SolverConfig,
) -> Result<(SolveReport, Option<OrderedCertificate>)> {
    let phi = gamma1(problem)?.function;
    let starts = multistart_family(problem, lambda, &phi, extra);
    let known = [first.clone()];
    let mut last = None;
    for s in &starts {
        if s.distance(first)? < DISTINCT_ROOT_DISTANCE {
            continue;
        }
        let Ok(r) = newton_deflated(problem, lambda, s, &known, cfg) else { continue };
        if r.converged {
            let diff: f64 = r.solution.values().iter().zip(first.values()).map(|(a, b)| a - b).sum();
            let cert = if diff >= 0.0 {
                OrderedCertificate::new(first, &r.solution, &phi)?
            } else {
                OrderedCertificate::new(&r.solution, first, &phi)?
            };
            return Ok((r, Some(cert)));
        }
        last = Some(r);
    }
    let report = last.unwrap_or(SolveReport {
        solution: first.clone(),
        transformed: None,
        residual_inf: f64::INFINITY,
        tolerance: cfg.tol,
        iterations: 0,
        converged: false,
        formulation: crate::solve::Formulation::Direct,
    });
    Ok((report, None))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldSweep {
    pub estimate: f64,
    pub bracket: (f64, f64),
    pub branch: Branch,
}

/// Fold `A₁` of the family with data `h + a·c` at fixed `λ`, continued from
/// the minimal solution at `a = 0`.
pub fn sweep_nonexistence_a(problem: &ProblemSpec, lambda: f64, a_limit: f64, cfg: &ContinuationConfig) -> Result<FoldSweep> {
    let u0 = minimal_solution(problem, lambda, cfg)?;
    let branch = continue_family(&Family::in_a(problem, lambda), 0.0, &u0, a_limit, cfg)?;
    let fold = branch
        .fold
        .ok_or_else(|| Error::Precondition(format!("no fold in a up to {a_limit} ({})", branch.terminated_by.as_str())))?;
    Ok(FoldSweep {
        estimate: fold.param_estimate,
        bracket: fold.bracket,
        branch,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct KSweep {
    pub k_bar: f64,
    pub bracket: (f64, f64),
    pub nu1: f64,
    /// From `k = 0` through the fold.
    pub lower_branch: Branch,
    /// λ-continuation of the `k = 0` problem used to seed the sweep.
    pub seed_branch: Branch,
}

/// Fold `k̄` of `k ↦ (k h̃⁺ − h̃⁻)` at fixed `λ > ν₁`.
///
/// Seed: the `k = 0` problem (data `−h̃⁻`) is continued in `λ` from its
/// `λ = 0` solution, then the result is continued in `k`.
pub fn sweep_k(
    problem: &ProblemSpec,
    h_tilde: &GridFunction,
    lambda: f64,
    k_limit: f64,
    cfg: &ContinuationConfig,
) -> Result<KSweep> {
    if h_tilde.max() <= 0.0 {
        return Err(Error::Precondition("the positive part of h_tilde vanishes".into()));
    }
    let nu = nu1(problem, &h_tilde.negative_part())?.value;
    if lambda <= nu {
        return Err(Error::Precondition(format!("lambda = {lambda} must exceed nu1 = {nu}")));
    }
    let family = Family::in_k(problem, lambda, h_tilde);
    let p0 = family.problem_at(0.0)?;
    let z = GridFunction::zeros(*problem.grid());
    let start = newton_direct(&p0, 0.0, &z, &SolverConfig::default())?;
    if !start.converged {
        return Err(Error::Iteration {
            iterations: start.iterations,
            residual: start.residual_inf,
        });
    }
    let seed_cfg = ContinuationConfig { points_after_fold: Some(0), ..*cfg };
    let seed_branch = continue_lambda(&p0, 0.0, &start.solution, lambda, &seed_cfg)?;
    let seed = seed_branch
        .endpoint()
        .filter(|pt| pt.param == lambda)
        .ok_or_else(|| Error::Precondition("the k = 0 branch does not reach lambda".into()))?
        .solution
        .clone();
    let lower_branch = continue_family(&family, 0.0, &seed, k_limit, cfg)?;
    let fold = lower_branch
        .fold
        .ok_or_else(|| Error::Precondition(format!("no fold in k up to {k_limit}")))?;
    Ok(KSweep {
        k_bar: fold.param_estimate,
        bracket: fold.bracket,
        nu1: nu,
        lower_branch,
        seed_branch,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlowupRow {
    pub lambda: f64,
    pub sup_norm_u2: f64,
    /// `λ·‖u₂⁺‖∞`.
    pub product: f64,
    pub min_u1: f64,
    pub min_u2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlowupTable {
    pub rows: Vec<BlowupRow>,
    /// `−min` over all tracked solutions.
    pub empirical_bound: f64,
    pub guard_tripped: bool,
}

/// Tracks the minimal branch and the large branch as `λ` decreases through
/// `lambdas` (which must be decreasing and positive). The large branch is
/// seeded by deflation at the first value.
pub fn blowup_diagnostic(
    problem: &ProblemSpec,
    lambdas: &[f64],
    seed: u64,
    cfg: &ContinuationConfig,
) -> Result<BlowupTable> {
    if lambdas.is_empty() || lambdas.iter().any(|&l| l <= 0.0) || lambdas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Input("lambda sequence must be positive and decreasing".into()));
    }
    let lam0 = lambdas[0];
    let u1 = minimal_solution(problem, lam0, cfg)?;
    let phi = gamma1(problem)?.function;
    let extra = random_starts(&phi, 20, seed)
        .into_iter()
        .map(|s| s.map(f64::abs).scaled(1.0 / lam0))
        .collect::<Vec<_>>();
    let (second, _) = find_second_solution(problem, lam0, &u1, &extra, &cfg.solver.with_max_iters(200))?;
    if !second.converged {
        return Err(Error::Iteration {
            iterations: second.iterations,
            residual: second.residual_inf,
        });
    }
    let mut u1 = u1;
    let mut u2 = second.solution;
    let mut rows = Vec::new();
    let mut guard_tripped = false;
    let track_cfg = ContinuationConfig { points_after_fold: Some(0), ..*cfg };
    let mut at = lam0;
    for &lam in lambdas {
        if lam != at {
            let b2 = continue_lambda(problem, at, &u2, lam, &track_cfg)?;
            let b1 = continue_lambda(problem, at, &u1, lam, &track_cfg)?;
            if b2.terminated_by == Termination::BlowupGuard {
                guard_tripped = true;
                break;
            }
            match (b1.endpoint(), b2.endpoint()) {
                (Some(p1), Some(p2)) if p1.param == lam && p2.param == lam => {
                    u1 = p1.solution.clone();
                    u2 = p2.solution.clone();
                }
                _ => {
                    return Err(Error::Iteration {
                        iterations: b2.points.len(),
                        residual: f64::NAN,
                    })
                }
            }
            at = lam;
        }
        let sup = u2.positive_part().sup_norm();
        rows.push(BlowupRow {
            lambda: lam,
            sup_norm_u2: sup,
            product: lam * sup,
            min_u1: u1.min(),
            min_u2: u2.min(),
        });
    }
    let empirical_bound = rows
        .iter()
        .map(|r| -(r.min_u1.min(r.min_u2)))
        .fold(0.0, f64::max);
    Ok(BlowupTable {
        rows,
        empirical_bound,
        guard_tripped,
    })
}
