//! Solver recipes shared by the scenarios and the acceptance suite.

use quadgrad::eigen::gamma1;
use quadgrad::grid::{integrate, GridFunction};
use quadgrad::solve::{
    check_identity_phi1_with, construct_lower_solution, construct_negative_upper_solution,
    construct_upper_solution_p0, monotone_iterate, multistart_family, newton_direct, random_starts, to_transformed,
    MonotoneStart, SolveReport, SolverConfig,
};
use quadgrad::branch::{minimal_solution, ContinuationConfig};
use quadgrad::{Error, ProblemSpec, Result};

/// A lower and an upper solution at `λ`, in the `u` variable.
///
/// The upper solution is `0` when `h ≤ 0`, the constructed one when `λ = 0`,
/// and otherwise the minimal solution at the first of `λ + 1, λ + 1/2, …`
/// that the minimal branch reaches, when it is nonnegative.
pub fn ordered_pair(problem: &ProblemSpec, lambda: f64, cfg: &ContinuationConfig) -> Result<(GridFunction, GridFunction)> {
    let alpha = construct_lower_solution(problem, lambda)?;
    let grid = *problem.grid();
    let beta = if problem.h().max() <= 0.0 {
        GridFunction::zeros(grid)
    } else if lambda == 0.0 {
        construct_upper_solution_p0(problem)?
            .ok_or_else(|| Error::Precondition("no upper solution of the lambda = 0 problem".into()))?
    } else {
        if problem.h().min() < 0.0 {
            return Err(Error::Precondition("no upper solution recipe for sign-changing h at lambda > 0".into()));
        }
        let mut step = 1.0;
        let u = loop {
            match minimal_solution(problem, lambda + step, cfg) {
                Ok(u) => break u,
                Err(e) if step < 1e-3 => return Err(e),
                Err(_) => step *= 0.5,
            }
        };
        if u.min() < 0.0 {
            return Err(Error::Precondition("minimal solution above lambda is not nonnegative".into()));
        }
        u
    };
    Ok((alpha, beta))
}

/// Monotone iteration from `from` between the pair of [`ordered_pair`].
pub fn monotone_solve(
    problem: &ProblemSpec,
    lambda: f64,
    from: MonotoneStart,
    cfg: &ContinuationConfig,
) -> Result<SolveReport> {
    let (alpha, beta) = ordered_pair(problem, lambda, cfg)?;
    let av = to_transformed(problem, &alpha)?;
    let bv = to_transformed(problem, &beta)?;
    monotone_iterate(problem, lambda, &av, &bv, from, &cfg.solver)
}

/// Solution `u ≪ 0` at `λ > ν₁`: monotone iteration from the lower solution
/// below the anti-maximum upper solution. Fails when that upper solution
/// needs the positive part of `h` scaled down.
pub fn negative_solution(problem: &ProblemSpec, lambda: f64, cfg: &SolverConfig) -> Result<SolveReport> {
    let neg = construct_negative_upper_solution(problem, lambda, 1.0)?
        .ok_or_else(|| Error::Precondition(format!("no negative upper solution at lambda = {lambda}")))?;
    if problem.h().max() > 0.0 && neg.k < 1.0 {
        return Err(Error::Precondition(format!(
            "negative upper solution needs h+ scaled by {:.3e}; reduce h",
            neg.k
        )));
    }
    let alpha = construct_lower_solution(problem, lambda)?;
    let av = to_transformed(problem, &alpha)?;
    let bv = to_transformed(problem, &neg.beta)?;
    monotone_iterate(problem, lambda, &av, &bv, MonotoneStart::Lower, cfg)
}

/// Outcome of a search that is expected to find nothing.
#[derive(Debug, Clone, PartialEq)]
pub struct AbsenceProbe {
    pub starts: usize,
    pub converged: usize,
    /// Smallest final residual over all starts.
    pub best_residual: f64,
    /// `min |lhs − rhs|` of the φ₁ identity over the final iterates.
    pub min_identity_gap: f64,
    /// `spacing²·(∫|h|φ₁ + 1)`, the size of a discretisation error in the identity.
    pub budget: f64,
    pub best: Option<SolveReport>,
}

/// Runs direct Newton from the multistart family plus `n_random` seeded random
/// starts, and evaluates the φ₁ identity on every final iterate.
pub fn absence_probe(problem: &ProblemSpec, lambda: f64, n_random: usize, seed: u64, cfg: &SolverConfig) -> Result<AbsenceProbe> {
    let pair = gamma1(problem)?;
    let mut starts = multistart_family(problem, lambda, &pair.function, &[]);
    starts.extend(random_starts(&pair.function, n_random, seed));
    let mut converged = 0;
    let mut best_residual = f64::INFINITY;
    let mut min_gap = f64::INFINITY;
    let mut best: Option<SolveReport> = None;
    for s in &starts {
        let Ok(r) = newton_direct(problem, lambda, s, cfg) else { continue };
        if r.converged {
            converged += 1;
        }
        if let Ok(id) = check_identity_phi1_with(problem, lambda, &r.solution, &pair) {
            if (id.lhs - id.rhs).is_finite() {
                min_gap = min_gap.min((id.lhs - id.rhs).abs());
            }
        }
        if r.residual_inf < best_residual {
            best_residual = r.residual_inf;
            best = Some(r);
        }
    }
    let weight = integrate(&problem.h().zip_map(&pair.function, |h, p| h.abs() * p)?);
    let budget = problem.grid().min_spacing().powi(2) * (weight + 1.0);
    Ok(AbsenceProbe {
        starts: starts.len(),
        converged,
        best_residual,
        min_identity_gap: min_gap,
        budget,
        best,
    })
}
