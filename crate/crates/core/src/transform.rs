//! Exponential changes of variables that remove the quadratic gradient term,
//! and the nonlinearities of the transformed problems.
//!
//! Two conventions are exposed with distinct names:
//! * `v = e^{μu} − 1` ([`cole_hopf_forward`] / [`cole_hopf_inverse`]), the
//!   variable of the semilinear problem `−Δv − μhv = λc(1+v)ln(1+v) + μh`;
//! * `w = (e^{μu} − 1)/μ` ([`scaled_transform`] / [`scaled_inverse`]).

use crate::error::{Error, Result};
use crate::grid::{GridFunction, EXP_LIMIT};

fn check_mu(mu: f64) -> Result<()> {
    if mu > 0.0 && mu.is_finite() {
        Ok(())
    } else {
        Err(Error::Input(format!("mu must be positive, got {mu}")))
    }
}

/// `v = e^{μu} − 1` nodewise.
pub fn cole_hopf_forward(u: &GridFunction, mu: f64) -> Result<GridFunction> {
    check_mu(mu)?;
    let mut out = Vec::with_capacity(u.len());
    for (node, &x) in u.values().iter().enumerate() {
        let e = mu * x;
        if e > EXP_LIMIT {
            return Err(Error::Range { node, exponent: e });
        }
        out.push(e.exp_m1());
    }
    GridFunction::new(*u.grid(), out)
}

/// `u = ln(1 + v)/μ` nodewise; every node must satisfy `v > −1`.
pub fn cole_hopf_inverse(v: &GridFunction, mu: f64) -> Result<GridFunction> {
    check_mu(mu)?;
    let mut out = Vec::with_capacity(v.len());
    for (node, &x) in v.values().iter().enumerate() {
        if x <= -1.0 {
            return Err(Error::Domain {
                node,
                detail: format!("v = {x} is not above -1"),
            });
        }
        out.push(x.ln_1p() / mu);
    }
    GridFunction::new(*v.grid(), out)
}

/// `w = (e^{μᵢu} − 1)/μᵢ` nodewise.
pub fn scaled_transform(u: &GridFunction, mu_i: f64) -> Result<GridFunction> {
    Ok(cole_hopf_forward(u, mu_i)?.scaled(1.0 / mu_i))
}

/// `g_i(s) = ln(1 + μᵢs)/μᵢ`, the inverse of [`scaled_transform`].
pub fn scaled_inverse(w: &GridFunction, mu_i: f64) -> Result<GridFunction> {
    check_mu(mu_i)?;
    cole_hopf_inverse(&w.scaled(mu_i), mu_i)
}

/// The odd function `m(s) = (1/μ̄)(1+μ̄s)ln(1+μ̄s)` for `s ≥ 0`, extended by
/// `m(−s) = −m(s)`.
pub fn m_nonlinearity(s: f64, mu_bar: f64) -> Result<f64> {
    check_mu(mu_bar)?;
    let t = mu_bar * s.abs();
    if !t.is_finite() {
        return Err(Error::Domain {
            node: 0,
            detail: format!("m(s) undefined for s = {s}"),
        });
    }
    let value = (1.0 + t) * t.ln_1p() / mu_bar;
    Ok(if s < 0.0 { -value } else { value })
}

/// Right-hand side `λc(1+v)ln(1+v) + μhv + μh` of the transformed equation
/// (constant `μ`).
#[derive(Debug, Clone, PartialEq)]
pub struct SemilinearRhs {
    pub lambda: f64,
    pub mu: f64,
    pub c: GridFunction,
    pub h: GridFunction,
}

impl SemilinearRhs {
    pub fn new(lambda: f64, mu: f64, c: GridFunction, h: GridFunction) -> Result<Self> {
        check_mu(mu)?;
        c.check_same_grid(&h)?;
        if c.min() < 0.0 {
            return Err(Error::Input("weight c must be nonnegative".into()));
        }
        if c.max() <= 0.0 {
            return Err(Error::Input("weight c must not vanish identically".into()));
        }
        Ok(Self { lambda, mu, c, h })
    }

    /// Nodewise `f(v)` and `f′(v)`.
    pub fn eval(&self, v: &GridFunction) -> Result<(GridFunction, GridFunction)> {
        self.c.check_same_grid(v)?;
        let n = v.len();
        let mut f = Vec::with_capacity(n);
        let mut fp = Vec::with_capacity(n);
        for k in 0..n {
            let x = v.values()[k];
            if x <= -1.0 {
                return Err(Error::Domain {
                    node: k,
                    detail: format!("v = {x} is not above -1"),
                });
            }
            let (fk, fpk) = self.eval_node(k, x);
            f.push(fk);
            fp.push(fpk);
        }
        Ok((
            GridFunction::new(*v.grid(), f)?,
            GridFunction::new(*v.grid(), fp)?,
        ))
    }

    #[inline]
    pub(crate) fn eval_node(&self, k: usize, x: f64) -> (f64, f64) {
        let lc = self.lambda * self.c.values()[k];
        let mh = self.mu * self.h.values()[k];
        let l = x.ln_1p();
        (lc * (1.0 + x) * l + mh * x + mh, lc * (l + 1.0) + mh)
    }
}

/// Convenience wrapper for [`SemilinearRhs::eval`].
pub fn semilinear_eval(rhs: &SemilinearRhs, v: &GridFunction) -> Result<(GridFunction, GridFunction)> {
    rhs.eval(v)
}
