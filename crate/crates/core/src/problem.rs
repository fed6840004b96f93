//! Problem data `(grid, c, h, μ)` and the structural assumption on it:
//! `c ≥ 0` not identically zero, `0 < μ₁ ≤ μ(x) ≤ μ₂`.

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};

/// Coefficient of the gradient term.
#[derive(Debug, Clone, PartialEq)]
pub enum Mu {
    Constant(f64),
    Variable {
        field: GridFunction,
        mu1: f64,
        mu2: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    grid: Grid,
    c: GridFunction,
    h: GridFunction,
    mu: Mu,
}

impl ProblemSpec {
    pub fn new(grid: Grid, c: GridFunction, h: GridFunction, mu: Mu) -> Result<Self> {
        for (name, f) in [("c", &c), ("h", &h)] {
            if f.len() != grid.len() || !f.grid().same_as(&grid) {
                return Err(Error::Input(format!("{name} is not defined on the problem grid")));
            }
        }
        if let Some(node) = c.values().iter().position(|&v| v < 0.0) {
            return Err(Error::Input(format!("c must be nonnegative (node {node})")));
        }
        if c.max() <= 0.0 {
            return Err(Error::Input("c must not vanish identically".into()));
        }
        match &mu {
            Mu::Constant(m) => {
                if !(*m > 0.0 && m.is_finite()) {
                    return Err(Error::Input(format!("mu must be positive, got {m}")));
                }
            }
            Mu::Variable { field, mu1, mu2 } => {
                if field.len() != grid.len() {
                    return Err(Error::Input("mu field is not defined on the problem grid".into()));
                }
                if !(*mu1 > 0.0 && mu2 >= mu1) {
                    return Err(Error::Input(format!("need 0 < mu1 <= mu2, got {mu1}, {mu2}")));
                }
                if let Some(node) = field.values().iter().position(|v| v < mu1 || v > mu2) {
                    return Err(Error::Input(format!(
                        "mu({node}) = {} outside [{mu1}, {mu2}]",
                        field.values()[node]
                    )));
                }
            }
        }
        Ok(Self { grid, c, h, mu })
    }

    /// Constant-coefficient problem with `c` and `h` given by closures.
    pub fn with_constant_mu(
        grid: Grid,
        c: impl Fn(f64, f64) -> f64,
        h: impl Fn(f64, f64) -> f64,
        mu: f64,
    ) -> Result<Self> {
        Self::new(
            grid,
            GridFunction::from_fn(grid, c),
            GridFunction::from_fn(grid, h),
            Mu::Constant(mu),
        )
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn c(&self) -> &GridFunction {
        &self.c
    }

    pub fn h(&self) -> &GridFunction {
        &self.h
    }

    pub fn mu(&self) -> &Mu {
        &self.mu
    }

    pub fn constant_mu(&self) -> Option<f64> {
        match self.mu {
            Mu::Constant(m) => Some(m),
            Mu::Variable { .. } => None,
        }
    }

    /// Nodewise values of `μ`.
    pub fn mu_values(&self) -> Vec<f64> {
        match &self.mu {
            Mu::Constant(m) => vec![*m; self.grid.len()],
            Mu::Variable { field, .. } => field.values().to_vec(),
        }
    }

    pub fn mu1(&self) -> f64 {
        match &self.mu {
            Mu::Constant(m) => *m,
            Mu::Variable { mu1, .. } => *mu1,
        }
    }

    pub fn mu2(&self) -> f64 {
        match &self.mu {
            Mu::Constant(m) => *m,
            Mu::Variable { mu2, .. } => *mu2,
        }
    }

    /// Same grid, `c` and `μ`, new `h`.
    pub fn with_h(&self, h: GridFunction) -> Result<Self> {
        Self::new(self.grid, self.c.clone(), h, self.mu.clone())
    }
}
