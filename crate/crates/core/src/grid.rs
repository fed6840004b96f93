//! Uniform grids on an interval or a rectangle, grid functions with implicit
//! zero Dirichlet data, the discrete `-Δ_h + d` operator, gradient terms,
//! quadrature and the strict ordering `≪`.
//!
//! Interior nodes are numbered lexicographically with the x index running
//! fastest. An interval of length `T` is centred on `[-T/2, T/2]`; a
//! rectangle occupies `[0, Lx] × [0, Ly]`.

use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{BandLu, BandMatrix, Pivoting};

/// Exponents beyond this overflow `f64::exp`.
pub(crate) const EXP_LIMIT: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Interval { length: f64 },
    Rectangle { lx: f64, ly: f64 },
}

impl Domain {
    pub fn dimension(&self) -> usize {
        match self {
            Domain::Interval { .. } => 1,
            Domain::Rectangle { .. } => 2,
        }
    }
}

/// A uniform grid with `n` interior nodes per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    domain: Domain,
    n: usize,
    hx: f64,
    hy: f64,
}

impl Grid {
    pub fn interval(length: f64, n: usize) -> Result<Self> {
        Self::new(Domain::Interval { length }, n)
    }

    pub fn rectangle(lx: f64, ly: f64, n: usize) -> Result<Self> {
        Self::new(Domain::Rectangle { lx, ly }, n)
    }

    pub fn new(domain: Domain, n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::Input(format!("need at least 3 interior nodes per axis, got {n}")));
        }
        let (lx, ly) = match domain {
            Domain::Interval { length } => (length, length),
            Domain::Rectangle { lx, ly } => (lx, ly),
        };
        if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
            return Err(Error::Input(format!("domain lengths must be positive, got {lx} and {ly}")));
        }
        let cells = (n + 1) as f64;
        Ok(Self {
            domain,
            n,
            hx: lx / cells,
            hy: ly / cells,
        })
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    /// Interior nodes per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dimension(&self) -> usize {
        self.domain.dimension()
    }

    /// Total number of interior nodes.
    pub fn len(&self) -> usize {
        match self.domain {
            Domain::Interval { .. } => self.n,
            Domain::Rectangle { .. } => self.n * self.n,
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Mesh width along x (the only width in 1D).
    pub fn spacing(&self) -> f64 {
        self.hx
    }

    pub fn spacing_y(&self) -> f64 {
        self.hy
    }

    /// Smallest mesh width over the axes.
    pub fn min_spacing(&self) -> f64 {
        match self.domain {
            Domain::Interval { .. } => self.hx,
            Domain::Rectangle { .. } => self.hx.min(self.hy),
        }
    }

    /// Volume of one grid cell (the quadrature weight of an interior node).
    pub fn cell_volume(&self) -> f64 {
        match self.domain {
            Domain::Interval { .. } => self.hx,
            Domain::Rectangle { .. } => self.hx * self.hy,
        }
    }

    /// Coordinates of interior node `k`.
    pub fn coords(&self, k: usize) -> (f64, Option<f64>) {
        match self.domain {
            Domain::Interval { length } => (-0.5 * length + (k + 1) as f64 * self.hx, None),
            Domain::Rectangle { .. } => {
                let (i, j) = (k % self.n, k / self.n);
                ((i + 1) as f64 * self.hx, Some((j + 1) as f64 * self.hy))
            }
        }
    }

    /// Neighbour offsets of node `k` as `(neighbour index or None for the boundary, 1/h²)`.
    pub(crate) fn neighbours(&self, k: usize) -> Neighbours {
        let mut out = Neighbours::default();
        let n = self.n;
        let wx = 1.0 / (self.hx * self.hx);
        match self.domain {
            Domain::Interval { .. } => {
                out.push(if k > 0 { Some(k - 1) } else { None }, wx);
                out.push(if k + 1 < n { Some(k + 1) } else { None }, wx);
            }
            Domain::Rectangle { .. } => {
                let wy = 1.0 / (self.hy * self.hy);
                let (i, j) = (k % n, k / n);
                out.push(if i > 0 { Some(k - 1) } else { None }, wx);
                out.push(if i + 1 < n { Some(k + 1) } else { None }, wx);
                out.push(if j > 0 { Some(k - n) } else { None }, wy);
                out.push(if j + 1 < n { Some(k + n) } else { None }, wy);
            }
        }
        out
    }

    /// Bandwidth of stencil matrices in lexicographic order.
    pub(crate) fn bandwidth(&self) -> usize {
        match self.domain {
            Domain::Interval { .. } => 1,
            Domain::Rectangle { .. } => self.n,
        }
    }

    /// `true` when `other` is the same grid up to rounding of the spacing.
    pub fn same_as(&self, other: &Grid) -> bool {
        self.n == other.n
            && self.domain.dimension() == other.domain.dimension()
            && (self.hx - other.hx).abs() <= 1e-12 * self.hx
            && (self.hy - other.hy).abs() <= 1e-12 * self.hy
    }
}

#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct Neighbours {
    items: [(Option<usize>, f64); 4],
    len: usize,
}

impl Neighbours {
    fn push(&mut self, idx: Option<usize>, weight: f64) {
        self.items[self.len] = (idx, weight);
        self.len += 1;
    }

    pub(crate) fn iter(&self) -> impl Iterator<Item = (Option<usize>, f64)> + '_ {
        self.items[..self.len].iter().copied()
    }
}

/// Real values at the interior nodes of a [`Grid`]; boundary values are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Shape {
                expected: grid.len(),
                found: values.len(),
            });
        }
        if let Some(node) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain {
                node,
                detail: format!("non-finite value {}", values[node]),
            });
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_vec_unchecked(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        Self {
            grid,
            values: vec![value; grid.len()],
        }
    }

    /// Samples `f(x, y)` at interior nodes (`y = 0` in 1D).
    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|k| {
                let (x, y) = grid.coords(k);
                f(x, y.unwrap_or(0.0))
            })
            .collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sup_norm(&self) -> f64 {
        crate::linalg::norm_inf(&self.values)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_same_grid(other)?;
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// `a·self + b·other`.
    pub fn axpby(&self, a: f64, other: &GridFunction, b: f64) -> Result<Self> {
        self.zip_map(other, |x, y| a * x + b * y)
    }

    pub fn scaled(&self, a: f64) -> Self {
        self.map(|v| a * v)
    }

    /// Sup-norm of `self - other`.
    pub fn distance(&self, other: &GridFunction) -> Result<f64> {
        self.check_same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    pub fn positive_part(&self) -> Self {
        self.map(|v| v.max(0.0))
    }

    pub fn negative_part(&self) -> Self {
        self.map(|v| (-v).max(0.0))
    }

    pub fn check_same_grid(&self, other: &GridFunction) -> Result<()> {
        if self.values.len() != other.values.len() {
            return Err(Error::Shape {
                expected: self.values.len(),
                found: other.values.len(),
            });
        }
        if !self.grid.same_as(&other.grid) {
            return Err(Error::Input("grid functions live on different grids".into()));
        }
        Ok(())
    }
}

/// The matrix `-Δ_h + diag(d)` over interior nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteOperator {
    grid: Grid,
    potential: Vec<f64>,
}

impl DiscreteOperator {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    /// Entry `(i, j)` of the matrix.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let nb = self.grid.neighbours(i);
        if i == j {
            return nb.iter().map(|(_, w)| w).sum::<f64>() + self.potential[i];
        }
        nb.iter()
            .filter(|(k, _)| *k == Some(j))
            .map(|(_, w)| -w)
            .sum()
    }

    /// Column indices of the nonzero pattern of row `i` (diagonal first).
    pub fn row_pattern(&self, i: usize) -> Vec<usize> {
        std::iter::once(i)
            .chain(self.grid.neighbours(i).iter().filter_map(|(k, _)| k))
            .collect()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        apply_neg_laplacian(&self.grid, x)
            .into_iter()
            .zip(x.iter().zip(&self.potential))
            .map(|(lx, (xi, di))| lx + di * xi)
            .collect()
    }

    pub fn to_band(&self) -> BandMatrix {
        let mut m = neg_laplacian_band(&self.grid);
        for (k, d) in self.potential.iter().enumerate() {
            m.add(k, k, *d);
        }
        m
    }
}

/// Returns `-Δ_h + diag(d)`; `d = None` means the pure negative Laplacian.
pub fn build_operator(grid: &Grid, d: Option<&GridFunction>) -> Result<DiscreteOperator> {
    let potential = match d {
        Some(d) => {
            if d.len() != grid.len() || !d.grid().same_as(grid) {
                return Err(Error::Shape {
                    expected: grid.len(),
                    found: d.len(),
                });
            }
            d.values().to_vec()
        }
        None => vec![0.0; grid.len()],
    };
    Ok(DiscreteOperator {
        grid: *grid,
        potential,
    })
}

/// Solves `op · x = rhs`.
///
/// Fails with [`Error::Singular`] (carrying the smallest pivot magnitude) when
/// the factorization breaks down or the residual check
/// `‖op·x − rhs‖∞ ≤ 1e-10 ‖rhs‖∞` cannot be met.
pub fn linear_solve(op: &DiscreteOperator, rhs: &GridFunction) -> Result<GridFunction> {
    if rhs.len() != op.grid.len() {
        return Err(Error::Shape {
            expected: op.grid.len(),
            found: rhs.len(),
        });
    }
    let band = op.to_band();
    let lu = BandLu::factor(&band, Pivoting::Partial)?;
    let b = rhs.values();
    let bnorm = crate::linalg::norm_inf(b);
    let mut x = lu.solve(b);
    let mut res = 0.0;
    for _ in 0..3 {
        let r: Vec<f64> = band.mul_vec(&x).iter().zip(b).map(|(ax, bi)| bi - ax).collect();
        res = crate::linalg::norm_inf(&r);
        if res <= 1e-10 * bnorm {
            return GridFunction::new(op.grid, x);
        }
        let dx = lu.solve(&r);
        for (xi, d) in x.iter_mut().zip(dx) {
            *xi += d;
        }
    }
    let r: Vec<f64> = band.mul_vec(&x).iter().zip(b).map(|(ax, bi)| bi - ax).collect();
    if crate::linalg::norm_inf(&r) <= 1e-10 * bnorm {
        return GridFunction::new(op.grid, x);
    }
    let _ = res;
    Err(Error::Singular {
        min_pivot: lu.min_pivot(),
        condition: lu.condition_estimate(),
    })
}

/// `(-Δ_h x)` with zero boundary values.
pub(crate) fn apply_neg_laplacian(grid: &Grid, x: &[f64]) -> Vec<f64> {
    (0..grid.len())
        .map(|k| {
            grid.neighbours(k)
                .iter()
                .map(|(nb, w)| w * (x[k] - nb.map_or(0.0, |j| x[j])))
                .sum()
        })
        .collect()
}

pub(crate) fn neg_laplacian_band(grid: &Grid) -> BandMatrix {
    let bw = grid.bandwidth();
    let mut m = BandMatrix::zeros(grid.len(), bw, bw);
    for k in 0..grid.len() {
        for (nb, w) in grid.neighbours(k).iter() {
            m.add(k, k, w);
            if let Some(j) = nb {
                m.add(k, j, -w);
            }
        }
    }
    m
}

/// Central-difference `|∇u|²` at interior nodes, using the zero boundary
/// value for neighbours on the boundary.
pub fn gradient_sq(u: &GridFunction) -> GridFunction {
    let grid = *u.grid();
    let n = grid.n();
    let x = u.values();
    let at = |k: Option<usize>| k.map_or(0.0, |j| x[j]);
    let values = (0..grid.len())
        .map(|k| match grid.domain() {
            Domain::Interval { .. } => {
                let left = if k > 0 { Some(k - 1) } else { None };
                let right = if k + 1 < n { Some(k + 1) } else { None };
                let d = (at(right) - at(left)) / (2.0 * grid.spacing());
                d * d
            }
            Domain::Rectangle { .. } => {
                let (i, j) = (k % n, k / n);
                let l = if i > 0 { Some(k - 1) } else { None };
                let r = if i + 1 < n { Some(k + 1) } else { None };
                let b = if j > 0 { Some(k - n) } else { None };
                let t = if j + 1 < n { Some(k + n) } else { None };
                let dx = (at(r) - at(l)) / (2.0 * grid.spacing());
                let dy = (at(t) - at(b)) / (2.0 * grid.spacing_y());
                dx * dx + dy * dy
            }
        })
        .collect();
    GridFunction::from_vec_unchecked(grid, values)
}

/// `e^x − 1 − x`, accurate for small `|x|`.
#[inline]
pub(crate) fn expm1_minus_x(x: f64) -> f64 {
    if x.abs() < 1e-3 {
        let x2 = x * x;
        x2 * (0.5 + x * (1.0 / 6.0 + x * (1.0 / 24.0 + x * (1.0 / 120.0 + x / 720.0))))
    } else {
        x.exp_m1() - x
    }
}

/// Weighted quadratic gradient term `μ|∇u|²` in the exponentially fitted form
///
/// `Σ_nb (e^{μ_k δ} − 1 − μ_k δ) / (μ_k h²)`, with `δ = u_nb − u_k`.
///
/// Expanding the exponential shows it equals `μ|∇u|² + O(h²)`. Its defining
/// property is that `−Δ_h u − (this term)` equals
/// `−Δ_h v / (μ (1 + v))` exactly for `v = e^{μu} − 1`, which makes the
/// direct and the Cole–Hopf transformed discrete problems conjugate.
///
/// Fails with [`Error::Range`] when an exponent exceeds the f64 range.
pub fn weighted_gradient_term(u: &GridFunction, mu: &[f64]) -> Result<GridFunction> {
    let grid = *u.grid();
    assert_eq!(mu.len(), grid.len());
    let x = u.values();
    let mut values = Vec::with_capacity(grid.len());
    for k in 0..grid.len() {
        let m = mu[k];
        let mut acc = 0.0;
        for (nb, w) in grid.neighbours(k).iter() {
            let delta = nb.map_or(0.0, |j| x[j]) - x[k];
            let e = m * delta;
            if e > EXP_LIMIT {
                return Err(Error::Range { node: k, exponent: e });
            }
            acc += w * expm1_minus_x(e) / m;
        }
        values.push(acc);
    }
    Ok(GridFunction::from_vec_unchecked(grid, values))
}

/// Adds the Jacobian of [`weighted_gradient_term`] at `u`, multiplied by
/// `sign`, into `jac`.
pub(crate) fn add_weighted_gradient_jacobian(
    jac: &mut BandMatrix,
    grid: &Grid,
    u: &[f64],
    mu: &[f64],
    sign: f64,
) {
    for k in 0..grid.len() {
        let m = mu[k];
        for (nb, w) in grid.neighbours(k).iter() {
            let delta = nb.map_or(0.0, |j| u[j]) - u[k];
            let d = w * (m * delta).min(EXP_LIMIT).exp_m1();
            jac.add(k, k, -sign * d);
            if let Some(j) = nb {
                jac.add(k, j, sign * d);
            }
        }
    }
}

/// Composite trapezoid rule with the zero boundary values; on a uniform grid
/// this is the cell volume times the sum over interior nodes.
pub fn integrate(u: &GridFunction) -> f64 {
    u.grid().cell_volume() * u.values().iter().sum::<f64>()
}

/// Result of the strict-order test `u ≪ v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrictOrder {
    pub holds: bool,
    /// Largest `ε ≥ 0` with `v − u ≥ ε φ₁` at every node.
    pub epsilon: f64,
}

pub const DEFAULT_EPSILON_MIN: f64 = 1e-8;

/// Tests `u ≪ v` against the gauge `phi1` (positive at every node).
pub fn strictly_below(
    u: &GridFunction,
    v: &GridFunction,
    phi1: &GridFunction,
    epsilon_min: f64,
) -> Result<StrictOrder> {
    u.check_same_grid(v)?;
    u.check_same_grid(phi1)?;
    if let Some(node) = phi1.values().iter().position(|&p| p <= 0.0) {
        return Err(Error::Domain {
            node,
            detail: format!("gauge function must be positive, found {}", phi1.values()[node]),
        });
    }
    let ratio = u
        .values()
        .iter()
        .zip(v.values())
        .zip(phi1.values())
        .map(|((a, b), p)| (b - a) / p)
        .fold(f64::INFINITY, f64::min);
    let epsilon = ratio.max(0.0);
    Ok(StrictOrder {
        holds: epsilon > epsilon_min,
        epsilon,
    })
}

impl fmt::Display for GridFunction {
    /// CSV with header `index,x[,y],value` and 17-digit scientific floats.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let two_d = self.grid.dimension() == 2;
        if two_d {
            writeln!(f, "index,x,y,value")?;
        } else {
            writeln!(f, "index,x,value")?;
        }
        for (k, v) in self.values.iter().enumerate() {
            let (x, y) = self.grid.coords(k);
            match y {
                Some(y) => writeln!(f, "{k},{x:.17e},{y:.17e},{v:.17e}")?,
                None => writeln!(f, "{k},{x:.17e},{v:.17e}")?,
            }
        }
        Ok(())
    }
}

/// Parses the CSV produced by the `Display` impl back onto `grid`.
pub fn parse_grid_function_csv(grid: Grid, text: &str) -> Result<GridFunction> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Input("empty CSV".into()))?;
    let expected = if grid.dimension() == 2 { "index,x,y,value" } else { "index,x,value" };
    if header.trim() != expected {
        return Err(Error::Input(format!("expected header `{expected}`, found `{header}`")));
    }
    let mut values = vec![f64::NAN; grid.len()];
    let mut seen = 0usize;
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let bad = || Error::Input(format!("malformed CSV row {}: `{line}`", lineno + 2));
        let idx: usize = fields.first().and_then(|s| s.trim().parse().ok()).ok_or_else(bad)?;
        let value: f64 = fields.last().and_then(|s| s.trim().parse().ok()).ok_or_else(bad)?;
        if idx >= grid.len() {
            return Err(bad());
        }
        values[idx] = value;
        seen += 1;
    }
    if seen != grid.len() {
        return Err(Error::Shape {
            expected: grid.len(),
            found: seen,
        });
    }
    GridFunction::new(grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn unit_interval(n: usize) -> Grid {
        Grid::interval(1.0, n).unwrap()
    }

    #[test]
    fn grid_rejects_bad_sizes() {
        assert!(Grid::interval(1.0, 2).is_err());
        assert!(Grid::interval(-1.0, 5).is_err());
        assert!(Grid::rectangle(1.0, 0.0, 5).is_err());
        let g = Grid::interval(3.0, 99).unwrap();
        assert!((g.spacing() * 100.0 - 3.0).abs() <= 1e-12 * 3.0);
    }

    #[test]
    fn tridiagonal_rows_in_one_dimension() {
        let g = Grid::interval(4.0, 3).unwrap();
        let op = build_operator(&g, None).unwrap();
        assert_eq!(g.spacing(), 1.0);
        assert_eq!(op.entry(1, 0), -1.0);
        assert_eq!(op.entry(1, 1), 2.0);
        assert_eq!(op.entry(1, 2), -1.0);
        assert_eq!(op.entry(0, 2), 0.0);
        assert_eq!(op.row_pattern(1), vec![1, 0, 2]);
    }

    #[test]
    fn five_point_diagonal_in_two_dimensions() {
        // n = 3 is the smallest admissible grid; the diagonal is 4/h² either way.
        let g = Grid::rectangle(1.0, 1.0, 3).unwrap();
        let op = build_operator(&g, None).unwrap();
        let h = g.spacing();
        for k in 0..g.len() {
            assert!((op.entry(k, k) - 4.0 / (h * h)).abs() < 1e-12);
        }
        // Centre node couples to its four neighbours.
        assert_eq!(op.row_pattern(4).len(), 5);
        assert!((op.entry(4, 1) + 1.0 / (h * h)).abs() < 1e-12);
        assert!(op.to_band().is_symmetric(0.0));
    }

    #[test]
    fn potential_shifts_the_diagonal() {
        let g = unit_interval(7);
        let d = GridFunction::constant(g, 5.0);
        let a = build_operator(&g, None).unwrap();
        let b = build_operator(&g, Some(&d)).unwrap();
        for k in 0..g.len() {
            assert_eq!(b.entry(k, k) - a.entry(k, k), 5.0);
        }
    }

    #[test]
    fn mismatched_potential_is_a_shape_error() {
        let g = unit_interval(7);
        let other = GridFunction::zeros(unit_interval(9));
        assert!(matches!(build_operator(&g, Some(&other)), Err(Error::Shape { .. })));
    }

    #[test]
    fn poisson_with_unit_source() {
        let g = unit_interval(511);
        let op = build_operator(&g, None).unwrap();
        let u = linear_solve(&op, &GridFunction::constant(g, 1.0)).unwrap();
        assert!((u.max() - 0.125).abs() < 1e-5);
        let zero = linear_solve(&op, &GridFunction::zeros(g)).unwrap();
        assert_eq!(zero.sup_norm(), 0.0);
    }

    #[test]
    fn sine_source_is_second_order() {
        let mut errs = Vec::new();
        for n in [63, 127, 255] {
            let g = unit_interval(n);
            let op = build_operator(&g, None).unwrap();
            let rhs = GridFunction::from_fn(g, |x, _| PI * PI * (PI * (x + 0.5)).sin());
            let u = linear_solve(&op, &rhs).unwrap();
            let exact = GridFunction::from_fn(g, |x, _| (PI * (x + 0.5)).sin());
            errs.push(u.distance(&exact).unwrap() / (g.spacing() * g.spacing()));
        }
        // err / h² is bounded (and roughly constant, ≈ π²/12).
        for e in &errs {
            assert!(*e < 1.0, "{errs:?}");
        }
    }

    #[test]
    fn central_gradient_of_linear_function() {
        let g = unit_interval(31);
        let u = GridFunction::from_fn(g, |x, _| 3.0 * x);
        let q = gradient_sq(&u);
        for k in 1..g.len() - 1 {
            assert!((q.values()[k] - 9.0).abs() < 1e-10);
        }
        assert_eq!(gradient_sq(&GridFunction::zeros(g)).sup_norm(), 0.0);
    }

    #[test]
    fn central_gradient_of_sine_converges() {
        let mut prev = f64::INFINITY;
        for n in [31, 63, 127] {
            let g = unit_interval(n);
            let u = GridFunction::from_fn(g, |x, _| (PI * (x + 0.5)).sin());
            let q = gradient_sq(&u);
            let exact = GridFunction::from_fn(g, |x, _| (PI * (PI * (x + 0.5)).cos()).powi(2));
            let err = q.distance(&exact).unwrap();
            assert!(err < prev / 3.5, "error {err} after {prev}");
            prev = err;
        }
    }

    #[test]
    fn fitted_gradient_is_second_order_consistent() {
        for n in [63, 127] {
            let g = unit_interval(n);
            let u = GridFunction::from_fn(g, |x, _| (PI * (x + 0.5)).sin());
            let mu = vec![1.5; g.len()];
            let q = weighted_gradient_term(&u, &mu).unwrap();
            let exact = GridFunction::from_fn(g, |x, _| 1.5 * (PI * (PI * (x + 0.5)).cos()).powi(2));
            let err = q.distance(&exact).unwrap();
            assert!(err < 200.0 * g.spacing() * g.spacing(), "n={n} err={err}");
        }
    }

    #[test]
    fn fitted_gradient_jacobian_matches_finite_differences() {
        let g = Grid::rectangle(1.0, 2.0, 4).unwrap();
        let u = GridFunction::from_fn(g, |x, y| (x * 2.0).sin() * y.cos());
        let mu: Vec<f64> = (0..g.len()).map(|k| 0.5 + 0.1 * k as f64).collect();
        let bw = g.bandwidth();
        let mut jac = BandMatrix::zeros(g.len(), bw, bw);
        add_weighted_gradient_jacobian(&mut jac, &g, u.values(), &mu, 1.0);
        let eps = 1e-6;
        for j in 0..g.len() {
            let mut up = u.values().to_vec();
            let mut dn = u.values().to_vec();
            up[j] += eps;
            dn[j] -= eps;
            let qp = weighted_gradient_term(&GridFunction::new(g, up).unwrap(), &mu).unwrap();
            let qm = weighted_gradient_term(&GridFunction::new(g, dn).unwrap(), &mu).unwrap();
            for i in 0..g.len() {
                let fd = (qp.values()[i] - qm.values()[i]) / (2.0 * eps);
                assert!((fd - jac.get(i, j)).abs() < 1e-5 * (1.0 + fd.abs()));
            }
        }
    }

    #[test]
    fn quadrature_examples() {
        let g = Grid::interval(2.0, 99).unwrap();
        let one = integrate(&GridFunction::constant(g, 1.0));
        assert!((one - 2.0).abs() <= g.spacing() * (1.0 + 1e-9));
        let g = unit_interval(511);
        let s = integrate(&GridFunction::from_fn(g, |x, _| (PI * (x + 0.5)).sin()));
        assert!((s - 2.0 / PI).abs() < 1e-4);
        assert_eq!(integrate(&GridFunction::zeros(g)), 0.0);
    }

    #[test]
    fn strict_order_examples() {
        let g = unit_interval(15);
        let phi = GridFunction::from_fn(g, |x, _| (PI * (x + 0.5)).sin());
        let zero = GridFunction::zeros(g);
        let r = strictly_below(&zero, &phi, &phi, DEFAULT_EPSILON_MIN).unwrap();
        assert!((r.epsilon - 1.0).abs() < 1e-14 && r.holds);
        let r = strictly_below(&phi, &phi, &phi, DEFAULT_EPSILON_MIN).unwrap();
        assert_eq!(r.epsilon, 0.0);
        assert!(!r.holds);
        let mut v = phi.values().to_vec();
        v[3] = -0.1;
        let v = GridFunction::new(g, v).unwrap();
        let r = strictly_below(&zero, &v, &phi, DEFAULT_EPSILON_MIN).unwrap();
        assert_eq!(r.epsilon, 0.0);
        assert!(!r.holds);
        assert!(strictly_below(&zero, &v, &zero, DEFAULT_EPSILON_MIN).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let g = Grid::rectangle(1.0, 0.5, 3).unwrap();
        let u = GridFunction::from_fn(g, |x, y| x - 3.0 * y + 1.0 / 3.0);
        let text = u.to_string();
        assert!(text.starts_with("index,x,y,value\n"));
        let back = parse_grid_function_csv(g, &text).unwrap();
        assert_eq!(back, u);
    }
}
