//! Phase-plane analysis of the one-dimensional autonomous problem
//!
//! ```text
//! −v″ = g(v) = λc(1+v)ln(1+v) + μhv + μh   on ]−T/2, T/2[,   v > −1,   v(±T/2) = 0,
//! ```
//!
//! obtained from `u` by `v = e^{μu} − 1` when `c`, `h` and `μ` are constants.
//! Orbits conserve `½v′² + G(v)` with `G(v) = ∫₀^v g`.

use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::GaussLegendre;

use crate::error::{Error, Result};

/// Below this `|v|` the closed form of `G` loses digits to cancellation.
const SMALL_V: f64 = 0.05;
/// Shots are flagged inadmissible once `|v|` exceeds this.
pub const BLOWUP: f64 = 1e8;
pub const DEFAULT_STEPS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseParams {
    pub lambda: f64,
    pub mu: f64,
    pub h: f64,
    pub c: f64,
    pub t: f64,
}

impl PhaseParams {
    pub fn new(lambda: f64, mu: f64, h: f64, c: f64, t: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::Input(format!("lambda must be >= 0, got {lambda}")));
        }
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::Input(format!("mu must be positive, got {mu}")));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::Input(format!("c must be positive, got {c}")));
        }
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Input(format!("T must be positive, got {t}")));
        }
        if !h.is_finite() {
            return Err(Error::Input(format!("h must be finite, got {h}")));
        }
        Ok(Self { lambda, mu, h, c, t })
    }

    pub fn with_t(self, t: f64) -> Result<Self> {
        Self::new(self.lambda, self.mu, self.h, self.c, t)
    }

    pub fn with_h(self, h: f64) -> Result<Self> {
        Self::new(self.lambda, self.mu, h, self.c, self.t)
    }

    /// The coefficient `λc` seen by the ODE.
    pub fn lc(&self) -> f64 {
        self.lambda * self.c
    }

    pub fn mh(&self) -> f64 {
        self.mu * self.h
    }

    fn scale(&self) -> f64 {
        1.0 + self.lc().abs() + self.mh().abs()
    }
}

fn check_domain(v: f64) -> Result<()> {
    if v > -1.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain { node: 0, detail: format!("v = {v} is not in ]-1, inf[") })
    }
}

fn g_raw(p: &PhaseParams, v: f64) -> f64 {
    (1.0 + v) * (p.lc() * v.ln_1p() + p.mh())
}

fn g_prime_raw(p: &PhaseParams, v: f64) -> f64 {
    p.lc() * (v.ln_1p() + 1.0) + p.mh()
}

/// `g(v) = λc(1+v)ln(1+v) + μh(1+v)`.
pub fn g_eval(p: &PhaseParams, v: f64) -> Result<f64> {
    check_domain(v)?;
    Ok(g_raw(p, v))
}

pub fn g_prime(p: &PhaseParams, v: f64) -> Result<f64> {
    check_domain(v)?;
    Ok(g_prime_raw(p, v))
}

fn gl(n: usize) -> &'static GaussLegendre {
    static RULES: OnceLock<[GaussLegendre; 2]> = OnceLock::new();
    let rules = RULES.get_or_init(|| {
        [
            GaussLegendre::new(NonZeroUsize::new(16).unwrap()),
            GaussLegendre::new(NonZeroUsize::new(24).unwrap()),
        ]
    });
    match n {
        16 => &rules[0],
        _ => &rules[1],
    }
}

fn integrate_g(p: &PhaseParams, a: f64, b: f64) -> f64 {
    gl(16).integrate(a, b, |v| g_raw(p, v))
}

fn potential_raw(p: &PhaseParams, v: f64) -> f64 {
    if v.abs() < SMALL_V {
        return integrate_g(p, 0.0, v);
    }
    let one = 1.0 + v;
    let log_part = if one > 0.0 { one * one * (2.0 * v.ln_1p() - 1.0) } else { 0.0 };
    p.lc() * (log_part + 1.0) / 4.0 + p.mh() * (0.5 * v * v + v)
}

/// `G(v) = ∫₀^v g`, i.e. `λc[(1+v)²(2ln(1+v) − 1) + 1]/4 + μh(v²/2 + v)`.
pub fn potential_eval(p: &PhaseParams, v: f64) -> Result<f64> {
    check_domain(v)?;
    Ok(potential_raw(p, v))
}

/// `lim_{v→−1} G(v)`.
pub fn potential_at_minus_one(p: &PhaseParams) -> f64 {
    0.25 * p.lc() - 0.5 * p.mh()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EquilibriumKind {
    Center,
    Saddle,
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equilibrium {
    pub v: f64,
    pub kind: EquilibriumKind,
}

/// Roots of `g` on `]−1, ∞[`. `g = (1+v)(λc ln(1+v) + μh)` has at most one;
/// with `λc = μh = 0` every point is an equilibrium and the list is empty.
pub fn equilibria(p: &PhaseParams) -> Vec<Equilibrium> {
    let (lc, mh) = (p.lc(), p.mh());
    if lc <= 0.0 {
        return Vec::new();
    }
    let v = (-mh / lc).exp_m1();
    if !(v > -1.0) || !v.is_finite() {
        return Vec::new();
    }
    let d = g_prime_raw(p, v);
    let kind = if d > 0.0 {
        EquilibriumKind::Center
    } else if d < 0.0 {
        EquilibriumKind::Saddle
    } else {
        EquilibriumKind::Degenerate
    };
    vec![Equilibrium { v, kind }]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseCase {
    /// `0 < λc < 2μh`: orbits through `v = 0` all escape to `−1` on the left.
    Case1,
    /// `λc > 2μh > 0`.
    Case2,
    /// `h < 0`.
    Case3,
    /// `h = 0`.
    HZero,
    /// `λc = 2μh`: not analysed.
    Boundary,
    /// `λc = 0`, `h > 0`: the linear oscillator `−v″ = μh(1+v)`.
    Linear,
}

impl PhaseCase {
    pub fn as_str(&self) -> &'static str {
        match self {
            PhaseCase::Case1 => "case1",
            PhaseCase::Case2 => "case2",
            PhaseCase::Case3 => "case3",
            PhaseCase::HZero => "h_zero",
            PhaseCase::Boundary => "boundary",
            PhaseCase::Linear => "linear",
        }
    }
}

pub fn case_classify(p: &PhaseParams) -> PhaseCase {
    let (lc, mh) = (p.lc(), p.mh());
    if p.h == 0.0 {
        PhaseCase::HZero
    } else if p.h < 0.0 {
        PhaseCase::Case3
    } else if lc == 0.0 {
        PhaseCase::Linear
    } else if lc < 2.0 * mh {
        PhaseCase::Case1
    } else if lc > 2.0 * mh {
        PhaseCase::Case2
    } else {
        PhaseCase::Boundary
    }
}

fn centre(p: &PhaseParams) -> Option<f64> {
    equilibria(p)
        .into_iter()
        .find(|e| e.kind == EquilibriumKind::Center)
        .map(|e| e.v)
}

fn bisect(mut lo: f64, mut hi: f64, above: impl Fn(f64) -> bool) -> f64 {
    // `above(lo)` is false and `above(hi)` true on entry.
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if above(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Smallest `v ≥ from` with `G(v) = E`, assuming `G < E` at `from` and `G`
/// increasing beyond it.
fn right_turning(p: &PhaseParams, e: f64, from: f64) -> Result<f64> {
    let increasing = match centre(p) {
        Some(_) => true,
        None => g_raw(p, from.max(0.0)) > 0.0,
    };
    if !increasing {
        return Err(Error::UnboundedOrbit { energy: e });
    }
    let mut step = 1.0 + from.abs();
    let mut hi = from + step;
    while potential_raw(p, hi) < e {
        step *= 2.0;
        hi = from + step;
        if !hi.is_finite() || hi > 1e300 {
            return Err(Error::UnboundedOrbit { energy: e });
        }
    }
    Ok(bisect(from, hi, |v| potential_raw(p, v) >= e))
}

/// Largest `v ≤ from` with `G(v) = E`, assuming `G < E` at `from` and `G`
/// decreasing on `]−1, from]`.
fn left_turning(p: &PhaseParams, e: f64, from: f64) -> Result<f64> {
    if potential_at_minus_one(p) <= e {
        return Err(Error::UnboundedOrbit { energy: e });
    }
    // `bisect` keeps `above` false at its lower end, so flip orientation.
    let mut lo = -1.0;
    let mut hi = from;
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if potential_raw(p, mid) >= e {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn check_turning(p: &PhaseParams, v: f64) -> Result<()> {
    if g_raw(p, v).abs() < 1e-12 * p.scale() {
        Err(Error::Classification(format!(
            "turning point {v} is degenerate (g vanishes there)"
        )))
    } else {
        Ok(())
    }
}

/// `E − G(v)` at `v = end + sign·d`. Near a turning point `end` it is
/// evaluated as `−∫ g` over the displacement itself, so that neither the
/// subtraction nor the rounding of `v` costs relative accuracy.
fn gap(p: &PhaseParams, e: f64, end: f64, sign: f64, d: f64, turning: bool) -> f64 {
    if turning {
        let mut window = SMALL_V * (1.0 + end.abs());
        if end < 0.0 {
            window = window.min(0.5 * (1.0 + end));
        }
        if d <= window {
            return -sign * d * gl(16).integrate(0.0, 1.0, |t| g_raw(p, end + sign * d * t));
        }
    }
    e - potential_raw(p, end + sign * d)
}

/// Time to travel from `lo` to `hi` at energy `E`. Endpoints flagged as
/// turning points carry the inverse square-root singularity, absorbed by
/// `v = end ± L·w²` on each half of the interval.
fn transit(p: &PhaseParams, e: f64, lo: f64, lo_turn: bool, hi: f64, hi_turn: bool) -> Result<f64> {
    if lo_turn {
        check_turning(p, lo)?;
    }
    if hi_turn {
        check_turning(p, hi)?;
    }
    let half = 0.5 * (hi - lo);
    if half <= 0.0 {
        return Ok(0.0);
    }
    let bad = std::cell::Cell::new(None);
    let f = |w: f64| -> f64 {
        let mut total = 0.0;
        for (end, sign, turn) in [(lo, 1.0, lo_turn), (hi, -1.0, hi_turn)] {
            let d = half * w * w;
            let gp = gap(p, e, end, sign, d, turn);
            if !(gp > 0.0) {
                bad.set(Some(end + sign * d));
                return 0.0;
            }
            total += 2.0 * half * w / (2.0 * gp).sqrt();
        }
        total
    };
    let rule = gl(24);
    let mut prev = f64::NAN;
    for level in 0..14 {
        let panels = 1usize << level;
        let width = 1.0 / panels as f64;
        let sum: f64 = (0..panels)
            .map(|i| rule.integrate(i as f64 * width, (i + 1) as f64 * width, f))
            .sum();
        if let Some(v) = bad.get() {
            return Err(Error::Classification(format!(
                "energy {e} is not above G at v = {v} inside the transit interval"
            )));
        }
        if level > 0 && (sum - prev).abs() <= 1e-13 * sum.abs() {
            return Ok(sum);
        }
        prev = sum;
    }
    Ok(prev)
}

/// `v_max(a)`: right turning point of the orbit through `(0, a)`.
pub fn turning_point_positive(p: &PhaseParams, a: f64) -> Result<f64> {
    let e = 0.5 * a * a;
    let from = centre(p).map_or(0.0, |ve| ve.max(0.0));
    right_turning(p, e, from)
}

/// `v_min(a)`: left turning point of the orbit through `(0, ±a)`.
pub fn turning_point_negative(p: &PhaseParams, a: f64) -> Result<f64> {
    let e = 0.5 * a * a;
    let from = match centre(p) {
        Some(ve) => ve.min(0.0),
        None if g_raw(p, 0.0) < 0.0 => return Err(Error::UnboundedOrbit { energy: e }),
        None => 0.0,
    };
    left_turning(p, e, from)
}

/// `T₊(a)`: time for the positive part of the orbit to go from `(0, a)` to `(0, −a)`.
pub fn time_map_positive(p: &PhaseParams, a: f64) -> Result<f64> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::Input(format!("a must be positive, got {a}")));
    }
    let vmax = turning_point_positive(p, a)?;
    Ok(2.0 * transit(p, 0.5 * a * a, 0.0, false, vmax, true)?)
}

/// `T₋(a)`: time for the negative part of the orbit to go from `(0, −a)` to `(0, a)`.
pub fn time_map_negative(p: &PhaseParams, a: f64) -> Result<f64> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::Input(format!("a must be positive, got {a}")));
    }
    let vmin = turning_point_negative(p, a)?;
    Ok(2.0 * transit(p, 0.5 * a * a, vmin, true, 0.0, false)?)
}

/// Period of the zero-energy orbit through the rest point `(0, 0)`: the
/// turn of the solution touching zero from above (`h < 0`) or from below
/// (`λc > 2μh > 0`).
pub fn rest_orbit_period(p: &PhaseParams) -> Result<f64> {
    match case_classify(p) {
        PhaseCase::Case3 => {
            let ve = centre(p).ok_or_else(|| {
                Error::Classification("no centre: the zero-energy orbit is not closed".into())
            })?;
            let v1 = right_turning(p, 0.0, ve)?;
            Ok(2.0 * transit(p, 0.0, 0.0, true, v1, true)?)
        }
        PhaseCase::Case2 => {
            let ve = centre(p)
                .ok_or_else(|| Error::Classification("no centre in case 2".into()))?;
            let v1 = left_turning(p, 0.0, ve)?;
            Ok(2.0 * transit(p, 0.0, v1, true, 0.0, true)?)
        }
        other => Err(Error::Classification(format!(
            "the orbit through (0, 0) is not a closed turn in {}",
            other.as_str()
        ))),
    }
}

/// `T₁` for `h < 0`: time needed by the solution with minimum zero to make a turn.
pub fn find_t1(p: &PhaseParams) -> Result<f64> {
    if p.h >= 0.0 {
        return Err(Error::Precondition(format!("T1 needs h < 0, got h = {}", p.h)));
    }
    rest_orbit_period(p)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeMapTable {
    pub a_values: Vec<f64>,
    pub t_plus: Vec<f64>,
    pub t0: Option<f64>,
}

pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![lo];
    }
    let (l0, l1) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (l0 + (l1 - l0) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

pub const A_MIN: f64 = 1e-4;
pub const A_MAX: f64 = 1e4;
pub const A_SAMPLES: usize = 161;

/// `T₊` on a log-spaced grid of `a`; `t0` is the supremum when every
/// sample is finite.
pub fn time_map_table(p: &PhaseParams, a_values: &[f64]) -> Result<TimeMapTable> {
    let t_plus = a_values
        .iter()
        .map(|&a| time_map_positive(p, a))
        .collect::<Result<Vec<_>>>()?;
    let t0 = t_plus.iter().copied().fold(None, |m: Option<f64>, t| Some(m.map_or(t, |m| m.max(t))));
    Ok(TimeMapTable { a_values: a_values.to_vec(), t_plus, t0 })
}

/// `T₀ = sup_a T₊(a)` over `[A_MIN, A_MAX]`: discrete argmax on `samples`
/// log-spaced points, then golden-section search in `ln a`.
pub fn find_t0_with(p: &PhaseParams, samples: usize) -> Result<(f64, f64)> {
    if case_classify(p) != PhaseCase::Case1 {
        return Err(Error::Precondition(format!(
            "T0 is defined for case 1 only, got {}",
            case_classify(p).as_str()
        )));
    }
    let grid = log_grid(A_MIN, A_MAX, samples.max(3));
    let table = time_map_table(p, &grid)?;
    let (k, _) = table
        .t_plus
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bk, bt), (i, &t)| if t > bt { (i, t) } else { (bk, bt) });
    let lo = grid[k.saturating_sub(1)].ln();
    let hi = grid[(k + 1).min(grid.len() - 1)].ln();
    let f = |x: f64| time_map_positive(p, x.exp());
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - ratio * (b - a);
    let mut x2 = a + ratio * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while b - a > 1e-9 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (b - a);
            f2 = f(x2)?;
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - ratio * (b - a);
            f1 = f(x1)?;
        }
    }
    let (x, t) = if f1 > f2 { (x1, f1) } else { (x2, f2) };
    let (x, t) = if table.t_plus[k] > t { (grid[k].ln(), table.t_plus[k]) } else { (x, t) };
    Ok((t, x.exp()))
}

/// `T₀` together with the maximising `a`, on the default grid.
pub fn find_t0(p: &PhaseParams) -> Result<f64> {
    find_t0_with(p, A_SAMPLES).map(|(t, _)| t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignClass {
    Positive,
    Negative,
    SignChanging,
}

impl SignClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            SignClass::Positive => "positive",
            SignClass::Negative => "negative",
            SignClass::SignChanging => "sign_changing",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShootResult {
    pub s: f64,
    pub end_value: f64,
    pub admissible: bool,
    /// The shot reached `v = −1`.
    pub escaped: bool,
    /// `None` when the shot is inadmissible.
    pub classification: Option<SignClass>,
    pub turns: u32,
    /// Set when there is no centre to wind around.
    pub turns_ambiguous: bool,
    /// `max |H(t) − H(0)|` relative to the energy scale of the trajectory.
    pub energy_drift: f64,
}

fn rk4_step(p: &PhaseParams, v: f64, w: f64, dt: f64) -> Option<(f64, f64)> {
    let acc = |v: f64| if v > -1.0 { Some(-g_raw(p, v)) } else { None };
    let k1v = w;
    let k1w = acc(v)?;
    let k2v = w + 0.5 * dt * k1w;
    let k2w = acc(v + 0.5 * dt * k1v)?;
    let k3v = w + 0.5 * dt * k2w;
    let k3w = acc(v + 0.5 * dt * k2v)?;
    let k4v = w + dt * k3w;
    let k4w = acc(v + dt * k3v)?;
    Some((
        v + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v),
        w + dt / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w),
    ))
}

/// Values of `v` at the `steps + 1` equally spaced times of `[−T/2, T/2]`
/// for the shot `v(−T/2) = 0`, `v′(−T/2) = s`. `None` if the shot leaves
/// `]−1, BLOWUP]`.
pub fn shoot_trajectory(p: &PhaseParams, s: f64, steps: usize) -> Option<Vec<(f64, f64)>> {
    integrate_shot(p, s, steps).ok()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Exit {
    Below,
    Blowup,
}

fn integrate_shot(p: &PhaseParams, s: f64, steps: usize) -> std::result::Result<Vec<(f64, f64)>, Exit> {
    let dt = p.t / steps as f64;
    let mut out = Vec::with_capacity(steps + 1);
    let (mut v, mut w) = (0.0, s);
    out.push((v, w));
    for _ in 0..steps {
        (v, w) = rk4_step(p, v, w, dt).ok_or(Exit::Below)?;
        if !(v > -1.0) {
            return Err(Exit::Below);
        }
        if v.abs() > BLOWUP || !w.is_finite() {
            return Err(Exit::Blowup);
        }
        out.push((v, w));
    }
    Ok(out)
}

pub fn shoot(p: &PhaseParams, s: f64) -> ShootResult {
    shoot_with(p, s, DEFAULT_STEPS)
}

pub fn shoot_with(p: &PhaseParams, s: f64, steps: usize) -> ShootResult {
    let traj = match integrate_shot(p, s, steps) {
        Ok(traj) => traj,
        Err(exit) => return ShootResult {
            s,
            end_value: f64::NAN,
            admissible: false,
            escaped: exit == Exit::Below,
            classification: None,
            turns: 0,
            turns_ambiguous: false,
            energy_drift: f64::NAN,
        },
    };
    let end_value = traj.last().unwrap().0;
    let interior = &traj[1..traj.len() - 1];
    let lo = interior.iter().map(|x| x.0).fold(f64::INFINITY, f64::min);
    let hi = interior.iter().map(|x| x.0).fold(f64::NEG_INFINITY, f64::max);
    let classification = if lo > 0.0 {
        SignClass::Positive
    } else if hi < 0.0 {
        SignClass::Negative
    } else {
        SignClass::SignChanging
    };

    let energy = |(v, w): (f64, f64)| 0.5 * w * w + potential_raw(p, v);
    let h0 = energy(traj[0]);
    let mut drift: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for &x in &traj {
        drift = drift.max((energy(x) - h0).abs());
        scale = scale.max(0.5 * x.1 * x.1 + potential_raw(p, x.0).abs());
    }
    let energy_drift = if scale > 0.0 { drift / scale } else { 0.0 };

    let (turns, turns_ambiguous) = match centre(p) {
        Some(ve) => {
            let mut total = 0.0;
            let mut prev = traj[0].1.atan2(traj[0].0 - ve);
            for &(v, w) in &traj[1..] {
                let th = w.atan2(v - ve);
                let mut d = th - prev;
                while d > std::f64::consts::PI {
                    d -= std::f64::consts::TAU;
                }
                while d < -std::f64::consts::PI {
                    d += std::f64::consts::TAU;
                }
                total += d;
                prev = th;
            }
            ((total.abs() / std::f64::consts::TAU + 1e-6).floor() as u32, false)
        }
        None => (0, true),
    };

    ShootResult {
        s,
        end_value,
        admissible: true,
        escaped: false,
        classification: Some(classification),
        turns,
        turns_ambiguous,
        energy_drift,
    }
}

/// Time of the first return to `v = 0` of the orbit leaving `(0, s)`,
/// integrated with step `dt` and closed by one step in `v` as the
/// independent variable.
pub fn shoot_return_time(p: &PhaseParams, s: f64, dt: f64) -> Result<f64> {
    if s == 0.0 || !(dt > 0.0) {
        return Err(Error::Input("need s != 0 and dt > 0".into()));
    }
    let (mut v, mut w) = (0.0, s);
    let mut t = 0.0;
    for _ in 0..50_000_000usize {
        let (nv, nw) = rk4_step(p, v, w, dt).ok_or(Error::UnboundedOrbit { energy: 0.5 * s * s })?;
        if nv.abs() > BLOWUP || !(nv > -1.0) {
            return Err(Error::UnboundedOrbit { energy: 0.5 * s * s });
        }
        if nv.signum() != s.signum() && t > 0.0 || nv == 0.0 {
            // One RK4 step in `v` for (t, w): dt/dv = 1/w, dw/dv = −g/w.
            let f = |v: f64, w: f64| (1.0 / w, -g_raw(p, v) / w);
            let dv = -v;
            let (a1, b1) = f(v, w);
            let (a2, b2) = f(v + 0.5 * dv, w + 0.5 * dv * b1);
            let (a3, b3) = f(v + 0.5 * dv, w + 0.5 * dv * b2);
            let (a4, _) = f(v + dv, w + dv * b3);
            return Ok(t + dv / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4));
        }
        v = nv;
        w = nw;
        t += dt;
    }
    Err(Error::Iteration { iterations: 50_000_000, residual: v.abs() })
}

const COLLAPSED_END_TOL: f64 = 1e-6;

/// `v(T/2)` clipped at `−1`: shots that reach `v = −1` count as `−1`, which
/// keeps the end map continuous across the escape boundary. `None` for
/// blow-up past [`BLOWUP`].
fn effective_end(r: &ShootResult) -> Option<f64> {
    if r.admissible {
        Some(r.end_value)
    } else if r.escaped {
        Some(-1.0)
    } else {
        None
    }
}

/// Shooting solutions on a prescribed grid of slopes: sign changes of the
/// end value between neighbouring shots are refined by bisection to
/// `|end_value| ≤ 1e−10` (or to adjacent floats, where `|end_value| ≤ 1e−6`
/// is accepted); inadmissible roots are discarded.
pub fn count_solutions_on(p: &PhaseParams, slopes: &[f64], steps: usize) -> Vec<ShootResult> {
    let shots: Vec<ShootResult> = slopes.iter().map(|&s| shoot_with(p, s, steps)).collect();
    let mut roots: Vec<ShootResult> = Vec::new();
    let push = |r: ShootResult, roots: &mut Vec<ShootResult>| {
        if r.admissible && !roots.iter().any(|q| (q.s - r.s).abs() <= 1e-9 * (1.0 + r.s.abs())) {
            roots.push(r);
        }
    };
    for (i, shot) in shots.iter().enumerate() {
        if shot.admissible && shot.end_value == 0.0 {
            push(shot.clone(), &mut roots);
            continue;
        }
        let Some(next) = shots.get(i + 1) else { break };
        let (Some(e0), Some(e1)) = (effective_end(shot), effective_end(next)) else { continue };
        if e0.signum() == e1.signum() || e1 == 0.0 {
            continue;
        }
        let (mut lo, mut hi) = ((shot.s, e0), (next.s, e1));
        let mut best: Option<ShootResult> = [shot, next]
            .into_iter()
            .filter(|r| r.admissible)
            .min_by(|a, b| a.end_value.abs().total_cmp(&b.end_value.abs()))
            .cloned();
        let mut collapsed = false;
        for _ in 0..200 {
            if best.as_ref().is_some_and(|b| b.end_value.abs() <= 1e-10) {
                break;
            }
            let mid_s = 0.5 * (lo.0 + hi.0);
            if mid_s <= lo.0.min(hi.0) || mid_s >= lo.0.max(hi.0) {
                collapsed = true;
                break;
            }
            let mid = shoot_with(p, mid_s, steps);
            let Some(em) = effective_end(&mid) else { break };
            if mid.admissible && best.as_ref().is_none_or(|b| mid.end_value.abs() < b.end_value.abs()) {
                best = Some(mid.clone());
            }
            if em.signum() == lo.1.signum() {
                lo = (mid_s, em);
            } else {
                hi = (mid_s, em);
            }
        }
        // A bracket narrowed to adjacent floats still certifies a root;
        // near `v = −1` the end map is too steep for 1e−10 to be reachable.
        let tol = if collapsed { COLLAPSED_END_TOL } else { 1e-10 };
        if let Some(b) = best.filter(|b| b.end_value.abs() <= tol) {
            push(b, &mut roots);
        }
    }
    roots.sort_by(|a, b| a.s.total_cmp(&b.s));
    roots
}

/// Slopes for a full solution count: 300 points accumulating at the escape
/// slope `−√(2G(−1))` (or down to −2 when `G(−1) ≤ 0`) and 600 log-spaced
/// positive slopes in `[1e−6, 1e7]`.
pub fn default_slopes(p: &PhaseParams) -> Vec<f64> {
    let g = potential_at_minus_one(p);
    let edge = if g > 0.0 { (2.0 * g).sqrt() } else { 2.0 };
    let mut s: Vec<f64> = log_grid(1e-14, 1.0, 300).into_iter().map(|x| -edge * (1.0 - x)).collect();
    s.extend(log_grid(1e-6, 1e7, 600));
    s.sort_by(f64::total_cmp);
    s
}

/// [`count_solutions_on`] over `n_samples` equally spaced slopes.
pub fn count_solutions(p: &PhaseParams, s_lo: f64, s_hi: f64, n_samples: usize) -> Result<Vec<ShootResult>> {
    if !(s_lo < s_hi) || n_samples < 2 {
        return Err(Error::Input(format!(
            "need s_lo < s_hi and n_samples >= 2, got [{s_lo}, {s_hi}] with {n_samples}"
        )));
    }
    let slopes: Vec<f64> = (0..n_samples)
        .map(|i| s_lo + (s_hi - s_lo) * i as f64 / (n_samples - 1) as f64)
        .collect();
    Ok(count_solutions_on(p, &slopes, DEFAULT_STEPS))
}

/// `u = ln(1+v)/μ` at the interior nodes of a shot with `steps` steps.
/// The end value left by the root finder is removed by subtracting the
/// linear interpolant of the two boundary values, so that `u(±T/2) = 0`
/// holds exactly; this moves `v` by at most `|end_value|`.
pub fn to_u_nodes(p: &PhaseParams, s: f64, steps: usize) -> Option<Vec<f64>> {
    let traj = shoot_trajectory(p, s, steps)?;
    let end = traj[steps].0;
    Some(
        traj[1..steps]
            .iter()
            .enumerate()
            .map(|(i, &(v, _))| {
                let v = v - end * (i + 1) as f64 / steps as f64;
                v.ln_1p() / p.mu
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(lc: f64, h: f64, t: f64) -> PhaseParams {
        PhaseParams::new(lc, 1.0, h, 1.0, t).unwrap()
    }

    #[test]
    fn g_and_potential_at_zero() {
        let p = params(1.3, 0.7, 1.0);
        assert_eq!(g_eval(&p, 0.0).unwrap(), 0.7);
        assert_eq!(potential_eval(&p, 0.0).unwrap(), 0.0);
        assert!(g_eval(&p, -1.0).is_err());
        assert!(potential_eval(&p, -2.0).is_err());
    }

    #[test]
    fn potential_is_continuous_across_small_branch() {
        let p = params(1.0, -1.0, 1.0);
        for v in [SMALL_V, -SMALL_V] {
            let a = potential_raw(&p, v * (1.0 - 1e-12));
            let b = potential_raw(&p, v * (1.0 + 1e-12));
            assert!((a - b).abs() < 1e-13, "{a} {b}");
        }
    }

    #[test]
    fn classification() {
        assert_eq!(case_classify(&params(1.0, 1.0, 1.0)), PhaseCase::Case1);
        assert_eq!(case_classify(&params(3.0, 1.0, 1.0)), PhaseCase::Case2);
        assert_eq!(case_classify(&params(0.0, -1.0, 1.0)), PhaseCase::Case3);
        assert_eq!(case_classify(&params(2.0, 1.0, 1.0)), PhaseCase::Boundary);
        assert_eq!(case_classify(&params(1.0, 0.0, 1.0)), PhaseCase::HZero);
        assert_eq!(case_classify(&params(0.0, 1.0, 1.0)), PhaseCase::Linear);
    }

    #[test]
    fn equilibrium_residual_and_type() {
        for (lc, h) in [(1.0, 1.0), (3.0, 1.0), (1.0, -1.0), (1.0, 0.0), (0.2, -3.0)] {
            let p = params(lc, h, 1.0);
            let eq = equilibria(&p);
            assert_eq!(eq.len(), 1);
            assert!(g_raw(&p, eq[0].v).abs() <= 1e-10 * p.scale());
            assert_eq!(eq[0].kind, EquilibriumKind::Center);
        }
        assert_eq!(equilibria(&params(1.0, 0.0, 1.0))[0].v, 0.0);
    }

    #[test]
    fn linear_oscillator_time_map() {
        // −v″ = 1 + v: 1 + v = cos t + a sin t stays above 1 for t < 2 atan a.
        let p = params(0.0, 1.0, 1.0);
        for a in [0.1, 1.0, 10.0] {
            let t = time_map_positive(&p, a).unwrap();
            let exact = 2.0 * a.atan();
            assert!((t - exact).abs() < 1e-10 * exact, "{a}: {t} vs {exact}");
        }
        assert!(matches!(
            time_map_positive(&params(0.0, 0.0, 1.0), 1.0),
            Err(Error::UnboundedOrbit { .. })
        ));
    }

    #[test]
    fn shooting_at_rest() {
        let r = shoot(&params(1.0, 0.0, 2.0), 0.0);
        assert!(r.admissible);
        assert_eq!(r.end_value, 0.0);
    }
}
