//! Run configuration: JSON on disk, validated into [`RunConfig`].

use std::fmt;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use quadgrad::grid::{parse_grid_function_csv, Grid, GridFunction};
use quadgrad::{Mu, ProblemSpec};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Scenario {
    Eigen,
    Solve,
    Branch,
    Timemap,
    VerifySuite,
}

impl Scenario {
    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Eigen => "eigen",
            Scenario::Solve => "solve",
            Scenario::Branch => "branch",
            Scenario::Timemap => "timemap",
            Scenario::VerifySuite => "verify_suite",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    Interval,
    Rectangle,
}

/// A coefficient: a constant or node values tabulated in a CSV file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Field {
    Constant(f64),
    Table(TablePath),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TablePath {
    pub csv: PathBuf,
}

impl Field {
    pub fn constant(&self) -> Option<f64> {
        match self {
            Field::Constant(x) => Some(*x),
            Field::Table(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub domain: DomainKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lx: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ly: Option<f64>,
    pub n: i64,
    pub c: Field,
    #[serde(default = "zero_field")]
    pub h: Field,
    #[serde(default = "unit_field")]
    pub mu: Field,
}

fn zero_field() -> Field {
    Field::Constant(0.0)
}

fn unit_field() -> Field {
    Field::Constant(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenKind {
    Gamma1,
    NuTilde1,
    Xi1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormulationKind {
    Direct,
    Transformed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartKind {
    /// Newton from `u = 0`.
    Zero,
    /// Minimal solution reached by continuation from `λ = 0`.
    Minimal,
    /// Monotone iteration between constructed lower and upper solutions.
    Monotone,
    /// Monotone iteration below the anti-maximum upper solution `β ≪ 0`.
    Negative,
    /// Every start of the multistart family plus seeded random starts.
    Multistart,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    Lambda,
    A,
    K,
}

/// Scenario parameters. Keys that do not belong to the scenario are rejected
/// by [`RunConfig::validate`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eigenvalue: Option<EigenKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_over_gamma1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_over_nu1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub formulation: Option<FormulationKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<StartKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub second: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_starts: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilyKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param_start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param_limit: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param_start_over_gamma1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param_limit_over_gamma1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_tilde: Option<Field>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signed_branch_over_gamma1: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_over_t0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_over_t1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_over_period: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub criteria: Option<Vec<u32>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub newton: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fold_resolution: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blowup_guard: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_step: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Target {
    pub value: f64,
    pub rel_tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignExpect {
    Positive,
    Negative,
    SignChanging,
}

/// Declared assertions; the run exits with code 4 if any fails.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expect {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eigenvalue: Option<Target>,
    /// `false` declares expected absence: the run passes when no start converges.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sign: Option<SignExpect>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub second_sign: Option<SignExpect>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ordered: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terminated_by: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fold_below_gamma1: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fold_in: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub case: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solutions: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positive: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub negative: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sign_changing: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub all_pass: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<Scenario>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub problem: Option<ProblemConfig>,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub expect: Expect,
    /// Directory that relative CSV paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// Reads and validates a config file. Relative paths inside it resolve
/// against the file's directory.
pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_config_str(&text, &base)
}

pub fn parse_config_str(text: &str, base_dir: &Path) -> Result<RunConfig> {
    let mut cfg: RunConfig = serde_json::from_str(text).map_err(|e| {
        CliError::Validation(format!("{e}"))
    })?;
    cfg.base_dir = base_dir.to_path_buf();
    Ok(cfg)
}

fn invalid(field: &str, detail: impl fmt::Display) -> CliError {
    CliError::Validation(format!("{field}: {detail}"))
}

fn positive(field: &str, x: Option<f64>) -> Result<()> {
    match x {
        Some(v) if !(v > 0.0 && v.is_finite()) => Err(invalid(field, format!("must be positive, got {v}"))),
        _ => Ok(()),
    }
}

fn finite(field: &str, x: Option<f64>) -> Result<()> {
    match x {
        Some(v) if !v.is_finite() => Err(invalid(field, format!("must be finite, got {v}"))),
        _ => Ok(()),
    }
}

/// Names of the `Some` fields of a serializable struct.
fn set_keys<T: Serialize>(value: &T) -> Vec<String> {
    match serde_json::to_value(value) {
        Ok(serde_json::Value::Object(map)) => map.keys().cloned().collect(),
        _ => Vec::new(),
    }
}

fn allowed_params(s: Scenario) -> &'static [&'static str] {
    match s {
        Scenario::Eigen => &["eigenvalue"],
        Scenario::Solve => &[
            "lambda",
            "lambda_over_gamma1",
            "formulation",
            "start",
            "second",
            "random_starts",
        ],
        Scenario::Branch => &[
            "family",
            "lambda",
            "lambda_over_gamma1",
            "lambda_over_nu1",
            "start",
            "param_start",
            "param_limit",
            "param_start_over_gamma1",
            "param_limit_over_gamma1",
            "h_tilde",
            "signed_branch_over_gamma1",
        ],
        Scenario::Timemap => &[
            "lambda",
            "t",
            "t_over_t0",
            "t_over_t1",
            "t_over_period",
            "a_min",
            "a_max",
            "a_samples",
            "steps",
        ],
        Scenario::VerifySuite => &["criteria"],
    }
}

fn allowed_expect(s: Scenario) -> &'static [&'static str] {
    match s {
        Scenario::Eigen => &["eigenvalue"],
        Scenario::Solve => &["converged", "max_residual", "sign", "second_sign", "ordered"],
        Scenario::Branch => &["terminated_by", "fold_below_gamma1", "fold_in"],
        Scenario::Timemap => &["case", "solutions", "positive", "negative", "sign_changing"],
        Scenario::VerifySuite => &["all_pass"],
    }
}

impl RunConfig {
    /// Checks the config against the scenario named on the command line.
    pub fn validate(&self, scenario: Scenario) -> Result<()> {
        if let Some(s) = self.scenario {
            if s != scenario {
                return Err(invalid("scenario", format!("config is for '{s}' but '{scenario}' was requested")));
            }
        }
        for key in set_keys(&self.params) {
            if !allowed_params(scenario).contains(&key.as_str()) {
                return Err(invalid(&format!("params.{key}"), format!("not used by the {scenario} scenario")));
            }
        }
        for key in set_keys(&self.expect) {
            if !allowed_expect(scenario).contains(&key.as_str()) {
                return Err(invalid(&format!("expect.{key}"), format!("not checked by the {scenario} scenario")));
            }
        }
        let p = &self.params;
        let lambda_keys = [p.lambda.is_some(), p.lambda_over_gamma1.is_some(), p.lambda_over_nu1.is_some()];
        if lambda_keys.iter().filter(|&&b| b).count() > 1 {
            return Err(invalid("params", "give at most one of lambda, lambda_over_gamma1, lambda_over_nu1"));
        }
        let t_keys = [p.t.is_some(), p.t_over_t0.is_some(), p.t_over_t1.is_some(), p.t_over_period.is_some()];
        if t_keys.iter().filter(|&&b| b).count() > 1 {
            return Err(invalid("params", "give at most one of t, t_over_t0, t_over_t1, t_over_period"));
        }
        if p.param_start.is_some() && p.param_start_over_gamma1.is_some() {
            return Err(invalid("params", "give at most one of param_start, param_start_over_gamma1"));
        }
        if p.param_limit.is_some() && p.param_limit_over_gamma1.is_some() {
            return Err(invalid("params", "give at most one of param_limit, param_limit_over_gamma1"));
        }
        for (name, v) in [
            ("params.lambda", p.lambda),
            ("params.lambda_over_gamma1", p.lambda_over_gamma1),
            ("params.param_start", p.param_start),
            ("params.param_limit", p.param_limit),
            ("params.param_start_over_gamma1", p.param_start_over_gamma1),
            ("params.param_limit_over_gamma1", p.param_limit_over_gamma1),
        ] {
            finite(name, v)?;
        }
        for (name, v) in [
            ("params.lambda_over_nu1", p.lambda_over_nu1),
            ("params.t", p.t),
            ("params.t_over_t0", p.t_over_t0),
            ("params.t_over_t1", p.t_over_t1),
            ("params.t_over_period", p.t_over_period),
            ("params.a_min", p.a_min),
            ("params.a_max", p.a_max),
        ] {
            positive(name, v)?;
        }
        if let (Some(lo), Some(hi)) = (p.a_min, p.a_max) {
            if lo >= hi {
                return Err(invalid("params.a_min", format!("must be below a_max, got [{lo}, {hi}]")));
            }
        }
        if matches!(p.a_samples, Some(n) if n < 2) {
            return Err(invalid("params.a_samples", "must be at least 2"));
        }
        if matches!(p.steps, Some(n) if n < 10) {
            return Err(invalid("params.steps", "must be at least 10"));
        }
        if let Some(list) = &p.signed_branch_over_gamma1 {
            if list.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                return Err(invalid("params.signed_branch_over_gamma1", "entries must be finite and nonnegative"));
            }
        }
        if let Some(list) = &p.criteria {
            if let Some(bad) = list.iter().find(|&&c| !(1..=11).contains(&c)) {
                return Err(invalid("params.criteria", format!("unknown criterion {bad}")));
            }
        }
        let t = &self.tolerances;
        positive("tolerances.newton", t.newton)?;
        positive("tolerances.fold_resolution", t.fold_resolution)?;
        positive("tolerances.blowup_guard", t.blowup_guard)?;
        positive("tolerances.max_step", t.max_step)?;
        if t.max_iters == Some(0) {
            return Err(invalid("tolerances.max_iters", "must be positive"));
        }
        if let Some(target) = self.expect.eigenvalue {
            positive("expect.eigenvalue.rel_tol", Some(target.rel_tol))?;
        }
        positive("expect.max_residual", self.expect.max_residual)?;
        if let Some(r) = self.expect.fold_in {
            if !(r[0] <= r[1]) {
                return Err(invalid("expect.fold_in", "needs lo <= hi"));
            }
        }
        if let Some(tb) = &self.expect.terminated_by {
            if !["fold", "param_limit", "blowup_guard", "solver_failure"].contains(&tb.as_str()) {
                return Err(invalid("expect.terminated_by", format!("unknown termination '{tb}'")));
            }
        }
        if let Some(case) = &self.expect.case {
            if !["case1", "case2", "case3", "h_zero", "boundary", "linear"].contains(&case.as_str()) {
                return Err(invalid("expect.case", format!("unknown case '{case}'")));
            }
        }
        match (&self.problem, scenario) {
            (None, Scenario::VerifySuite) => {}
            (None, _) => return Err(invalid("problem", format!("required by the {scenario} scenario"))),
            (Some(pc), _) => {
                self.check_problem(pc)?;
                if scenario == Scenario::Timemap {
                    if pc.domain != DomainKind::Interval {
                        return Err(invalid("problem.domain", "timemap needs an interval"));
                    }
                    for (name, f) in [("problem.c", &pc.c), ("problem.h", &pc.h), ("problem.mu", &pc.mu)] {
                        if f.constant().is_none() {
                            return Err(invalid(name, "timemap needs a constant"));
                        }
                    }
                }
            }
        }
        if let Some(f) = &p.h_tilde {
            self.check_field_path("params.h_tilde", f)?;
        }
        Ok(())
    }

    fn check_field_path(&self, name: &str, f: &Field) -> Result<()> {
        match f {
            Field::Constant(x) if !x.is_finite() => Err(invalid(name, format!("must be finite, got {x}"))),
            Field::Constant(_) => Ok(()),
            Field::Table(t) => {
                let path = self.base_dir.join(&t.csv);
                if path.is_file() {
                    Ok(())
                } else {
                    Err(invalid(name, format!("file not found: {}", path.display())))
                }
            }
        }
    }

    fn check_problem(&self, pc: &ProblemConfig) -> Result<()> {
        if pc.n < 2 {
            return Err(invalid("problem.n", format!("must be at least 2, got {}", pc.n)));
        }
        match pc.domain {
            DomainKind::Interval => {
                if pc.lx.is_some() || pc.ly.is_some() {
                    return Err(invalid("problem.lx", "an interval takes 'length'"));
                }
                positive("problem.length", pc.length)?;
                if pc.length.is_none() {
                    return Err(invalid("problem.length", "required for an interval"));
                }
            }
            DomainKind::Rectangle => {
                if pc.length.is_some() {
                    return Err(invalid("problem.length", "a rectangle takes 'lx' and 'ly'"));
                }
                positive("problem.lx", pc.lx)?;
                positive("problem.ly", pc.ly)?;
                if pc.lx.is_none() || pc.ly.is_none() {
                    return Err(invalid("problem.lx", "'lx' and 'ly' are required for a rectangle"));
                }
            }
        }
        self.check_field_path("problem.c", &pc.c)?;
        self.check_field_path("problem.h", &pc.h)?;
        self.check_field_path("problem.mu", &pc.mu)?;
        if let Field::Constant(mu) = pc.mu {
            if mu <= 0.0 {
                return Err(invalid("problem.mu", format!("must be positive, got {mu}")));
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        let pc = self.problem.as_ref().ok_or_else(|| invalid("problem", "missing"))?;
        let n = pc.n as usize;
        let grid = match pc.domain {
            DomainKind::Interval => Grid::interval(pc.length.unwrap_or(1.0), n),
            DomainKind::Rectangle => Grid::rectangle(pc.lx.unwrap_or(1.0), pc.ly.unwrap_or(1.0), n),
        };
        grid.map_err(|e| invalid("problem", e))
    }

    pub fn field(&self, name: &str, f: &Field, grid: Grid) -> Result<GridFunction> {
        match f {
            Field::Constant(x) => Ok(GridFunction::constant(grid, *x)),
            Field::Table(t) => {
                let path = self.base_dir.join(&t.csv);
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| invalid(name, format!("cannot read {}: {e}", path.display())))?;
                parse_grid_function_csv(grid, &text).map_err(|e| invalid(name, e))
            }
        }
    }

    /// The discrete problem described by `problem`.
    pub fn problem_spec(&self) -> Result<ProblemSpec> {
        let pc = self.problem.as_ref().ok_or_else(|| invalid("problem", "missing"))?;
        let grid = self.grid()?;
        let c = self.field("problem.c", &pc.c, grid)?;
        let h = self.field("problem.h", &pc.h, grid)?;
        let mu = match &pc.mu {
            Field::Constant(m) => Mu::Constant(*m),
            table => {
                let field = self.field("problem.mu", table, grid)?;
                let (mu1, mu2) = (field.min(), field.max());
                Mu::Variable { field, mu1, mu2 }
            }
        };
        ProblemSpec::new(grid, c, h, mu).map_err(|e| invalid("problem", e))
    }

    pub fn h_tilde(&self, grid: Grid) -> Result<Option<GridFunction>> {
        self.params
            .h_tilde
            .as_ref()
            .map(|f| self.field("params.h_tilde", f, grid))
            .transpose()
    }
}
