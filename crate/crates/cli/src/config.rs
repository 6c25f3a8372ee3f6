//! Problem files.
//!
//! A problem file is a `key = value` document with `[section]` headers.
//! Expressions are double-quoted strings over the declared `vars`; matrices
//! are arrays of rows whose entries are expressions or numbers.
//!
//! ```text
//! dim = 2
//! vars = ["x", "y"]
//! grid_n = 33
//! phi = "(x^2 + y^2)/2"
//! X = ["x - y/2", "y + x/2"]
//! g = [["1", "0"], ["0", "1"]]
//!
//! [domain]
//! lo = [-1, -1]
//! hi = [1, 1]
//!
//! [tol]
//! newton = 1e-10
//! ```

use std::path::Path;

use gradcert::expr::{parse, Expr};
use gradcert::fields::{
    Chart, Components, ScalarField, TensorField, TwoForm, VectorField, DEFAULT_RESOLUTION,
};
use gradcert::tol::Tolerances;
use thiserror::Error;
use toml::{Table, Value};

#[derive(Debug, Error)]
#[error("{message}")]
pub struct ConfigError {
    pub message: String,
}

impl ConfigError {
    fn new(message: impl Into<String>) -> Self {
        ConfigError {
            message: message.into(),
        }
    }
}

const KNOWN_KEYS: &[&str] = &[
    "dim",
    "vars",
    "grid_n",
    "domain",
    "phi",
    "X",
    "g",
    "omega",
    "J",
    "phi_tilde",
    "steps",
    "radius",
    "tol",
];

#[derive(Clone, Debug)]
pub struct ProblemSpec {
    pub dim: usize,
    pub vars: Vec<String>,
    pub grid_n: usize,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub phi: ScalarField,
    pub x: Option<VectorField>,
    pub g: Option<TensorField>,
    pub omega: Option<TwoForm>,
    pub j: Option<TensorField>,
    pub phi_tilde: Option<ScalarField>,
    pub steps: Option<usize>,
    pub radius: Option<f64>,
    pub tol: Tolerances,
    pub exclusion_radius: Option<f64>,
}

impl ProblemSpec {
    pub fn chart(&self) -> Result<Chart, ConfigError> {
        let mut c = Chart::new(self.lo.clone(), self.hi.clone())
            .and_then(|c| c.with_resolution(self.grid_n))
            .map_err(|e| ConfigError::new(e.to_string()))?;
        if let Some(r) = self.exclusion_radius {
            c = c.with_exclusion_radius(r).map_err(|e| ConfigError::new(e.to_string()))?;
        }
        Ok(c)
    }

    pub fn require_x(&self) -> Result<&VectorField, ConfigError> {
        self.x.as_ref().ok_or_else(|| missing("X"))
    }

    pub fn require_g(&self) -> Result<&TensorField, ConfigError> {
        self.g.as_ref().ok_or_else(|| missing("g"))
    }

    pub fn require_omega(&self) -> Result<&TwoForm, ConfigError> {
        self.omega.as_ref().ok_or_else(|| missing("omega"))
    }

    pub fn require_j(&self) -> Result<&TensorField, ConfigError> {
        self.j.as_ref().ok_or_else(|| missing("J"))
    }

    pub fn require_phi_tilde(&self) -> Result<&ScalarField, ConfigError> {
        self.phi_tilde.as_ref().ok_or_else(|| missing("phi_tilde"))
    }
}

fn missing(key: &str) -> ConfigError {
    ConfigError::new(format!("missing key `{key}`"))
}

pub fn load_problem(path: &Path) -> Result<ProblemSpec, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::new(format!("cannot read {}: {e}", path.display())))?;
    parse_problem(&text)
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, col)
}

pub fn parse_problem(text: &str) -> Result<ProblemSpec, ConfigError> {
    let table: Table = text.parse().map_err(|e: toml::de::Error| {
        let at = e
            .span()
            .map(|s| {
                let (l, c) = line_col(text, s.start);
                format!(" at line {l}, column {c}")
            })
            .unwrap_or_default();
        ConfigError::new(format!("malformed problem file{at}: {}", e.message()))
    })?;
    for key in table.keys() {
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(ConfigError::new(format!("unknown key `{key}`")));
        }
    }

    let dim = match table.get("dim") {
        Some(v) => positive_int(v, "dim")?,
        None => return Err(missing("dim")),
    };
    let vars = match table.get("vars") {
        Some(v) => string_array(v, "vars")?,
        None => default_vars(dim),
    };
    if vars.len() != dim {
        return Err(ConfigError::new(format!(
            "`vars` has {} names but dim = {dim}",
            vars.len()
        )));
    }
    let grid_n = match table.get("grid_n") {
        Some(v) => positive_int(v, "grid_n")?,
        None => DEFAULT_RESOLUTION,
    };

    let (mut lo, mut hi) = (vec![-1.0; dim], vec![1.0; dim]);
    if let Some(domain) = table.get("domain") {
        let domain = domain
            .as_table()
            .ok_or_else(|| ConfigError::new("`domain` must be a section"))?;
        for key in domain.keys() {
            if key != "lo" && key != "hi" {
                return Err(ConfigError::new(format!("unknown key `domain.{key}`")));
            }
        }
        if let Some(v) = domain.get("lo") {
            lo = number_array(v, "domain.lo", dim)?;
        }
        if let Some(v) = domain.get("hi") {
            hi = number_array(v, "domain.hi", dim)?;
        }
    }

    let ctx = ExprCtx { vars: &vars, dim };
    let phi = match table.get("phi") {
        Some(v) => ctx.scalar(v, "phi")?,
        None => return Err(missing("phi")),
    };
    let x = table.get("X").map(|v| ctx.vector(v, "X")).transpose()?;
    let g = table.get("g").map(|v| ctx.matrix(v, "g")).transpose()?;
    let j = table.get("J").map(|v| ctx.matrix(v, "J")).transpose()?;
    if x.is_none() && j.is_none() {
        return Err(missing("X"));
    }
    let omega = match table.get("omega") {
        Some(v) => {
            let entries = ctx.matrix_exprs(v, "omega")?;
            Some(
                TwoForm::new(dim, Components::Symbolic(entries))
                    .map_err(|e| ConfigError::new(format!("`omega`: {e}")))?,
            )
        }
        None => None,
    };
    let phi_tilde = table
        .get("phi_tilde")
        .map(|v| ctx.scalar(v, "phi_tilde"))
        .transpose()?;
    let steps = table.get("steps").map(|v| positive_int(v, "steps")).transpose()?;
    let radius = table.get("radius").map(|v| number(v, "radius")).transpose()?;

    let mut tol = Tolerances::default();
    let mut exclusion_radius = None;
    if let Some(section) = table.get("tol") {
        let section = section
            .as_table()
            .ok_or_else(|| ConfigError::new("`tol` must be a section"))?;
        for (key, v) in section {
            let value = number(v, &format!("tol.{key}"))?;
            if key == "exclusion_radius" {
                exclusion_radius = Some(value);
            } else if !tol.set(key, value) {
                return Err(ConfigError::new(format!("unknown key `tol.{key}`")));
            }
        }
    }

    let spec = ProblemSpec {
        dim,
        vars,
        grid_n,
        lo,
        hi,
        phi,
        x,
        g,
        omega,
        j,
        phi_tilde,
        steps,
        radius,
        tol,
        exclusion_radius,
    };
    if let Some(omega) = &spec.omega {
        check_antisymmetric(omega, &spec.chart()?, spec.tol.symmetry)?;
    }
    Ok(spec)
}

fn default_vars(dim: usize) -> Vec<String> {
    match dim {
        1 => vec!["x".into()],
        2 => vec!["x".into(), "y".into()],
        3 => vec!["x".into(), "y".into(), "z".into()],
        _ => (1..=dim).map(|i| format!("x{i}")).collect(),
    }
}

fn positive_int(v: &Value, key: &str) -> Result<usize, ConfigError> {
    match v.as_integer() {
        Some(n) if n > 0 => Ok(n as usize),
        _ => Err(ConfigError::new(format!("`{key}` must be a positive integer"))),
    }
}

fn number(v: &Value, key: &str) -> Result<f64, ConfigError> {
    match v {
        Value::Integer(n) => Ok(*n as f64),
        Value::Float(f) => Ok(*f),
        _ => Err(ConfigError::new(format!("`{key}` must be a number"))),
    }
}

fn number_array(v: &Value, key: &str, len: usize) -> Result<Vec<f64>, ConfigError> {
    let arr = v
        .as_array()
        .ok_or_else(|| ConfigError::new(format!("`{key}` must be an array")))?;
    if arr.len() != len {
        return Err(ConfigError::new(format!(
            "`{key}` has {} entries, expected {len}",
            arr.len()
        )));
    }
    arr.iter().map(|v| number(v, key)).collect()
}

fn string_array(v: &Value, key: &str) -> Result<Vec<String>, ConfigError> {
    v.as_array()
        .and_then(|a| a.iter().map(|s| s.as_str().map(str::to_string)).collect())
        .ok_or_else(|| ConfigError::new(format!("`{key}` must be an array of strings")))
}

struct ExprCtx<'a> {
    vars: &'a [String],
    dim: usize,
}

impl ExprCtx<'_> {
    fn expr(&self, v: &Value, key: &str) -> Result<Expr, ConfigError> {
        match v {
            Value::String(s) => parse(s, self.vars).map_err(|e| {
                ConfigError::new(format!("`{key}`: {e} in \"{s}\""))
            }),
            Value::Integer(_) | Value::Float(_) => Ok(Expr::Const(number(v, key)?)),
            _ => Err(ConfigError::new(format!(
                "`{key}` must be a quoted expression or a number"
            ))),
        }
    }

    fn scalar(&self, v: &Value, key: &str) -> Result<ScalarField, ConfigError> {
        ScalarField::new(self.dim, self.expr(v, key)?).map_err(|e| ConfigError::new(format!("`{key}`: {e}")))
    }

    fn vector(&self, v: &Value, key: &str) -> Result<VectorField, ConfigError> {
        let arr = v
            .as_array()
            .ok_or_else(|| ConfigError::new(format!("`{key}` must be an array of expressions")))?;
        if arr.len() != self.dim {
            return Err(ConfigError::new(format!(
                "`{key}` has {} components, expected {}",
                arr.len(),
                self.dim
            )));
        }
        let exprs = arr
            .iter()
            .enumerate()
            .map(|(i, e)| self.expr(e, &format!("{key}[{i}]")))
            .collect::<Result<Vec<_>, _>>()?;
        VectorField::from_exprs(self.dim, exprs).map_err(|e| ConfigError::new(format!("`{key}`: {e}")))
    }

    fn matrix_exprs(&self, v: &Value, key: &str) -> Result<Vec<Expr>, ConfigError> {
        let m = self.dim;
        let shape_err = |rows: usize, cols: usize| {
            ConfigError::new(format!(
                "`{key}` must be a {m}×{m} matrix, got {rows}×{cols}"
            ))
        };
        let rows = v
            .as_array()
            .ok_or_else(|| ConfigError::new(format!("`{key}` must be an array of rows")))?;
        let mut out = Vec::with_capacity(m * m);
        for (i, row) in rows.iter().enumerate() {
            let row = row
                .as_array()
                .ok_or_else(|| ConfigError::new(format!("`{key}` row {i} must be an array")))?;
            if row.len() != m || rows.len() != m {
                return Err(shape_err(rows.len(), row.len()));
            }
            for (j, e) in row.iter().enumerate() {
                out.push(self.expr(e, &format!("{key}[{i}][{j}]"))?);
            }
        }
        if rows.len() != m {
            return Err(shape_err(rows.len(), 0));
        }
        Ok(out)
    }

    fn matrix(&self, v: &Value, key: &str) -> Result<TensorField, ConfigError> {
        let entries = self.matrix_exprs(v, key)?;
        TensorField::new(self.dim, Components::Symbolic(entries))
            .map_err(|e| ConfigError::new(format!("`{key}`: {e}")))
    }
}

fn check_antisymmetric(omega: &TwoForm, chart: &Chart, tol: f64) -> Result<(), ConfigError> {
    let r = omega
        .antisymmetry_residual(&chart.grid_points())
        .map_err(|e| ConfigError::new(format!("`omega`: {e}")))?;
    if r > tol {
        return Err(ConfigError::new(format!(
            "`omega` must be antisymmetric; max |ω_ij + ω_ji| = {r:e}"
        )));
    }
    Ok(())
}
