//! CSV grids for plotting.

use std::fmt::Write;
use std::str::FromStr;

use gradcert::gradlike::{lyapunov_ratio, GradError};

use crate::config::ProblemSpec;
use crate::CliError;

/// Largest chart dimension `grid_export` accepts.
pub const MAX_EXPORT_DIM: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExportField {
    Phi,
    X,
    Lyapunov,
    DphiX,
}

impl FromStr for ExportField {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "phi" => Ok(ExportField::Phi),
            "X" => Ok(ExportField::X),
            "lyapunov" => Ok(ExportField::Lyapunov),
            "dphi_X" => Ok(ExportField::DphiX),
            _ => Err(format!("unknown field `{s}`; expected phi, X, lyapunov or dphi_X")),
        }
    }
}

/// One row per lattice point: coordinates, then the value (or the `m`
/// components of `X`). Points where the value is undefined or not finite
/// are skipped.
pub fn grid_export(spec: &ProblemSpec, field: ExportField) -> Result<String, CliError> {
    if spec.dim > MAX_EXPORT_DIM {
        return Err(CliError::UnsupportedDim(spec.dim));
    }
    let chart = spec.chart()?;
    let mut out = spec.vars.join(",");
    match field {
        ExportField::X => {
            for v in &spec.vars {
                write!(out, ",X_{v}").unwrap();
            }
        }
        _ => out.push_str(",value"),
    }
    out.push('\n');

    let x = match field {
        ExportField::Phi => None,
        _ => Some(spec.require_x()?),
    };
    for p in chart.grid_points() {
        let values = match (field, x) {
            (ExportField::Phi, _) => spec.phi.eval(&p).map(|v| vec![v]).ok(),
            (ExportField::X, Some(x)) => x.eval(&p).ok(),
            (ExportField::Lyapunov, Some(x)) => match lyapunov_ratio(&spec.phi, x, &p) {
                Ok(v) => Some(vec![v]),
                Err(GradError::ZeroDenominator { .. }) => None,
                Err(e) => return Err(CliError::Core(e.to_string())),
            },
            (ExportField::DphiX, Some(x)) => match (spec.phi.gradient(&p), x.eval(&p)) {
                (Ok(g), Ok(v)) => Some(vec![g.iter().zip(&v).map(|(a, b)| a * b).sum()]),
                _ => None,
            },
            _ => unreachable!(),
        };
        let Some(values) = values.filter(|v| v.iter().all(|f| f.is_finite())) else {
            continue;
        };
        let cells: Vec<String> = p.iter().chain(&values).map(|v| format!("{v:.16e}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    Ok(out)
}
