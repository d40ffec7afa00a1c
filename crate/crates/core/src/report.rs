//! CSV and JSON artifacts.
//!
//! CSV files start with a `# config: {...}` comment line holding the run
//! configuration as one-line JSON, then a header row, then one row per
//! record. Reals are written with 17 significant digits (`{:.16e}`), which
//! round-trips every finite `f64`; non-finite values appear as `NaN`, `inf`
//! or `-inf`. JSON files hold a single object
//! `{"schema_version": 1, "config": ..., "result": ...}`; non-finite reals
//! become `null`.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::alpha::AlphaState;
use crate::beta::BetaState;
use crate::error::{FriaError, Result};
use crate::law::ComparisonRow;

pub const SCHEMA_VERSION: u32 = 1;

/// One CSV field.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Real(f64),
    Count(u64),
    Text(String),
    Flag(bool),
}

impl Cell {
    pub fn render(&self) -> String {
        match self {
            Cell::Real(v) => format_real(*v),
            Cell::Count(n) => n.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Flag(b) => b.to_string(),
        }
    }
}

/// `{:.16e}`: 17 significant digits.
pub fn format_real(v: f64) -> String {
    format!("{v:.16e}")
}

/// Records with a fixed column order.
pub trait Tabular {
    fn header() -> Vec<&'static str>;
    fn cells(&self) -> Vec<Cell>;
}

fn io_err(e: impl std::fmt::Display) -> FriaError {
    FriaError::io(e.to_string())
}

pub fn emit_csv<T: Tabular, C: Serialize>(rows: &[T], config: &C) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    let cfg = serde_json::to_string(config).map_err(io_err)?;
    writeln!(out, "# config: {cfg}").map_err(io_err)?;
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(T::header()).map_err(io_err)?;
        for row in rows {
            w.write_record(row.cells().iter().map(Cell::render)).map_err(io_err)?;
        }
        w.flush().map_err(io_err)?;
    }
    Ok(out)
}

#[derive(Serialize)]
struct Envelope<'a, C: Serialize, R: Serialize> {
    schema_version: u32,
    config: &'a C,
    result: &'a R,
}

pub fn emit_json<C: Serialize, R: Serialize>(config: &C, result: &R) -> Result<Vec<u8>> {
    let env = Envelope { schema_version: SCHEMA_VERSION, config, result };
    let mut out = serde_json::to_vec_pretty(&env).map_err(io_err)?;
    out.push(b'\n');
    Ok(out)
}

/// Writes to `path`, or to stdout when `path` is `None`.
pub fn write_artifact(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| FriaError::io(format!("{}: {e}", p.display()))),
        None => std::io::stdout().write_all(bytes).map_err(io_err),
    }
}

impl Tabular for ComparisonRow {
    fn header() -> Vec<&'static str> {
        vec![
            "x",
            "y",
            "u_bar",
            "v",
            "gamma",
            "psi",
            "d_exact",
            "ambiguous",
            "phi_v",
            "thm1_envelope",
            "thm2_pred",
            "prop1_pred",
            "prop1_envelope",
            "err_gauss",
            "rel_err_gauss",
            "err_corrected",
            "err_prop1",
            "normalized_err",
        ]
    }

    fn cells(&self) -> Vec<Cell> {
        use Cell::*;
        vec![
            Real(self.x),
            Real(self.y),
            Real(self.u_bar),
            Real(self.v),
            Real(self.gamma),
            Count(self.psi),
            Real(self.d_exact),
            Count(self.ambiguous),
            Real(self.phi_v),
            Real(self.thm1_envelope),
            Real(self.thm2_pred),
            Real(self.prop1_pred),
            Real(self.prop1_envelope),
            Real(self.err_gauss),
            Real(self.rel_err_gauss),
            Real(self.err_corrected),
            Real(self.err_prop1),
            Real(self.normalized_err),
        ]
    }
}

impl Tabular for AlphaState {
    fn header() -> Vec<&'static str> {
        vec![
            "x",
            "log_x",
            "y",
            "u",
            "u_bar",
            "pi_y",
            "alpha",
            "sigma1",
            "sigma2",
            "sigma3",
            "sigma4",
            "sigma2_tilde",
            "varrho",
            "log_zeta",
            "residual",
        ]
    }

    fn cells(&self) -> Vec<Cell> {
        use Cell::*;
        let mut c = vec![
            Real(self.x),
            Real(self.log_x),
            Real(self.y),
            Real(self.u),
            Real(self.u_bar),
            Count(self.pi_y as u64),
            Real(self.alpha),
        ];
        c.extend(self.sigma.iter().map(|&s| Real(s)));
        c.extend([Real(self.sigma2_tilde), Real(self.varrho), Real(self.log_zeta), Real(self.residual)]);
        c
    }
}

impl Tabular for BetaState {
    fn header() -> Vec<&'static str> {
        vec!["v", "gamma", "beta1", "beta2", "E", "R", "grad_norm", "d20", "d11", "d02", "newton_steps"]
    }

    fn cells(&self) -> Vec<Cell> {
        use Cell::*;
        let [a, b, c] = self.hess_entries;
        vec![
            Real(self.v),
            Real(self.gamma),
            Real(self.beta1),
            Real(self.beta2),
            Real(self.e),
            Real(self.r),
            Real(self.grad_norm),
            Real(a),
            Real(b),
            Real(c),
            Count(self.newton_steps as u64),
        ]
    }
}
