//! CSV tables and TOML reports. Numbers are written with 17 significant
//! digits so identical runs produce identical bytes.

use hilfer_core::GridFunction;
use serde::Serialize;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::CliError;

pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Columns t, Psi_t, x_weighted, x_raw. `x_raw` is ±inf at t = a when the
/// weighted representation is singular there.
pub fn solution_csv(x: &GridFunction) -> String {
    let g = x.grid();
    let mut s = String::from("t,Psi_t,x_weighted,x_raw\n");
    for i in 0..x.len() {
        let t = g.t(i);
        let _ = writeln!(
            s,
            "{},{},{},{}",
            num(t),
            num(g.psi().eval(t)),
            num(x.values()[i]),
            num(x.raw(i))
        );
    }
    s
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub target: String,
    pub n: usize,
    pub error: f64,
    /// log2 of the error ratio to the previous row; absent on the first row
    pub observed_order: Option<f64>,
}

pub fn convergence_csv(rows: &[ConvergenceRow]) -> String {
    let mut s = String::from("target,n,error,observed_order\n");
    for r in rows {
        let order = r.observed_order.map(num).unwrap_or_default();
        let _ = writeln!(s, "{},{},{},{}", r.target, r.n, num(r.error), order);
    }
    s
}

pub fn to_toml<T: Serialize>(value: &T) -> Result<String, CliError> {
    toml::to_string(value).map_err(|e| CliError::Io(format!("cannot serialize report: {e}")))
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}
