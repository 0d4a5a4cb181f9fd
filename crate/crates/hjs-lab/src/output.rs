//! CSV and JSON artifacts. Numbers are written as `{:.16e}` (17 significant
//! digits), missing values as empty cells, lines end in `\n`.

use std::fs;
use std::path::{Path, PathBuf};

use hjs::MomentSet;
use serde::Serialize;

use crate::LabError;

pub const SERIES_HEADER: &str = "t,mean_q,mean_p,var_q,var_p_op,var_p_hj,amp_grad,uncertainty_product,norm,\
oracle_mean_q,oracle_mean_p,oracle_var_q,oracle_var_p_op,oracle_var_p_hj,oracle_amp_grad";

pub const FIELDS_HEADER: &str = "q,R,S,re_psi,im_psi,born_density";

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn cell(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// One sample of `series.csv`. Moments are absent for complex kappa, oracle
/// columns where no closed form exists.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesRow {
    pub t: f64,
    pub moments: Option<MomentSet>,
    pub norm: f64,
    pub oracle: Option<MomentSet>,
}

impl SeriesRow {
    fn render(&self) -> String {
        let m = self.moments.as_ref();
        let o = self.oracle.as_ref();
        [
            Some(self.t),
            m.map(|m| m.mean_q),
            m.map(|m| m.mean_p),
            m.map(|m| m.var_q),
            m.map(|m| m.var_p_op),
            m.map(|m| m.var_p_hj),
            m.map(|m| m.amp_grad),
            m.map(|m| m.uncertainty_product),
            Some(self.norm),
            o.map(|o| o.mean_q),
            o.map(|o| o.mean_p),
            o.map(|o| o.var_q),
            o.map(|o| o.var_p_op),
            o.map(|o| o.var_p_hj),
            o.map(|o| o.amp_grad),
        ]
        .into_iter()
        .map(cell)
        .collect::<Vec<_>>()
        .join(",")
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<(), LabError> {
    fs::write(path, text).map_err(|source| LabError::Io { path: path.to_path_buf(), source })
}

pub fn write_table(path: &Path, header: &str, rows: impl IntoIterator<Item = String>) -> Result<(), LabError> {
    let mut text = String::from(header);
    text.push('\n');
    for row in rows {
        text.push_str(&row);
        text.push('\n');
    }
    write_text(path, &text)
}

pub fn write_series(dir: &Path, rows: &[SeriesRow]) -> Result<(), LabError> {
    write_table(&dir.join("series.csv"), SERIES_HEADER, rows.iter().map(SeriesRow::render))
}

/// `fields_<t>.csv`, with `t` to six decimals.
pub fn fields_path(dir: &Path, t: f64) -> PathBuf {
    dir.join(format!("fields_{t:.6}.csv"))
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<(), LabError> {
    let mut text = serde_json::to_string_pretty(value).expect("report values serialize");
    text.push('\n');
    write_text(path, &text)
}
