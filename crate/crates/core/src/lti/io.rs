use std::path::Path;

use nalgebra::DMatrix;
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use super::{LtiError, StateSpaceModel};
use crate::scalar::Real;

/// On-disk layout: row-major nested arrays plus channel-name lists.
#[derive(Serialize, Deserialize)]
struct ModelFile<T> {
    inputs: Vec<String>,
    outputs: Vec<String>,
    a: Vec<Vec<T>>,
    b: Vec<Vec<T>>,
    c: Vec<Vec<T>>,
    d: Vec<Vec<T>>,
}

fn rows<T: Real>(m: &DMatrix<T>) -> Vec<Vec<T>> {
    (0..m.nrows()).map(|r| m.row(r).iter().copied().collect()).collect()
}

fn matrix<T: Real>(rows: &[Vec<T>], nrows: usize, ncols: usize, name: &str) -> Result<DMatrix<T>, LtiError> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return Err(LtiError::Dimension(format!("matrix {name} must be {nrows}x{ncols}")));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |r, c| rows[r][c]))
}

impl<T: Real + Serialize + DeserializeOwned> StateSpaceModel<T> {
    pub fn to_json(&self) -> String {
        let file = ModelFile {
            inputs: self.inputs.clone(),
            outputs: self.outputs.clone(),
            a: rows(&self.a),
            b: rows(&self.b),
            c: rows(&self.c),
            d: rows(&self.d),
        };
        serde_json::to_string_pretty(&file).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, LtiError> {
        let f: ModelFile<T> =
            serde_json::from_str(text).map_err(|e| LtiError::Parse { line: e.line(), msg: e.to_string() })?;
        let n = f.a.len();
        let (m, p) = (f.inputs.len(), f.outputs.len());
        Self::new(
            matrix(&f.a, n, n, "a")?,
            matrix(&f.b, n, m, "b")?,
            matrix(&f.c, p, n, "c")?,
            matrix(&f.d, p, m, "d")?,
            f.inputs,
            f.outputs,
        )
    }
}

pub fn write_model(path: &Path, model: &StateSpaceModel<f64>) -> Result<(), LtiError> {
    std::fs::write(path, model.to_json())?;
    Ok(())
}

pub fn read_model(path: &Path) -> Result<StateSpaceModel<f64>, LtiError> {
    StateSpaceModel::from_json(&std::fs::read_to_string(path)?)
}
