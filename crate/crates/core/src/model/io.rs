//! Problem file format.
//!
//! A model file is a single JSON object:
//!
//! ```json
//! {
//!   "format": "qbenders-milp",
//!   "version": 1,
//!   "model": {
//!     "name": "example",
//!     "metadata": { "source": "hand-written" },
//!     "variables": [
//!       { "name": "x", "kind": "continuous", "lower": 0.0, "upper": null, "cost": 1.0 },
//!       { "name": "y", "kind": "integer", "lower": 0.0, "upper": 1.0, "cost": 4.0 }
//!     ],
//!     "constraints": [
//!       { "name": "c0", "sense": ">=", "rhs": 2.0, "coeffs": [[0, 1.0], [1, 2.0]] }
//!     ]
//!   }
//! }
//! ```
//!
//! `upper: null` is +infinity. Floats are written in shortest round-trip
//! form, so `parse_model(&write_model(m)) == m` holds bit for bit.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::MilpModel;

pub const MODEL_FORMAT: &str = "qbenders-milp";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelFileError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed model file at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("field '{field}': {message}")]
    Invalid { field: String, message: String },
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    model: MilpModel,
}

pub fn write_model(model: &MilpModel) -> String {
    let file = ModelFile {
        format: MODEL_FORMAT.into(),
        version: MODEL_VERSION,
        model: model.clone(),
    };
    let mut s = serde_json::to_string_pretty(&file).expect("model serialization cannot fail");
    s.push('\n');
    s
}

pub fn parse_model(text: &str) -> Result<MilpModel, ModelFileError> {
    let file: ModelFile = serde_json::from_str(text).map_err(|e| ModelFileError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if file.format != MODEL_FORMAT {
        return Err(ModelFileError::Invalid {
            field: "format".into(),
            message: format!("expected '{MODEL_FORMAT}', found '{}'", file.format),
        });
    }
    if file.version != MODEL_VERSION {
        return Err(ModelFileError::Invalid {
            field: "version".into(),
            message: format!("unsupported version {}", file.version),
        });
    }
    let model = file.model;
    let n = model.variables.len();
    for (i, c) in model.constraints.iter().enumerate() {
        for (k, &(j, _)) in c.coeffs.iter().enumerate() {
            if j >= n {
                return Err(ModelFileError::Invalid {
                    field: format!("model.constraints[{i}].coeffs[{k}]"),
                    message: format!("variable index {j} out of range (model has {n} variables)"),
                });
            }
        }
    }
    Ok(model)
}

pub fn save_model(model: &MilpModel, path: &Path) -> Result<(), ModelFileError> {
    fs::write(path, write_model(model)).map_err(|source| ModelFileError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_model(path: &Path) -> Result<MilpModel, ModelFileError> {
    let text = fs::read_to_string(path).map_err(|source| ModelFileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_model(&text)
}
