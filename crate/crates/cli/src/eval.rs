//! File-based evaluation of V_S and Λ_S. Inputs are JSON: the quartile set
//! is an array of {"space": [k,n], "freq": [k,n]} objects and functions use
//! the step-function cell schema. Malformed files are reported with their
//! line and column.

use std::fs;
use std::path::Path;

use serde::Serialize;

use quartile_core::dyadic::StepFunction;
use quartile_core::model::{apply, trilinear};
use quartile_core::plane::Quartile;
use quartile_core::scalar::ExactScalar;

#[derive(Debug)]
pub struct EvalError(pub String);

impl std::fmt::Display for EvalError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

fn load<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T, EvalError> {
    let text = fs::read_to_string(path)
        .map_err(|e| EvalError(format!("cannot read {what} file {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| {
        EvalError(format!(
            "malformed {what} file {} at line {}, column {}: {e}",
            path.display(),
            e.line(),
            e.column()
        ))
    })
}

#[derive(Serialize)]
struct TrilinearOut {
    trilinear: [String; 4],
}

fn scalar_strings(v: &ExactScalar) -> [String; 4] {
    [
        v.rational_part().numer().to_string(),
        v.rational_part().denom().to_string(),
        v.sqrt2_part().numer().to_string(),
        v.sqrt2_part().denom().to_string(),
    ]
}

/// Runs the evaluation and returns the serialized output document.
pub fn run_eval(
    set_path: &Path,
    f1_path: &Path,
    f2_path: &Path,
    f3_path: Option<&Path>,
) -> Result<String, EvalError> {
    let set: Vec<Quartile> = load(set_path, "quartile set")?;
    let f1: StepFunction = load(f1_path, "f1")?;
    let f2: StepFunction = load(f2_path, "f2")?;
    let out = match f3_path {
        Some(p) => {
            let f3: StepFunction = load(p, "f3")?;
            let v = trilinear(set.iter(), &f1, &f2, &f3);
            serde_json::to_string_pretty(&TrilinearOut { trilinear: scalar_strings(&v) })
        }
        None => {
            let v = apply(set.iter(), &f1, &f2);
            serde_json::to_string_pretty(&v)
        }
    };
    let mut s = out.expect("output serialization cannot fail");
    s.push('\n');
    Ok(s)
}
