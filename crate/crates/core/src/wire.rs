//! JSON wire format.
//!
//! Complex scalars are `[re, im]`; a bare number is accepted on input as a
//! real value. Matrices are row-major nested arrays of complex scalars and
//! their size is implied by the shape.
//!
//! Input documents take one of three forms:
//!
//! ```json
//! {"D1": [[...]], "F": [[...]], "D2": [[...]]}
//! {"catalog": "squeeze_1d", "params": {"z1": 0.3, "z2": 0.4}}
//! {"T11": [[...]], "T12": [[...]], "T21": [[...]], "T22": [[...]]}
//! ```
//!
//! The last form feeds a transfer matrix straight into the residual checks.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde_json::{json, Map, Value};

use crate::catalog;
use crate::matrix::ComplexMatrix;
use crate::reorder::{Factorization, QuadraticGenerator, TransferMatrix};

/// Input-format problem, always naming the offending field.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("field '{field}': {message}")]
pub struct WireError {
    pub field: String,
    pub message: String,
}

impl WireError {
    fn new(field: &str, message: impl Into<String>) -> Self {
        Self {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

pub fn complex_to_json(z: Complex64) -> Value {
    json!([z.re, z.im])
}

pub fn matrix_to_json(m: &ComplexMatrix) -> Value {
    Value::Array(
        (0..m.rows())
            .map(|i| Value::Array(m.row(i).iter().map(|&z| complex_to_json(z)).collect()))
            .collect(),
    )
}

pub fn complex_from_json(v: &Value, field: &str) -> Result<Complex64, WireError> {
    match v {
        Value::Number(n) => n
            .as_f64()
            .map(|re| Complex64::new(re, 0.0))
            .ok_or_else(|| WireError::new(field, "number out of range")),
        Value::Array(pair) if pair.len() == 2 => match (pair[0].as_f64(), pair[1].as_f64()) {
            (Some(re), Some(im)) => Ok(Complex64::new(re, im)),
            _ => Err(WireError::new(field, "complex entries must be numbers")),
        },
        _ => Err(WireError::new(field, "expected a number or a [re, im] pair")),
    }
}

pub fn matrix_from_json(v: &Value, field: &str) -> Result<ComplexMatrix, WireError> {
    let rows = v
        .as_array()
        .ok_or_else(|| WireError::new(field, "expected an array of rows"))?;
    if rows.is_empty() {
        return Err(WireError::new(field, "matrix has no rows"));
    }
    let mut parsed = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let entries = row
            .as_array()
            .ok_or_else(|| WireError::new(field, format!("row {i} is not an array")))?;
        let row: Vec<Complex64> = entries
            .iter()
            .enumerate()
            .map(|(j, e)| complex_from_json(e, &format!("{field}[{i}][{j}]")))
            .collect::<Result<_, _>>()?;
        parsed.push(row);
    }
    let width = parsed[0].len();
    if let Some(i) = parsed.iter().position(|r| r.len() != width) {
        return Err(WireError::new(
            field,
            format!("row {i} has {} entries, expected {width}", parsed[i].len()),
        ));
    }
    ComplexMatrix::from_rows(&parsed).map_err(|e| WireError::new(field, e.to_string()))
}

fn required<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a Value, WireError> {
    obj.get(key).ok_or_else(|| WireError::new(key, "missing"))
}

/// Where a job's operator comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Catalog {
        name: String,
        params: BTreeMap<String, f64>,
    },
    Raw {
        d1: ComplexMatrix,
        f: ComplexMatrix,
        d2: ComplexMatrix,
    },
    Transfer(TransferMatrix),
}

impl Source {
    pub fn label(&self) -> String {
        match self {
            Source::Catalog { name, .. } => name.clone(),
            Source::Raw { .. } => "raw".into(),
            Source::Transfer(_) => "transfer".into(),
        }
    }

    /// Builds the generator; `None` for a bare transfer matrix.
    pub fn generator(&self) -> crate::Result<Option<QuadraticGenerator>> {
        match self {
            Source::Catalog { name, params } => Ok(Some(catalog::by_name(name, params)?.generator)),
            Source::Raw { d1, f, d2 } => Ok(Some(QuadraticGenerator::new(d1.clone(), f.clone(), d2.clone())?)),
            Source::Transfer(_) => Ok(None),
        }
    }
}

/// Parses one of the three input document forms.
pub fn source_from_json(doc: &Value) -> Result<Source, WireError> {
    let obj = doc
        .as_object()
        .ok_or_else(|| WireError::new("<root>", "expected a JSON object"))?;
    let has = |k: &str| obj.contains_key(k);
    let forms = [has("catalog"), has("D1") || has("F") || has("D2"), has("T11")];
    if forms.iter().filter(|&&f| f).count() != 1 {
        return Err(WireError::new(
            "<root>",
            "expected exactly one of {catalog, params}, {D1, F, D2} or {T11, T12, T21, T22}",
        ));
    }
    if has("catalog") {
        let name = required(obj, "catalog")?
            .as_str()
            .ok_or_else(|| WireError::new("catalog", "expected a string"))?
            .to_string();
        let mut params = BTreeMap::new();
        if let Some(p) = obj.get("params") {
            let p = p
                .as_object()
                .ok_or_else(|| WireError::new("params", "expected an object"))?;
            for (k, v) in p {
                let x = v
                    .as_f64()
                    .ok_or_else(|| WireError::new(&format!("params.{k}"), "expected a number"))?;
                params.insert(k.clone(), x);
            }
        }
        return Ok(Source::Catalog { name, params });
    }
    if has("T11") {
        let block = |k: &str| matrix_from_json(required(obj, k)?, k);
        let t = TransferMatrix::from_blocks(block("T11")?, block("T12")?, block("T21")?, block("T22")?)
            .map_err(|e| WireError::new("T", e.to_string()))?;
        return Ok(Source::Transfer(t));
    }
    let d1 = matrix_from_json(required(obj, "D1")?, "D1")?;
    let f = matrix_from_json(required(obj, "F")?, "F")?;
    let d2 = matrix_from_json(required(obj, "D2")?, "D2")?;
    let n = d1.rows();
    for (name, m) in [("D1", &d1), ("F", &f), ("D2", &d2)] {
        if m.shape() != (n, n) {
            return Err(WireError::new(
                name,
                format!("is {}x{}, expected {n}x{n}", m.rows(), m.cols()),
            ));
        }
    }
    // Symmetry is checked by the generator constructor.
    QuadraticGenerator::new(d1.clone(), f.clone(), d2.clone()).map_err(|e| {
        let field = match &e {
            crate::EqoError::Asymmetry { name, .. } => *name,
            _ => "D1/F/D2",
        };
        WireError::new(field, e.to_string())
    })?;
    Ok(Source::Raw { d1, f, d2 })
}

pub fn transfer_to_json(t: &TransferMatrix) -> Value {
    json!({
        "T11": matrix_to_json(&t.t11),
        "T12": matrix_to_json(&t.t12),
        "T21": matrix_to_json(&t.t21),
        "T22": matrix_to_json(&t.t22),
    })
}

pub fn transfer_from_json(v: &Value) -> Result<TransferMatrix, WireError> {
    match source_from_json(v)? {
        Source::Transfer(t) => Ok(t),
        _ => Err(WireError::new("T", "expected T11, T12, T21, T22 blocks")),
    }
}

pub fn factorization_to_json(f: &Factorization) -> Value {
    json!({
        "n": f.modes(),
        "W": matrix_to_json(&f.w),
        "Y": matrix_to_json(&f.y),
        "Z": matrix_to_json(&f.z),
        "prefactor": complex_to_json(f.prefactor),
    })
}

/// Reads `W`, `Y`, `Z`; the prefactor is rederived from `Y`. A supplied
/// `prefactor` is accepted only if it agrees with `exp(tr Y / 2)` to 1e-12
/// relative.
pub fn factorization_from_json(v: &Value) -> Result<Factorization, WireError> {
    let obj = v
        .as_object()
        .ok_or_else(|| WireError::new("<root>", "expected a JSON object"))?;
    let w = matrix_from_json(required(obj, "W")?, "W")?;
    let y = matrix_from_json(required(obj, "Y")?, "Y")?;
    let z = matrix_from_json(required(obj, "Z")?, "Z")?;
    let f = Factorization::from_parts(w, y, z).map_err(|e| WireError::new("W/Y/Z", e.to_string()))?;
    if let Some(p) = obj.get("prefactor") {
        let p = complex_from_json(p, "prefactor")?;
        if (p - f.prefactor).norm() > 1e-12 * f.prefactor.norm().max(1.0) {
            return Err(WireError::new(
                "prefactor",
                format!("{p} disagrees with exp(tr Y / 2) = {}", f.prefactor),
            ));
        }
    }
    Ok(f)
}
