//! Declarative configuration blocks for the CLI: operators, bodies and
//! measure data files. Configs are JSON with unknown keys rejected, so a
//! typo fails loudly instead of silently taking a default.

use crate::measure::SphericalMeasure;
use crate::operators::{GaugeKind, Mat2, OperatorSpec, Vec2};
use crate::polytope::{build_polytope, ConvexPolytope};
use crate::{Error, Result};

use serde::Deserialize;
use std::path::Path;

/// Operator block, e.g. `{"n":2, "p":3.0, "kind":"ellipsoidal",
/// "W":[[1,0],[0,4]]}`. `n` defaults to 2 and `kind` to `"isotropic"`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct OperatorBlock {
    #[serde(default = "default_n")]
    n: usize,
    p: f64,
    #[serde(default = "default_kind")]
    kind: String,
    #[serde(rename = "W")]
    w: Option<[[f64; 2]; 2]>,
}

fn default_n() -> usize {
    2
}

fn default_kind() -> String {
    "isotropic".into()
}

pub fn parse_operator(text: &str) -> Result<OperatorSpec> {
    let block: OperatorBlock =
        serde_json::from_str(text).map_err(|e| Error::Config(format!("operator config: {e}")))?;
    if block.n != 2 {
        return Err(Error::Config("only n = 2 is supported".into()));
    }
    match block.kind.as_str() {
        "isotropic" => {
            if block.w.is_some() {
                return Err(Error::Config("isotropic operator takes no W".into()));
            }
            OperatorSpec::new(block.n, block.p, GaugeKind::Isotropic)
        }
        "ellipsoidal" => {
            let w = block
                .w
                .ok_or_else(|| Error::Config("ellipsoidal operator requires W".into()))?;
            let w = Mat2::new(w[0][0], w[0][1], w[1][0], w[1][1]);
            OperatorSpec::ellipsoidal(block.p, w)
        }
        other => Err(Error::Config(format!(
            "unknown operator kind {other:?} (expected \"isotropic\" or \"ellipsoidal\")"
        ))),
    }
}

/// Polytope block: `{"normals":[[1,0],...], "offsets":[...]}`. Normals
/// are normalised to unit length (offsets rescaled accordingly).
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BodyBlock {
    normals: Vec<[f64; 2]>,
    offsets: Vec<f64>,
}

pub fn parse_body(text: &str) -> Result<ConvexPolytope> {
    let block: BodyBlock =
        serde_json::from_str(text).map_err(|e| Error::Config(format!("body config: {e}")))?;
    if block.normals.len() != block.offsets.len() {
        return Err(Error::Config("normals and offsets differ in length".into()));
    }
    let mut normals = Vec::with_capacity(block.normals.len());
    let mut offsets = Vec::with_capacity(block.offsets.len());
    for (i, (n, &q)) in block.normals.iter().zip(&block.offsets).enumerate() {
        let v = Vec2::new(n[0], n[1]);
        let len = v.norm();
        if len < 1e-9 {
            return Err(Error::Config(format!("normal {i} is zero")));
        }
        normals.push(v / len);
        offsets.push(q / len);
    }
    build_polytope(&normals, &offsets)
}

/// Measure data file: one `ξ_x ξ_y c` row per direction, whitespace
/// separated; `#` starts a comment. Directions are normalised.
pub fn parse_data(text: &str) -> Result<SphericalMeasure> {
    let mut directions = Vec::new();
    let mut weights = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let cols: Vec<f64> = line
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| Error::Config(format!("data line {}: bad number {t:?}", lineno + 1)))
            })
            .collect::<Result<_>>()?;
        if cols.len() != 3 {
            return Err(Error::Config(format!(
                "data line {}: expected 3 columns, got {}",
                lineno + 1,
                cols.len()
            )));
        }
        let v = Vec2::new(cols[0], cols[1]);
        if v.norm() < 1e-9 {
            return Err(Error::Config(format!("data line {}: zero direction", lineno + 1)));
        }
        directions.push(v / v.norm());
        weights.push(cols[2]);
    }
    Ok(SphericalMeasure { directions, weights })
}

pub fn load_operator(path: &Path) -> Result<OperatorSpec> {
    parse_operator(&std::fs::read_to_string(path)?)
}

pub fn load_body(path: &Path) -> Result<ConvexPolytope> {
    parse_body(&std::fs::read_to_string(path)?)
}

pub fn load_data(path: &Path) -> Result<SphericalMeasure> {
    parse_data(&std::fs::read_to_string(path)?)
}
