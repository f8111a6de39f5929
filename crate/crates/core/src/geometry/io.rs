use std::path::Path;

use serde::{Deserialize, Serialize};

use super::chart::Chart;
use super::field::EndomorphismField;
use super::structure::PqStructure;
use crate::error::{Error, Result};
use crate::expr::{parse_expr, FunctionRegistry, ScalarExpr};

/// Printed expressions larger than this are refused.
const MAX_PRINTED_NODES: u64 = 1 << 20;

/// On-disk form of a structure: each `J` is an `n×n` array of expression
/// strings, row `a`, column `b` holding `J^a_b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructureFile {
    pub dim: usize,
    pub coords: Vec<String>,
    #[serde(rename = "J1")]
    pub j1: Vec<Vec<String>>,
    #[serde(rename = "J2")]
    pub j2: Vec<Vec<String>>,
    #[serde(rename = "J3")]
    pub j3: Vec<Vec<String>>,
}

fn print(e: &ScalarExpr) -> Result<String> {
    if e.tree_size() > MAX_PRINTED_NODES {
        return Err(Error::Invalid(format!(
            "expression with {} shared nodes is too large to print",
            e.node_count()
        )));
    }
    Ok(e.to_string())
}

impl StructureFile {
    pub fn from_structure(h: &PqStructure) -> Result<Self> {
        let n = h.dim();
        let rows = |j: &EndomorphismField| -> Result<Vec<Vec<String>>> {
            (0..n)
                .map(|a| (0..n).map(|b| print(j.entry(a, b))).collect())
                .collect()
        };
        Ok(StructureFile {
            dim: n,
            coords: h.chart().coords().iter().map(|c| c.to_string()).collect(),
            j1: rows(h.j(0))?,
            j2: rows(h.j(1))?,
            j3: rows(h.j(2))?,
        })
    }

    pub fn to_structure(&self, registry: &FunctionRegistry) -> Result<PqStructure> {
        if self.coords.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                found: self.coords.len(),
            });
        }
        let chart = Chart::new(&format!("R{}", self.dim), &self.coords)?;
        let n = self.dim;
        let field = |rows: &[Vec<String>]| -> Result<EndomorphismField> {
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                return Err(Error::Invalid(format!("matrix must be {n}x{n}")));
            }
            let entries = rows
                .iter()
                .flatten()
                .map(|s| parse_expr(s, &self.coords, registry))
                .collect::<Result<Vec<_>>>()?;
            EndomorphismField::from_entries(n, entries)
        };
        PqStructure::new(chart, field(&self.j1)?, field(&self.j2)?, field(&self.j3)?)
    }
}

pub fn load_structure(path: &Path, registry: &FunctionRegistry) -> Result<PqStructure> {
    let text = std::fs::read_to_string(path)?;
    let file: StructureFile = serde_json::from_str(&text)?;
    file.to_structure(registry)
}

pub fn save_structure(h: &PqStructure, path: &Path) -> Result<()> {
    let file = StructureFile::from_structure(h)?;
    std::fs::write(path, serde_json::to_string_pretty(&file)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{flat_model, propo_structure};

    #[test]
    fn round_trip_propo() {
        let reg = FunctionRegistry::with_defaults();
        let h = propo_structure(2, reg.get("h_id").unwrap()).unwrap();
        let file = StructureFile::from_structure(&h).unwrap();
        let json = serde_json::to_string(&file).unwrap();
        let back: StructureFile = serde_json::from_str(&json).unwrap();
        let h2 = back.to_structure(&reg).unwrap();
        let q = [0.3, 1.2, -0.7, 0.9, 1.1, 0.8, 1.4, -0.6];
        for i in 0..3 {
            let a = h.j(i).eval(&q).unwrap();
            let b = h2.j(i).eval(&q).unwrap();
            assert!((a - b).amax() < 1e-15);
        }
    }

    #[test]
    fn rejects_bad_shape() {
        let mut file = StructureFile::from_structure(&flat_model(2).unwrap()).unwrap();
        file.j2.pop();
        assert!(file.to_structure(&FunctionRegistry::with_defaults()).is_err());
    }
}
