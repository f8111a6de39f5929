use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{ChartId, Point, ScalarExpr};

/// A coordinate chart of dimension `n = 4m`, `m >= 2`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chart {
    id: ChartId,
    coords: Vec<Arc<str>>,
}

impl Chart {
    pub fn new<S: AsRef<str>>(id: &str, coords: &[S]) -> Result<Chart> {
        let n = coords.len();
        if n % 4 != 0 || n < 8 {
            return Err(Error::InvalidChart(format!(
                "dimension must be a multiple of 4 and at least 8, got {n}"
            )));
        }
        let coords: Vec<Arc<str>> = coords.iter().map(|c| Arc::from(c.as_ref())).collect();
        for (i, c) in coords.iter().enumerate() {
            let valid = c.chars().next().is_some_and(|ch| ch.is_ascii_alphabetic() || ch == '_')
                && c.chars().all(|ch| ch.is_ascii_alphanumeric() || ch == '_');
            if !valid || matches!(&**c, "sqrt" | "exp") {
                return Err(Error::InvalidChart(format!("bad coordinate name `{c}`")));
            }
            if coords[..i].contains(c) {
                return Err(Error::InvalidChart(format!("duplicate coordinate `{c}`")));
            }
        }
        Ok(Chart {
            id: ChartId::new(id),
            coords,
        })
    }

    /// Chart on R^{4m} with coordinates x1..x{2m}, y1..y{2m}.
    pub fn standard(m: usize) -> Result<Chart> {
        let names: Vec<String> = (1..=2 * m)
            .map(|i| format!("x{i}"))
            .chain((1..=2 * m).map(|i| format!("y{i}")))
            .collect();
        Chart::new(&format!("R{}", 4 * m), &names)
    }

    pub fn id(&self) -> &ChartId {
        &self.id
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn m(&self) -> usize {
        self.coords.len() / 4
    }

    pub fn coords(&self) -> &[Arc<str>] {
        &self.coords
    }

    pub fn var(&self, k: usize) -> ScalarExpr {
        ScalarExpr::var(k, self.coords[k].clone())
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.coords.iter().position(|c| &**c == name)
    }

    pub fn point(&self, coords: Vec<f64>) -> Result<Point> {
        if coords.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                found: coords.len(),
            });
        }
        Ok(Point::new(self.id.clone(), coords))
    }

    /// Checks that `p` belongs to this chart.
    pub fn check(&self, p: &Point) -> Result<()> {
        if p.chart != self.id {
            return Err(Error::ChartMismatch {
                expected: self.id.as_str().to_string(),
                found: p.chart.as_str().to_string(),
            });
        }
        if p.dim() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                found: p.dim(),
            });
        }
        Ok(())
    }
}
