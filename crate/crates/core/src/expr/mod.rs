//! Scalar expressions over chart coordinates: parsing, exact partial
//! derivatives and pointwise evaluation.

mod diff;
mod node;
mod parse;
mod registry;
mod tape;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use diff::{differentiate, substitute, Differentiator};
pub use node::{ExprView, ScalarExpr};
pub use parse::parse_expr;
pub use registry::{h_id, h_one, FunctionDef, FunctionRegistry, BUILTINS};
pub use tape::{describe, evaluate_at, Tape};

use crate::error::{Error, Result};

/// Identifies the chart a point lives in.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChartId(pub Arc<str>);

impl ChartId {
    pub fn new(name: &str) -> Self {
        ChartId(Arc::from(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

/// A point of a chart, given by its coordinate values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub chart: ChartId,
    pub coords: Vec<f64>,
}

impl Point {
    pub fn new(chart: ChartId, coords: Vec<f64>) -> Self {
        Point { chart, coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Copy of the point moved by `step` along coordinate `k`.
    pub fn shifted(&self, k: usize, step: f64) -> Point {
        let mut coords = self.coords.clone();
        coords[k] += step;
        Point::new(self.chart.clone(), coords)
    }
}

/// Evaluates `e` at `p`; domain errors carry the point.
pub fn evaluate(e: &ScalarExpr, p: &Point) -> Result<f64> {
    evaluate_at(e, &p.coords).map_err(|err| err.at_point(&p.coords))
}

/// Central difference of `e` along coordinate `var` with step `h`.
pub fn central_difference(e: &ScalarExpr, var: usize, coords: &[f64], h: f64) -> Result<f64> {
    let tape = Tape::compile([e]);
    let mut plus = coords.to_vec();
    let mut minus = coords.to_vec();
    plus[var] += h;
    minus[var] -= h;
    Ok((tape.eval(&plus)?[0] - tape.eval(&minus)?[0]) / (2.0 * h))
}

#[allow(dead_code)]
fn _assert_send_sync() {
    fn check<T: Send + Sync>() {}
    check::<ScalarExpr>();
    check::<Tape>();
    let _ = Error::Invalid(String::new());
}
