use std::collections::HashMap;

use super::node::{Node, ScalarExpr};

/// Memoizing partial differentiation with respect to one coordinate.
///
/// Reusing one `Differentiator` across many expressions keeps the derivative
/// DAG shared wherever the inputs share nodes.
pub struct Differentiator {
    var: usize,
    memo: HashMap<*const Node, ScalarExpr>,
    // keeps memo keys alive
    pinned: Vec<ScalarExpr>,
}

impl Differentiator {
    pub fn new(var: usize) -> Self {
        Differentiator {
            var,
            memo: HashMap::new(),
            pinned: Vec::new(),
        }
    }

    pub fn var(&self) -> usize {
        self.var
    }

    pub fn diff(&mut self, e: &ScalarExpr) -> ScalarExpr {
        if let Some(d) = self.memo.get(&e.ptr()) {
            return d.clone();
        }
        let d = match e.node() {
            Node::Const(_) => ScalarExpr::zero(),
            Node::Var { index, .. } => {
                if *index == self.var {
                    ScalarExpr::one()
                } else {
                    ScalarExpr::zero()
                }
            }
            Node::Add(a, b) => self.diff(a).add(&self.diff(b)),
            Node::Sub(a, b) => self.diff(a).sub(&self.diff(b)),
            Node::Mul(a, b) => {
                let da = self.diff(a);
                let db = self.diff(b);
                da.mul(b).add(&a.mul(&db))
            }
            Node::Div(a, b) => {
                // (a/b)' = a'/b - a b'/b^2 = (a' - (a/b) b') / b
                let da = self.diff(a);
                let db = self.diff(b);
                if db.is_zero() {
                    da.div(b)
                } else {
                    da.sub(&e.mul(&db)).div(b)
                }
            }
            Node::Neg(a) => self.diff(a).neg(),
            Node::Powi(a, k) => {
                let da = self.diff(a);
                a.powi(k - 1).scale(*k as f64).mul(&da)
            }
            Node::Sqrt(a) => {
                let da = self.diff(a);
                da.div(&e.scale(2.0))
            }
            Node::Exp(a) => {
                let da = self.diff(a);
                e.mul(&da)
            }
            Node::Call(def, a) => {
                let da = self.diff(a);
                if da.is_zero() {
                    ScalarExpr::zero()
                } else {
                    ScalarExpr::call(&def.derivative(), a).mul(&da)
                }
            }
        };
        self.memo.insert(e.ptr(), d.clone());
        self.pinned.push(e.clone());
        d
    }
}

/// Exact partial derivative of `e` with respect to coordinate `var`.
pub fn differentiate(e: &ScalarExpr, var: usize) -> ScalarExpr {
    Differentiator::new(var).diff(e)
}

/// Replaces every coordinate `i` by `replacements[i]`.
pub fn substitute(e: &ScalarExpr, replacements: &[ScalarExpr]) -> ScalarExpr {
    let mut sub = Substitution {
        replacements,
        memo: HashMap::new(),
        pinned: Vec::new(),
    };
    sub.apply(e)
}

pub(crate) struct Substitution<'a> {
    pub replacements: &'a [ScalarExpr],
    pub memo: HashMap<*const Node, ScalarExpr>,
    pub pinned: Vec<ScalarExpr>,
}

impl Substitution<'_> {
    pub fn apply(&mut self, e: &ScalarExpr) -> ScalarExpr {
        if let Some(r) = self.memo.get(&e.ptr()) {
            return r.clone();
        }
        let r = match e.node() {
            Node::Const(_) => e.clone(),
            Node::Var { index, .. } => self
                .replacements
                .get(*index)
                .cloned()
                .unwrap_or_else(|| e.clone()),
            Node::Add(a, b) => self.apply(a).add(&self.apply(b)),
            Node::Sub(a, b) => self.apply(a).sub(&self.apply(b)),
            Node::Mul(a, b) => self.apply(a).mul(&self.apply(b)),
            Node::Div(a, b) => self.apply(a).div(&self.apply(b)),
            Node::Neg(a) => self.apply(a).neg(),
            Node::Powi(a, k) => self.apply(a).powi(*k),
            Node::Sqrt(a) => self.apply(a).sqrt(),
            Node::Exp(a) => self.apply(a).exp(),
            Node::Call(def, a) => ScalarExpr::call(def, &self.apply(a)),
        };
        self.memo.insert(e.ptr(), r.clone());
        self.pinned.push(e.clone());
        r
    }
}
