use std::collections::HashMap;
use std::sync::Arc;

use super::node::{Node, ScalarExpr};
use super::registry::FunctionDef;
use crate::error::{Error, Result};

#[derive(Clone)]
enum Op {
    Const(f64),
    Var(usize),
    Add(u32, u32),
    Sub(u32, u32),
    Mul(u32, u32),
    Div(u32, u32),
    Neg(u32),
    Powi(u32, i32),
    Sqrt(u32),
    Exp(u32),
    Call(Arc<FunctionDef>, u32),
}

/// A batch of expressions linearized into a single instruction list.
///
/// Shared nodes are evaluated once per call, which is what makes large
/// symbolic structures (conjugations, their derivatives) cheap to sample.
#[derive(Clone)]
pub struct Tape {
    ops: Vec<Op>,
    origin: Vec<ScalarExpr>,
    outputs: Vec<u32>,
    max_var: Option<usize>,
}

impl std::fmt::Debug for Tape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Tape({} ops, {} outputs)", self.ops.len(), self.outputs.len())
    }
}

impl Tape {
    pub fn compile<'a>(roots: impl IntoIterator<Item = &'a ScalarExpr>) -> Tape {
        let mut c = Compiler {
            index: HashMap::new(),
            ops: Vec::new(),
            origin: Vec::new(),
            max_var: None,
        };
        let outputs = roots.into_iter().map(|r| c.visit(r)).collect();
        Tape {
            ops: c.ops,
            origin: c.origin,
            outputs,
            max_var: c.max_var,
        }
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn output_count(&self) -> usize {
        self.outputs.len()
    }

    /// Evaluates all outputs at `coords`.
    pub fn eval(&self, coords: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.outputs.len()];
        self.eval_into(coords, &mut out)?;
        Ok(out)
    }

    pub fn eval_into(&self, coords: &[f64], out: &mut [f64]) -> Result<()> {
        if let Some(m) = self.max_var {
            if m >= coords.len() {
                return Err(Error::Dimension {
                    expected: m + 1,
                    found: coords.len(),
                });
            }
        }
        let mut v = vec![0.0f64; self.ops.len()];
        for (i, op) in self.ops.iter().enumerate() {
            let x = match op {
                Op::Const(c) => *c,
                Op::Var(k) => coords[*k],
                Op::Add(a, b) => v[*a as usize] + v[*b as usize],
                Op::Sub(a, b) => v[*a as usize] - v[*b as usize],
                Op::Mul(a, b) => v[*a as usize] * v[*b as usize],
                Op::Div(a, b) => {
                    let d = v[*b as usize];
                    if d == 0.0 {
                        return Err(self.domain(i, "division by zero"));
                    }
                    v[*a as usize] / d
                }
                Op::Neg(a) => -v[*a as usize],
                Op::Powi(a, k) => {
                    let base = v[*a as usize];
                    if *k < 0 && base == 0.0 {
                        return Err(self.domain(i, "negative power of zero"));
                    }
                    base.powi(*k)
                }
                Op::Sqrt(a) => {
                    let s = v[*a as usize];
                    if s < 0.0 {
                        return Err(self.domain(i, "square root of a negative number"));
                    }
                    s.sqrt()
                }
                Op::Exp(a) => v[*a as usize].exp(),
                Op::Call(def, a) => def.eval(v[*a as usize]),
            };
            if !x.is_finite() {
                return Err(self.domain(i, "non-finite value"));
            }
            v[i] = x;
        }
        for (o, &idx) in out.iter_mut().zip(&self.outputs) {
            *o = v[idx as usize];
        }
        Ok(())
    }

    fn domain(&self, op: usize, message: &str) -> Error {
        Error::Domain {
            node: describe(&self.origin[op]),
            message: message.to_string(),
        }
    }
}

/// Printable form of a node, abbreviated when the expanded tree is large.
pub fn describe(e: &ScalarExpr) -> String {
    if e.tree_size() <= 200 {
        e.to_string()
    } else {
        format!("<subexpression of {} shared nodes>", e.node_count())
    }
}

struct Compiler {
    index: HashMap<*const Node, u32>,
    ops: Vec<Op>,
    origin: Vec<ScalarExpr>,
    max_var: Option<usize>,
}

impl Compiler {
    fn visit(&mut self, e: &ScalarExpr) -> u32 {
        if let Some(&i) = self.index.get(&e.ptr()) {
            return i;
        }
        let op = match e.node() {
            Node::Const(c) => Op::Const(*c),
            Node::Var { index, .. } => {
                self.max_var = Some(self.max_var.map_or(*index, |m| m.max(*index)));
                Op::Var(*index)
            }
            Node::Add(a, b) => Op::Add(self.visit(a), self.visit(b)),
            Node::Sub(a, b) => Op::Sub(self.visit(a), self.visit(b)),
            Node::Mul(a, b) => Op::Mul(self.visit(a), self.visit(b)),
            Node::Div(a, b) => Op::Div(self.visit(a), self.visit(b)),
            Node::Neg(a) => Op::Neg(self.visit(a)),
            Node::Powi(a, k) => Op::Powi(self.visit(a), *k),
            Node::Sqrt(a) => Op::Sqrt(self.visit(a)),
            Node::Exp(a) => Op::Exp(self.visit(a)),
            Node::Call(def, a) => Op::Call(def.clone(), self.visit(a)),
        };
        let i = self.ops.len() as u32;
        self.ops.push(op);
        self.origin.push(e.clone());
        self.index.insert(e.ptr(), i);
        i
    }
}

/// Evaluates one expression at a coordinate vector.
pub fn evaluate_at(e: &ScalarExpr, coords: &[f64]) -> Result<f64> {
    Ok(Tape::compile([e]).eval(coords)?[0])
}
