use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use super::registry::FunctionDef;

/// Scalar function of chart coordinates.
///
/// Nodes are reference counted and may be shared, so an expression is a DAG
/// rather than a tree. All constructors fold constants and apply the 0/1
/// identities; nothing beyond that is simplified.
#[derive(Clone)]
pub struct ScalarExpr(pub(crate) Arc<Node>);

pub(crate) enum Node {
    Const(f64),
    Var { index: usize, name: Arc<str> },
    Add(ScalarExpr, ScalarExpr),
    Sub(ScalarExpr, ScalarExpr),
    Mul(ScalarExpr, ScalarExpr),
    Div(ScalarExpr, ScalarExpr),
    Neg(ScalarExpr),
    Powi(ScalarExpr, i32),
    Sqrt(ScalarExpr),
    Exp(ScalarExpr),
    Call(Arc<FunctionDef>, ScalarExpr),
}

/// Borrowed view of one node of a [`ScalarExpr`].
#[derive(Clone, Copy, Debug)]
pub enum ExprView<'a> {
    Const(f64),
    Var(usize, &'a str),
    Add(&'a ScalarExpr, &'a ScalarExpr),
    Sub(&'a ScalarExpr, &'a ScalarExpr),
    Mul(&'a ScalarExpr, &'a ScalarExpr),
    Div(&'a ScalarExpr, &'a ScalarExpr),
    Neg(&'a ScalarExpr),
    Powi(&'a ScalarExpr, i32),
    Sqrt(&'a ScalarExpr),
    Exp(&'a ScalarExpr),
    Call(&'a Arc<FunctionDef>, &'a ScalarExpr),
}

impl ScalarExpr {
    fn wrap(node: Node) -> Self {
        ScalarExpr(Arc::new(node))
    }

    pub fn constant(value: f64) -> Self {
        Self::wrap(Node::Const(value))
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn one() -> Self {
        Self::constant(1.0)
    }

    /// Coordinate symbol with position `index` in its chart.
    pub fn var(index: usize, name: impl Into<Arc<str>>) -> Self {
        Self::wrap(Node::Var {
            index,
            name: name.into(),
        })
    }

    pub fn as_const(&self) -> Option<f64> {
        match &*self.0 {
            Node::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    pub fn is_one(&self) -> bool {
        self.as_const() == Some(1.0)
    }

    pub(crate) fn node(&self) -> &Node {
        &self.0
    }

    pub(crate) fn ptr(&self) -> *const Node {
        Arc::as_ptr(&self.0)
    }

    pub fn add(&self, rhs: &ScalarExpr) -> ScalarExpr {
        match (self.as_const(), rhs.as_const()) {
            (Some(a), Some(b)) => Self::constant(a + b),
            (Some(a), _) if a == 0.0 => rhs.clone(),
            (_, Some(b)) if b == 0.0 => self.clone(),
            _ => Self::wrap(Node::Add(self.clone(), rhs.clone())),
        }
    }

    pub fn sub(&self, rhs: &ScalarExpr) -> ScalarExpr {
        match (self.as_const(), rhs.as_const()) {
            (Some(a), Some(b)) => Self::constant(a - b),
            (Some(a), _) if a == 0.0 => rhs.neg(),
            (_, Some(b)) if b == 0.0 => self.clone(),
            _ => Self::wrap(Node::Sub(self.clone(), rhs.clone())),
        }
    }

    pub fn mul(&self, rhs: &ScalarExpr) -> ScalarExpr {
        match (self.as_const(), rhs.as_const()) {
            (Some(a), Some(b)) => Self::constant(a * b),
            (Some(a), _) if a == 0.0 => Self::zero(),
            (_, Some(b)) if b == 0.0 => Self::zero(),
            (Some(a), _) if a == 1.0 => rhs.clone(),
            (_, Some(b)) if b == 1.0 => self.clone(),
            (Some(a), _) if a == -1.0 => rhs.neg(),
            (_, Some(b)) if b == -1.0 => self.neg(),
            _ => Self::wrap(Node::Mul(self.clone(), rhs.clone())),
        }
    }

    pub fn div(&self, rhs: &ScalarExpr) -> ScalarExpr {
        match (self.as_const(), rhs.as_const()) {
            (Some(a), Some(b)) if b != 0.0 => Self::constant(a / b),
            (Some(a), _) if a == 0.0 => Self::zero(),
            (_, Some(b)) if b == 1.0 => self.clone(),
            _ => Self::wrap(Node::Div(self.clone(), rhs.clone())),
        }
    }

    pub fn neg(&self) -> ScalarExpr {
        match &*self.0 {
            Node::Const(c) => Self::constant(-c),
            Node::Neg(inner) => inner.clone(),
            _ => Self::wrap(Node::Neg(self.clone())),
        }
    }

    pub fn scale(&self, factor: f64) -> ScalarExpr {
        self.mul(&Self::constant(factor))
    }

    pub fn powi(&self, exponent: i32) -> ScalarExpr {
        match (exponent, self.as_const()) {
            (0, _) => Self::one(),
            (1, _) => self.clone(),
            (_, Some(c)) if exponent > 0 || c != 0.0 => Self::constant(c.powi(exponent)),
            _ => Self::wrap(Node::Powi(self.clone(), exponent)),
        }
    }

    pub fn sqrt(&self) -> ScalarExpr {
        match self.as_const() {
            Some(c) if c >= 0.0 => Self::constant(c.sqrt()),
            _ => Self::wrap(Node::Sqrt(self.clone())),
        }
    }

    pub fn exp(&self) -> ScalarExpr {
        match self.as_const() {
            Some(c) => Self::constant(c.exp()),
            _ => Self::wrap(Node::Exp(self.clone())),
        }
    }

    pub fn call(def: &Arc<FunctionDef>, arg: &ScalarExpr) -> ScalarExpr {
        Self::wrap(Node::Call(def.clone(), arg.clone()))
    }

    /// Sum of a sequence; empty sums are zero.
    pub fn sum<'a>(terms: impl IntoIterator<Item = &'a ScalarExpr>) -> ScalarExpr {
        terms
            .into_iter()
            .fold(ScalarExpr::zero(), |acc, t| acc.add(t))
    }

    /// Number of distinct nodes in the DAG.
    pub fn node_count(&self) -> usize {
        fn walk(e: &ScalarExpr, seen: &mut HashMap<*const Node, ()>) {
            if seen.insert(e.ptr(), ()).is_some() {
                return;
            }
            e.for_each_child(|c| walk(c, seen));
        }
        let mut seen = HashMap::new();
        walk(self, &mut seen);
        seen.len()
    }

    /// Size of the expression once shared nodes are expanded into a tree,
    /// saturating at `u64::MAX`.
    pub fn tree_size(&self) -> u64 {
        fn walk(e: &ScalarExpr, memo: &mut HashMap<*const Node, u64>) -> u64 {
            if let Some(&s) = memo.get(&e.ptr()) {
                return s;
            }
            let mut total = 1u64;
            e.for_each_child(|c| total = total.saturating_add(walk(c, memo)));
            memo.insert(e.ptr(), total);
            total
        }
        walk(self, &mut HashMap::new())
    }

    /// Read-only view of the top node.
    pub fn view(&self) -> ExprView<'_> {
        match &*self.0 {
            Node::Const(c) => ExprView::Const(*c),
            Node::Var { index, name } => ExprView::Var(*index, name),
            Node::Add(a, b) => ExprView::Add(a, b),
            Node::Sub(a, b) => ExprView::Sub(a, b),
            Node::Mul(a, b) => ExprView::Mul(a, b),
            Node::Div(a, b) => ExprView::Div(a, b),
            Node::Neg(a) => ExprView::Neg(a),
            Node::Powi(a, k) => ExprView::Powi(a, *k),
            Node::Sqrt(a) => ExprView::Sqrt(a),
            Node::Exp(a) => ExprView::Exp(a),
            Node::Call(def, a) => ExprView::Call(def, a),
        }
    }

    pub(crate) fn for_each_child(&self, mut f: impl FnMut(&ScalarExpr)) {
        match &*self.0 {
            Node::Const(_) | Node::Var { .. } => {}
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                f(a);
                f(b);
            }
            Node::Neg(a) | Node::Powi(a, _) | Node::Sqrt(a) | Node::Exp(a) | Node::Call(_, a) => {
                f(a)
            }
        }
    }

    /// Highest coordinate index referenced, if any.
    pub fn max_var_index(&self) -> Option<usize> {
        fn walk(e: &ScalarExpr, seen: &mut HashMap<*const Node, ()>, best: &mut Option<usize>) {
            if seen.insert(e.ptr(), ()).is_some() {
                return;
            }
            if let Node::Var { index, .. } = e.node() {
                *best = Some(best.map_or(*index, |b| b.max(*index)));
            }
            e.for_each_child(|c| walk(c, seen, best));
        }
        let mut best = None;
        walk(self, &mut HashMap::new(), &mut best);
        best
    }
}

fn write_const(f: &mut fmt::Formatter<'_>, c: f64) -> fmt::Result {
    if c < 0.0 || (c == 0.0 && c.is_sign_negative()) {
        write!(f, "(-{})", -c)
    } else {
        write!(f, "{}", c)
    }
}

impl fmt::Display for ScalarExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &*self.0 {
            Node::Const(c) => write_const(f, *c),
            Node::Var { name, .. } => write!(f, "{}", name),
            Node::Add(a, b) => write!(f, "({} + {})", a, b),
            Node::Sub(a, b) => write!(f, "({} - {})", a, b),
            Node::Mul(a, b) => write!(f, "({} * {})", a, b),
            Node::Div(a, b) => write!(f, "({} / {})", a, b),
            Node::Neg(a) => write!(f, "(-{})", a),
            Node::Powi(a, k) => write!(f, "({}^{})", a, k),
            Node::Sqrt(a) => write!(f, "sqrt({})", a),
            Node::Exp(a) => write!(f, "exp({})", a),
            Node::Call(def, a) => write!(f, "{}({})", def.name(), a),
        }
    }
}

impl fmt::Debug for ScalarExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.tree_size() > 400 {
            write!(f, "ScalarExpr(<{} nodes>)", self.node_count())
        } else {
            write!(f, "ScalarExpr({})", self)
        }
    }
}

impl From<f64> for ScalarExpr {
    fn from(c: f64) -> Self {
        ScalarExpr::constant(c)
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident) => {
        impl $trait<&ScalarExpr> for &ScalarExpr {
            type Output = ScalarExpr;
            fn $method(self, rhs: &ScalarExpr) -> ScalarExpr {
                ScalarExpr::$method(self, rhs)
            }
        }
        impl $trait<ScalarExpr> for ScalarExpr {
            type Output = ScalarExpr;
            fn $method(self, rhs: ScalarExpr) -> ScalarExpr {
                ScalarExpr::$method(&self, &rhs)
            }
        }
        impl $trait<&ScalarExpr> for ScalarExpr {
            type Output = ScalarExpr;
            fn $method(self, rhs: &ScalarExpr) -> ScalarExpr {
                ScalarExpr::$method(&self, rhs)
            }
        }
        impl $trait<f64> for &ScalarExpr {
            type Output = ScalarExpr;
            fn $method(self, rhs: f64) -> ScalarExpr {
                ScalarExpr::$method(self, &ScalarExpr::constant(rhs))
            }
        }
        impl $trait<f64> for ScalarExpr {
            type Output = ScalarExpr;
            fn $method(self, rhs: f64) -> ScalarExpr {
                ScalarExpr::$method(&self, &ScalarExpr::constant(rhs))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);
forward_binop!(Div, div);

impl Neg for &ScalarExpr {
    type Output = ScalarExpr;
    fn neg(self) -> ScalarExpr {
        ScalarExpr::neg(self)
    }
}

impl Neg for ScalarExpr {
    type Output = ScalarExpr;
    fn neg(self) -> ScalarExpr {
        ScalarExpr::neg(&self)
    }
}
