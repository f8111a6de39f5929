#![allow(dead_code)]

use std::sync::Arc;

use pq_core::expr::{differentiate, evaluate_at, ExprView, FunctionDef, ScalarExpr};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub mod oracle;
pub mod zoo;

pub const NVARS: usize = 8;

fn g_value(s: f64) -> f64 {
    s.sin() + 0.1 * s * s
}

fn g_derivative(s: f64) -> f64 {
    s.cos() + 0.2 * s
}

/// Registered test function with a known derivative.
pub fn test_function() -> Arc<FunctionDef> {
    Arc::new(FunctionDef::new("g", g_value).with_derivative(FunctionDef::new("g'", g_derivative)))
}

/// Random expression of depth at most `depth` over `NVARS` coordinates.
pub fn random_expr(rng: &mut ChaCha8Rng, depth: u32, g: &Arc<FunctionDef>) -> ScalarExpr {
    if depth == 0 || rng.gen_bool(0.15) {
        return if rng.gen_bool(0.75) {
            let k = rng.gen_range(0..NVARS);
            ScalarExpr::var(k, format!("v{k}"))
        } else {
            ScalarExpr::constant(rng.gen_range(-3.0..3.0))
        };
    }
    let a = random_expr(rng, depth - 1, g);
    match rng.gen_range(0..10) {
        0 | 1 => a.add(&random_expr(rng, depth - 1, g)),
        2 => a.sub(&random_expr(rng, depth - 1, g)),
        3 | 4 => a.mul(&random_expr(rng, depth - 1, g)),
        5 => a.div(&random_expr(rng, depth - 1, g)),
        6 => a.powi(rng.gen_range(-2..=3)),
        7 => a.sqrt(),
        8 => a.scale(0.5).exp(),
        _ => ScalarExpr::call(g, &a),
    }
}

/// Independent recursive evaluator. Returns `None` near singular nodes:
/// denominators, bases of negative powers or square-root arguments with
/// magnitude below `margin`, or any intermediate value above `cap`.
pub fn tame_value(e: &ScalarExpr, p: &[f64], margin: f64, cap: f64) -> Option<f64> {
    let ev = |x: &ScalarExpr| tame_value(x, p, margin, cap);
    let v = match e.view() {
        ExprView::Const(c) => c,
        ExprView::Var(k, _) => p[k],
        ExprView::Add(a, b) => ev(a)? + ev(b)?,
        ExprView::Sub(a, b) => ev(a)? - ev(b)?,
        ExprView::Mul(a, b) => ev(a)? * ev(b)?,
        ExprView::Div(a, b) => {
            let d = ev(b)?;
            if d.abs() < margin {
                return None;
            }
            ev(a)? / d
        }
        ExprView::Neg(a) => -ev(a)?,
        ExprView::Powi(a, k) => {
            let b = ev(a)?;
            if k < 0 && b.abs() < margin {
                return None;
            }
            b.powi(k)
        }
        ExprView::Sqrt(a) => {
            let s = ev(a)?;
            if s < margin {
                return None;
            }
            s.sqrt()
        }
        ExprView::Exp(a) => ev(a)?.exp(),
        ExprView::Call(def, a) => def.eval(ev(a)?),
    };
    (v.is_finite() && v.abs() <= cap).then_some(v)
}

/// A point is usable when the whole central-difference stencil stays tame.
pub fn tame_stencil(e: &ScalarExpr, var: usize, p: &[f64], h: f64) -> bool {
    let mut q = p.to_vec();
    [-h, 0.0, h].iter().all(|&s| {
        q[var] = p[var] + s;
        tame_value(e, &q, 0.05, 1e4).is_some()
    })
}

/// Central difference with step `h`.
pub fn central(e: &ScalarExpr, var: usize, p: &[f64], h: f64) -> f64 {
    let mut a = p.to_vec();
    let mut b = p.to_vec();
    a[var] += h;
    b[var] -= h;
    (evaluate_at(e, &a).unwrap() - evaluate_at(e, &b).unwrap()) / (2.0 * h)
}

pub fn exact(e: &ScalarExpr, var: usize, p: &[f64]) -> f64 {
    evaluate_at(&differentiate(e, var), p).unwrap()
}

/// Draws one (expression, variable, point) triple with a tame stencil and
/// returns |FD − exact| against the relative bound `1e-6·(1+|exact|)`.
pub fn fd_trial(rng: &mut ChaCha8Rng, g: &Arc<FunctionDef>) -> (f64, f64) {
    loop {
        let e = random_expr(rng, 6, g);
        let var = rng.gen_range(0..NVARS);
        for _ in 0..20 {
            let p: Vec<f64> = (0..NVARS).map(|_| rng.gen_range(0.3..2.0)).collect();
            if !tame_stencil(&e, var, &p, 1e-5) {
                continue;
            }
            let d = exact(&e, var, &p);
            let fd = central(&e, var, &p, 1e-5);
            return ((fd - d).abs(), 1e-6 * (1.0 + d.abs()));
        }
    }
}
