//! Independent reference computations: Nijenhuis tensors from the
//! four-bracket definition on polynomial vector fields, and the projector
//! straight from its displayed formula on vectors.

use nalgebra::{DMatrix, DVector};
use pq_core::expr::{Differentiator, ScalarExpr, Tape};
use pq_core::geometry::{EndomorphismField, EPS};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub type Field = Vec<ScalarExpr>;

/// Lie bracket with one memoizing differentiator per coordinate.
pub struct Brackets {
    diffs: Vec<Differentiator>,
}

impl Brackets {
    pub fn new(n: usize) -> Self {
        Brackets {
            diffs: (0..n).map(Differentiator::new).collect(),
        }
    }

    pub fn bracket(&mut self, x: &Field, y: &Field) -> Field {
        let n = x.len();
        (0..n)
            .map(|k| {
                let mut acc = ScalarExpr::zero();
                for i in 0..n {
                    acc = acc.add(&x[i].mul(&self.diffs[i].diff(&y[k])));
                    acc = acc.sub(&y[i].mul(&self.diffs[i].diff(&x[k])));
                }
                acc
            })
            .collect()
    }
}

pub fn act(j: &EndomorphismField, x: &Field) -> Field {
    let n = x.len();
    (0..n)
        .map(|a| {
            let mut acc = ScalarExpr::zero();
            for b in 0..n {
                acc = acc.add(&j.entry(a, b).mul(&x[b]));
            }
            acc
        })
        .collect()
}

fn combine(parts: &[(f64, &Field)]) -> Field {
    let n = parts[0].1.len();
    (0..n)
        .map(|k| {
            parts
                .iter()
                .fold(ScalarExpr::zero(), |acc, (c, f)| acc.add(&f[k].scale(*c)))
        })
        .collect()
}

/// `ε[X,Y] + [JX,JY] − J[JX,Y] − J[X,JY]`.
pub fn nijenhuis_four(j: &EndomorphismField, eps: f64, x: &Field, y: &Field) -> Field {
    let mut br = Brackets::new(x.len());
    let jx = act(j, x);
    let jy = act(j, y);
    let a = br.bracket(x, y);
    let b = br.bracket(&jx, &jy);
    let c = act(j, &br.bracket(&jx, y));
    let d = act(j, &br.bracket(x, &jy));
    combine(&[(eps, &a), (1.0, &b), (-1.0, &c), (-1.0, &d)])
}

/// Random affine vector field `v0 + Σ x_k v_k` with small linear part.
pub fn random_field(rng: &mut ChaCha8Rng, n: usize) -> Field {
    (0..n)
        .map(|_| {
            let mut e = ScalarExpr::constant(rng.gen_range(-1.0..1.0));
            for k in 0..n {
                if rng.gen_bool(0.3) {
                    let v = ScalarExpr::var(k, format!("c{k}"));
                    e = e.add(&v.scale(rng.gen_range(-0.5..0.5)));
                }
            }
            e
        })
        .collect()
}

pub fn eval_field(f: &Field, p: &[f64]) -> DVector<f64> {
    DVector::from_vec(Tape::compile(f.iter()).eval(p).unwrap())
}

pub fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0))
}

pub type Form<'a> = dyn Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64> + 'a;

/// `¼{T(X,Y) + εT(JX,JY) − εJ(T(JX,Y) + T(X,JY))}` on vectors.
pub fn pi02_vec(t: &Form, j: &DMatrix<f64>, eps: f64, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
    let jx = j * x;
    let jy = j * y;
    let mixed = t(&jx, y) + t(x, &jy);
    (t(x, y) + t(&jx, &jy) * eps - j * mixed * eps) * 0.25
}

pub fn projector_vec(t: &Form, js: &[DMatrix<f64>; 3], x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
    let mut acc = DVector::zeros(x.len());
    for i in 0..3 {
        acc += pi02_vec(t, &js[i], EPS[i], x, y);
    }
    acc * (2.0 / 3.0)
}

/// `tr(J P(T)(X, ·))` summed over the coordinate basis.
pub fn trace_vec(t: &Form, js: &[DMatrix<f64>; 3], j: &DMatrix<f64>, x: &DVector<f64>) -> f64 {
    let n = x.len();
    (0..n)
        .map(|k| {
            let e = DVector::from_fn(n, |a, _| if a == k { 1.0 } else { 0.0 });
            (j * projector_vec(t, js, x, &e))[k]
        })
        .sum()
}
