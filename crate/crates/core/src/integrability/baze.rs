//! Normal forms for pairs and triples of compatible structures with
//! degenerate pairwise spans.
//!
//! All vectors are coefficient triples with respect to the admissible basis
//! of the ambient structure, with the Lorentzian metric `-a1 b1 + a2 b2 + a3 b3`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{det3, gram, independent, CompatibleStructure, GEOMETRIC_TOL};
use crate::error::{Error, Result};
use crate::expr::Point;
use crate::geometry::{flat_matrices, metric};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum BazeCase {
    NonDegeneratePair,
    DegeneratePair,
    /// Product of pairwise metrics `+1`: `I1 = J2'`, `I2 = J1' − J2' + q J3'`,
    /// `I3 = a J1' + J2' + a q J3'`.
    DependentTriple { a: f64, q: f64 },
    /// Product `−1`: `I1 = J2'`, `I2 = J1' + J2' + J3'`, `I3 = J1' + J2' − J3'`.
    IndependentTriple,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BazeForm {
    pub case: BazeCase,
    /// `(i, j, <I_i, I_j>)` for every pair of inputs.
    pub metrics: Vec<(usize, usize, f64)>,
    pub metric_product: Option<f64>,
    /// Input index used for each of `I1, I2, I3` in the normal form.
    pub order: Vec<usize>,
    /// Sign applied to each reordered input.
    pub signs: Vec<f64>,
    /// Rows `J1', J2', J3'` of the constructed admissible basis.
    pub basis: Option<[[f64; 3]; 3]>,
    /// Largest mismatch between the inputs and their normal-form
    /// expressions, including the admissibility relations of the basis.
    pub reconstruction_residual: f64,
}

fn add(a: [f64; 3], b: [f64; 3], s: f64) -> [f64; 3] {
    [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]]
}

fn scale(a: [f64; 3], s: f64) -> [f64; 3] {
    a.map(|x| x * s)
}

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    (0..3).map(|i| (a[i] - b[i]).abs()).fold(0.0, f64::max)
}

/// Failure of `(J1', J2', J3')` to satisfy the admissible-basis relations,
/// measured in a faithful matrix representation.
fn admissibility_defect(basis: &[[f64; 3]; 3]) -> f64 {
    let js = flat_matrices(1);
    let mat = |c: [f64; 3]| &js[0] * c[0] + &js[1] * c[1] + &js[2] * c[2];
    let [a, b, c] = basis.map(mat);
    let id = DMatrix::<f64>::identity(4, 4);
    [
        (&a * &a + &id).amax(),
        (&b * &b - &id).amax(),
        (&a * &b - &c).amax(),
        (&a * &b + &b * &a).amax(),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

/// Classifies two or three compatible structures at `p` and, for triples with
/// degenerate pairwise spans, constructs the normal-form basis.
pub fn baze_normal_form(list: &[CompatibleStructure], p: &Point) -> Result<BazeForm> {
    if !(2..=3).contains(&list.len()) {
        return Err(Error::Invalid(format!("expected two or three structures, got {}", list.len())));
    }
    let c: Vec<[f64; 3]> = list.iter().map(|s| s.checked_at(p)).collect::<Result<_>>()?;
    let mut metrics = Vec::new();
    for i in 0..c.len() {
        for j in (i + 1)..c.len() {
            if !independent(c[i], c[j]) {
                return Err(Error::Invalid(format!("I{} and I{} are dependent", i + 1, j + 1)));
            }
            metrics.push((i, j, metric(c[i], c[j])));
        }
    }
    if c.len() == 2 {
        let case = if gram(c[0], c[1]).abs() > GEOMETRIC_TOL {
            BazeCase::NonDegeneratePair
        } else {
            BazeCase::DegeneratePair
        };
        return Ok(BazeForm {
            case,
            metrics,
            metric_product: None,
            order: vec![0, 1],
            signs: vec![1.0, 1.0],
            basis: None,
            reconstruction_residual: 0.0,
        });
    }
    if list.iter().any(|s| s.eps < 0.0) {
        return Err(Error::Invalid("triple normal forms need three para-complex structures".into()));
    }
    for &(i, j, m) in &metrics {
        if (m.abs() - 1.0).abs() > GEOMETRIC_TOL {
            return Err(Error::Invalid(format!(
                "span of I{} and I{} is non-degenerate (<I{},I{}> = {m})",
                i + 1,
                j + 1,
                i + 1,
                j + 1
            )));
        }
    }
    let sign = |i: usize, j: usize| {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        metrics.iter().find(|m| m.0 == a && m.1 == b).unwrap().2.signum()
    };
    let product: f64 = metrics.iter().map(|m| m.2).product();
    let form = if product > 0.0 {
        dependent_triple(&c, sign)
    } else {
        independent_triple(&c, sign)
    };
    let (case, order, signs, basis, residual) = form;
    Ok(BazeForm {
        case,
        metrics,
        metric_product: Some(product),
        order,
        signs,
        basis: Some(basis),
        reconstruction_residual: residual,
    })
}

type Built = (BazeCase, Vec<usize>, Vec<f64>, [[f64; 3]; 3], f64);

/// Product `+1`: all pairwise metrics `+1`, or exactly one.
fn dependent_triple(c: &[[f64; 3]], sign: impl Fn(usize, usize) -> f64) -> Built {
    // the pair with metric +1 becomes (I1, I3); flipping I2 then makes the
    // other two metrics -1
    let (i1, i3) = [(0, 2), (0, 1), (1, 2)]
        .into_iter()
        .find(|&(a, b)| sign(a, b) > 0.0)
        .unwrap();
    let i2 = 3 - i1 - i3;
    let s2 = if sign(i1, i2) > 0.0 { -1.0 } else { 1.0 };
    let u1 = c[i1];
    let u2 = scale(c[i2], s2);
    let u3 = c[i3];
    // N = J1' + q J3' is null and orthogonal to J2' = I1
    let nul = add(u2, u1, 1.0);
    // the other null line of the Lorentzian plane I1^⊥, scaled so <N, K> = -2
    let candidates = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]].map(|e| add(e, u1, -metric(e, u1)));
    let u = candidates
        .into_iter()
        .max_by(|a, b| metric(*a, nul).abs().total_cmp(&metric(*b, nul).abs()))
        .unwrap();
    let lambda = -metric(u, u) / (2.0 * metric(u, nul));
    let k = add(u, nul, lambda);
    let k = scale(k, -2.0 / metric(nul, k));
    let j1 = scale(add(nul, k, 1.0), 0.5);
    let w = scale(add(nul, k, -1.0), 0.5);
    let q = det3(j1, u1, w).signum();
    let j3 = scale(w, q);
    let a = metric(add(u3, u1, -1.0), k) / metric(nul, k);
    let basis = [j1, u1, j3];
    let r2 = dist(u2, add(add(j1, u1, -1.0), j3, q));
    let r3 = dist(u3, add(add(scale(j1, a), u1, 1.0), j3, a * q));
    let residual = r2.max(r3).max(admissibility_defect(&basis));
    (
        BazeCase::DependentTriple { a, q },
        vec![i1, i2, i3],
        vec![1.0, s2, 1.0],
        basis,
        residual,
    )
}

/// Product `−1`: one pairwise metric `−1`, or all three.
fn independent_triple(c: &[[f64; 3]], sign: impl Fn(usize, usize) -> f64) -> Built {
    let (i2, i3) = if [(0, 1), (0, 2), (1, 2)].iter().all(|&(a, b)| sign(a, b) < 0.0) {
        (1, 2)
    } else {
        [(0, 1), (0, 2), (1, 2)]
            .into_iter()
            .find(|&(a, b)| sign(a, b) < 0.0)
            .unwrap()
    };
    let i1 = 3 - i2 - i3;
    let s1 = if sign(i1, i2) < 0.0 { -1.0 } else { 1.0 };
    let u1 = scale(c[i1], s1);
    let build = |u2: [f64; 3], u3: [f64; 3]| {
        let j1 = add(scale(add(u2, u3, 1.0), 0.5), u1, -1.0);
        let j3 = scale(add(u2, u3, -1.0), 0.5);
        [j1, u1, j3]
    };
    let (mut i2, mut i3) = (i2, i3);
    let mut basis = build(c[i2], c[i3]);
    if det3(basis[0], basis[1], basis[2]) < 0.0 {
        std::mem::swap(&mut i2, &mut i3);
        basis = build(c[i2], c[i3]);
    }
    let [j1, j2, j3] = basis;
    let r2 = dist(c[i2], add(add(j1, j2, 1.0), j3, 1.0));
    let r3 = dist(c[i3], add(add(j1, j2, 1.0), j3, -1.0));
    let residual = r2.max(r3).max(admissibility_defect(&basis));
    (
        BazeCase::IndependentTriple,
        vec![i1, i2, i3],
        vec![s1, 1.0, 1.0],
        basis,
        residual,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Chart;

    fn p() -> Point {
        Chart::standard(2).unwrap().point(vec![0.0; 8]).unwrap()
    }

    fn cs(a: [f64; 3]) -> CompatibleStructure {
        CompatibleStructure::constant(a).unwrap()
    }

    #[test]
    fn independent_triple_normal_form() {
        let list = [cs([0.0, 1.0, 0.0]), cs([1.0, 1.0, 1.0]), cs([1.0, 1.0, -1.0])];
        let f = baze_normal_form(&list, &p()).unwrap();
        assert_eq!(f.case, BazeCase::IndependentTriple);
        assert!((f.metric_product.unwrap() + 1.0).abs() < 1e-12);
        assert!(f.reconstruction_residual < 1e-12);
        assert_eq!(f.basis.unwrap(), [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
    }

    #[test]
    fn dependent_triple_coefficients() {
        let list = [cs([0.0, 1.0, 0.0]), cs([1.0, -1.0, 1.0]), cs([2.0, 1.0, 2.0])];
        let f = baze_normal_form(&list, &p()).unwrap();
        match f.case {
            BazeCase::DependentTriple { a, q } => {
                assert!((a - 2.0).abs() < 1e-12);
                assert_eq!(q, 1.0);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(f.reconstruction_residual < 1e-9);
    }

    #[test]
    fn dependent_triple_negative_q() {
        // reflecting J3 in the previous example flips q
        let list = [cs([0.0, 1.0, 0.0]), cs([1.0, -1.0, -1.0]), cs([3.0, 1.0, -3.0])];
        let f = baze_normal_form(&list, &p()).unwrap();
        match f.case {
            BazeCase::DependentTriple { a, q } => {
                assert!((a - 3.0).abs() < 1e-12);
                assert_eq!(q, -1.0);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(f.reconstruction_residual < 1e-9);
    }

    #[test]
    fn pairs_classified() {
        let f = baze_normal_form(&[cs([1.0, 0.0, 0.0]), cs([0.0, 1.0, 0.0])], &p()).unwrap();
        assert_eq!(f.case, BazeCase::NonDegeneratePair);
        let f = baze_normal_form(&[cs([0.0, 1.0, 0.0]), cs([1.0, 1.0, 1.0])], &p()).unwrap();
        assert_eq!(f.case, BazeCase::DegeneratePair);
    }

    #[test]
    fn dependent_inputs_rejected() {
        let list = [cs([0.0, 1.0, 0.0]), cs([0.0, -1.0, 0.0])];
        assert!(baze_normal_form(&list, &p()).is_err());
    }
}
