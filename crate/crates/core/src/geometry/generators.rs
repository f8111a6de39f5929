//! Test-structure generators: the flat model, conjugations, pullbacks,
//! basis rotations and the explicit diagonal-frame family.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::chart::Chart;
use super::field::EndomorphismField;
use super::structure::{PqStructure, EPS};
use crate::error::{Error, Result};
use crate::expr::{substitute, Differentiator, FunctionDef, ScalarExpr};

/// Constant-coefficient model on R^{4m}.
///
/// With `R` the block-diagonal of `m` copies of `[[0,-1],[1,0]]`,
/// `J1 = diag(R, -R)`, `J2` swaps the x- and y-blocks, `J3 = J1 J2`.
pub fn flat_model(m: usize) -> Result<PqStructure> {
    let chart = Chart::standard(m)?;
    let [j1, j2, j3] = flat_matrices(m);
    PqStructure::new(
        chart,
        EndomorphismField::constant(&j1),
        EndomorphismField::constant(&j2),
        EndomorphismField::constant(&j3),
    )
}

pub fn flat_matrices(m: usize) -> [DMatrix<f64>; 3] {
    let h = 2 * m;
    let n = 4 * m;
    let mut j1 = DMatrix::zeros(n, n);
    let mut j2 = DMatrix::zeros(n, n);
    for b in 0..m {
        for (off, s) in [(0, 1.0), (h, -1.0)] {
            let r = off + 2 * b;
            j1[(r, r + 1)] = -s;
            j1[(r + 1, r)] = s;
        }
    }
    for i in 0..h {
        j2[(i, h + i)] = 1.0;
        j2[(h + i, i)] = 1.0;
    }
    let j3 = &j1 * &j2;
    [j1, j2, j3]
}

/// `J_i ↦ G J_i G⁻¹` with `G⁻¹` built symbolically.
pub fn conjugate_structure(h: &PqStructure, g: &EndomorphismField) -> Result<PqStructure> {
    if g.dim() != h.dim() {
        return Err(Error::Dimension {
            expected: h.dim(),
            found: g.dim(),
        });
    }
    let (m, c0) = g.faddeev_leverrier();
    let f = c0.neg();
    let conj = |j: &EndomorphismField| {
        let num = g.mul(j).mul(&m);
        EndomorphismField::from_fn(h.dim(), |a, b| num.entry(a, b).div(&f))
    };
    PqStructure::new(h.chart().clone(), conj(h.j(0)), conj(h.j(1)), conj(h.j(2)))
}

/// Pullback `J' = DΦ⁻¹ (J∘Φ) DΦ` along a local diffeomorphism `Φ`.
///
/// Unlike a pointwise conjugation, this preserves every integrability
/// property of the source structure.
pub fn pullback_structure(h: &PqStructure, phi: &[ScalarExpr]) -> Result<PqStructure> {
    let n = h.dim();
    if phi.len() != n {
        return Err(Error::Dimension {
            expected: n,
            found: phi.len(),
        });
    }
    let mut diffs: Vec<Differentiator> = (0..n).map(Differentiator::new).collect();
    let dphi = EndomorphismField::from_fn(n, |a, b| diffs[b].diff(&phi[a]));
    let (m, c0) = dphi.faddeev_leverrier();
    let f = c0.neg();
    let pull = |j: &EndomorphismField| {
        let moved = EndomorphismField::from_fn(n, |a, b| substitute(j.entry(a, b), phi));
        let num = m.mul(&moved).mul(&dphi);
        EndomorphismField::from_fn(n, |a, b| num.entry(a, b).div(&f))
    };
    PqStructure::new(h.chart().clone(), pull(h.j(0)), pull(h.j(1)), pull(h.j(2)))
}

fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0))
}

/// `Id + scale·(C0 + Σ x_k C_k)` built from the given constant matrices.
fn affine_field(chart: &Chart, scale: f64, mats: &[DMatrix<f64>]) -> EndomorphismField {
    let n = chart.dim();
    EndomorphismField::from_fn(n, |a, b| {
        let mut terms = vec![ScalarExpr::constant(
            if a == b { 1.0 } else { 0.0 } + scale * mats[0][(a, b)],
        )];
        for k in 0..n {
            terms.push(chart.var(k).scale(scale * mats[k + 1][(a, b)]));
        }
        ScalarExpr::sum(&terms)
    })
}

/// Random `Id + scale·(dense affine polynomials)`; invertible for small
/// `scale` on a bounded box.
pub fn random_conjugator(chart: &Chart, seed: u64, scale: f64) -> EndomorphismField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = chart.dim();
    let mats: Vec<DMatrix<f64>> = (0..=n).map(|_| random_matrix(&mut rng, n)).collect();
    affine_field(chart, scale, &mats)
}

/// Random conjugator commuting with the constant field `J_i` of `h`, so
/// that `J_i` survives conjugation unchanged.
pub fn commuting_conjugator(h: &PqStructure, i: usize, seed: u64, scale: f64) -> Result<EndomorphismField> {
    if !h.j(i).is_constant() {
        return Err(Error::Invalid("commuting conjugator needs a constant J_i".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = h.dim();
    let j = h.j(i).eval(&vec![0.0; n])?;
    let mats: Vec<DMatrix<f64>> = (0..=n)
        .map(|_| {
            let b = random_matrix(&mut rng, n);
            (&b + &j * &b * &j * EPS[i]) * 0.5
        })
        .collect();
    Ok(affine_field(h.chart(), scale, &mats))
}

/// Random near-identity quadratic diffeomorphism `x ↦ x + scale·q(x)`.
pub fn random_diffeomorphism(chart: &Chart, seed: u64, scale: f64) -> Vec<ScalarExpr> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = chart.dim();
    (0..n)
        .map(|a| {
            let mut terms = vec![chart.var(a)];
            for _ in 0..4 {
                let b = rng.gen_range(0..n);
                let c = rng.gen_range(0..n);
                let coef = scale * rng.gen_range(-1.0..1.0);
                terms.push(chart.var(b).mul(&chart.var(c)).scale(coef));
            }
            ScalarExpr::sum(&terms)
        })
        .collect()
}

/// 3x3 matrix of the fiber action, `new J_i = Σ_j L[j][i] J_j`.
pub type FiberRotation = [[ScalarExpr; 3]; 3];

fn mat3_mul(a: &FiberRotation, b: &FiberRotation) -> FiberRotation {
    std::array::from_fn(|r| {
        std::array::from_fn(|c| {
            let t: Vec<ScalarExpr> = (0..3).map(|k| a[r][k].mul(&b[k][c])).collect();
            ScalarExpr::sum(&t)
        })
    })
}

/// Rotation in the (J2, J3)-plane with `cos = (1-t²)/(1+t²)`,
/// `sin = 2t/(1+t²)`.
pub fn rotation23(t: &ScalarExpr) -> FiberRotation {
    let one = ScalarExpr::one();
    let zero = ScalarExpr::zero();
    let den = one.add(&t.mul(t));
    let cos = one.sub(&t.mul(t)).div(&den);
    let sin = t.scale(2.0).div(&den);
    [
        [one.clone(), zero.clone(), zero.clone()],
        [zero.clone(), cos.clone(), sin.neg()],
        [zero, sin, cos],
    ]
}

/// Boost in the (J1, J2)-plane with rapidity `u`.
pub fn boost12(u: &ScalarExpr) -> FiberRotation {
    let one = ScalarExpr::one();
    let zero = ScalarExpr::zero();
    let (ep, em) = (u.exp(), u.neg().exp());
    let cosh = ep.add(&em).scale(0.5);
    let sinh = ep.sub(&em).scale(0.5);
    [
        [cosh.clone(), sinh.clone(), zero.clone()],
        [sinh, cosh, zero.clone()],
        [zero.clone(), zero, one],
    ]
}

/// `rotation23(t1) · boost12(u) · rotation23(t2)`, an element of SO(1,2).
pub fn fiber_rotation(t1: &ScalarExpr, u: &ScalarExpr, t2: &ScalarExpr) -> FiberRotation {
    mat3_mul(&mat3_mul(&rotation23(t1), &boost12(u)), &rotation23(t2))
}

/// Random fiber rotation; constant when `varying` is false, otherwise with
/// parameters affine in the coordinates.
pub fn random_fiber_rotation(chart: &Chart, seed: u64, varying: bool) -> FiberRotation {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let param = |rng: &mut ChaCha8Rng| {
        let mut terms = vec![ScalarExpr::constant(rng.gen_range(-0.8..0.8))];
        if varying {
            for k in 0..chart.dim() {
                terms.push(chart.var(k).scale(0.15 * rng.gen_range(-1.0..1.0)));
            }
        }
        ScalarExpr::sum(&terms)
    };
    let t1 = param(&mut rng);
    let u = param(&mut rng);
    let t2 = param(&mut rng);
    fiber_rotation(&t1, &u, &t2)
}

/// Another admissible basis of the same structure bundle.
pub fn rotate_basis(h: &PqStructure, l: &FiberRotation) -> Result<PqStructure> {
    let col = |i: usize| h.element(&[l[0][i].clone(), l[1][i].clone(), l[2][i].clone()]);
    PqStructure::new(h.chart().clone(), col(0), col(1), col(2))
}

/// Structure determined by a diagonal frame function `f` on the standard
/// chart: `J2 = diag(Id, -Id)`, `J1(∂x_i) = J3(∂x_i) = f_i ∂y_i`,
/// `J1(∂y_i) = -J3(∂y_i) = -(1/f_i) ∂x_i`.
pub fn from_diagonal_frame(chart: &Chart, f: &[ScalarExpr]) -> Result<PqStructure> {
    let n = chart.dim();
    let h = n / 2;
    if f.len() != h {
        return Err(Error::Dimension {
            expected: h,
            found: f.len(),
        });
    }
    let inv: Vec<ScalarExpr> = f.iter().map(|fi| ScalarExpr::one().div(fi)).collect();
    let j1 = EndomorphismField::from_fn(n, |a, b| {
        if a >= h && b == a - h {
            f[b].clone()
        } else if a < h && b == a + h {
            inv[a].neg()
        } else {
            ScalarExpr::zero()
        }
    });
    let j2 = EndomorphismField::from_fn(n, |a, b| match (a == b, a < h) {
        (true, true) => ScalarExpr::one(),
        (true, false) => ScalarExpr::constant(-1.0),
        _ => ScalarExpr::zero(),
    });
    let j3 = EndomorphismField::from_fn(n, |a, b| {
        if a >= h && b == a - h {
            f[b].clone()
        } else if a < h && b == a + h {
            inv[a].clone()
        } else {
            ScalarExpr::zero()
        }
    });
    PqStructure::new(chart.clone(), j1, j2, j3)
}

/// The diagonal frame functions of the counterexample family:
/// `f1 = h(Sx/Sy)`, `f_i = x_i Sy / (y_i Sx)` for `i >= 2`, where
/// `Sx = Σ_{j>=2} x_j²` and `Sy = Σ_{j>=2} y_j²`.
pub fn propo_frame(chart: &Chart, h: &Arc<FunctionDef>) -> Vec<ScalarExpr> {
    let half = chart.dim() / 2;
    let x = |i: usize| chart.var(i);
    let y = |i: usize| chart.var(half + i);
    let sx = ScalarExpr::sum(&(1..half).map(|j| x(j).powi(2)).collect::<Vec<_>>());
    let sy = ScalarExpr::sum(&(1..half).map(|j| y(j).powi(2)).collect::<Vec<_>>());
    let mut f = vec![ScalarExpr::call(h, &sx.div(&sy))];
    for i in 1..half {
        f.push(x(i).mul(&sy).div(&y(i).mul(&sx)));
    }
    f
}

pub fn propo_structure(m: usize, h: &Arc<FunctionDef>) -> Result<PqStructure> {
    let chart = Chart::standard(m)?;
    let f = propo_frame(&chart, h);
    from_diagonal_frame(&chart, &f)
}
