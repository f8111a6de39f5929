//! Pointwise operators on tensors at a single point, given the matrices of
//! an admissible basis there.

use nalgebra::{DMatrix, DVector};

use super::tensor::Tensor3;
use crate::geometry::EPS;

/// `Π^{0,2}_J(T) = ¼{T + εT(J·,J·) − εJ(T(J·,·) + T(·,J·))}`.
pub fn pi02(j: &DMatrix<f64>, eps: f64, t: &Tensor3) -> Tensor3 {
    let n = t.n();
    let id = DMatrix::identity(n, n);
    let tjj = t.precompose(j, j);
    let mixed = &t.precompose(j, &id) + &t.precompose(&id, j);
    ((t + &(&tjj * eps)) - mixed.left(j).scale(eps)).scale(0.25)
}

/// `P(T) = (2/3) Σ Π^{0,2}_{J_i}(T)`.
pub fn projector(js: &[DMatrix<f64>; 3], t: &Tensor3) -> Tensor3 {
    let mut acc = Tensor3::zeros(t.n());
    for i in 0..3 {
        acc = &acc + &pi02(&js[i], EPS[i], t);
    }
    acc.scale(2.0 / 3.0)
}

/// `(δη)(X, Y) = η(X)Y − η(Y)X`.
pub fn delta(eta: &Tensor3) -> Tensor3 {
    eta - &eta.swap()
}

/// The centralizer-valued section `π(T)` with `δπ(T) = T − P(T)`.
pub fn pi_section(js: &[DMatrix<f64>; 3], t: &Tensor3) -> Tensor3 {
    let n = t.n();
    let id = DMatrix::identity(n, n);
    let mut out = t.scale(0.25);
    for i in 0..3 {
        let e = EPS[i];
        out = &out + &t.precompose(&id, &js[i]).left(&js[i]).scale(0.25 * e);
        out = &out - &t.precompose(&js[i], &id).left(&js[i]).scale(e / 12.0);
        for k in 0..3 {
            let c = &js[k] * &js[i];
            out = &out - &t.precompose(&js[i], &js[k]).left(&c).scale(e * EPS[k] / 12.0);
        }
    }
    out
}

/// The one-forms `τ_i(X) = ε_i tr(J_i P(T)_X) / (n − 2)`, assuming `t`
/// already lies in the image of `P`.
pub fn tau_of_projected(js: &[DMatrix<f64>; 3], pt: &Tensor3) -> [DVector<f64>; 3] {
    let n = pt.n();
    let den = (n - 2) as f64;
    std::array::from_fn(|i| {
        DVector::from_fn(n, |x, _| EPS[i] * (&js[i] * pt.slot(x)).trace() / den)
    })
}

pub fn tau(js: &[DMatrix<f64>; 3], t: &Tensor3) -> [DVector<f64>; 3] {
    tau_of_projected(js, &projector(js, t))
}

/// `Σ β_i ⊗ J_i` as an endomorphism-valued form.
pub fn structure_valued(js: &[DMatrix<f64>; 3], beta: &[DVector<f64>; 3]) -> Tensor3 {
    let n = js[0].nrows();
    Tensor3::from_fn(n, |k, x, y| (0..3).map(|i| beta[i][x] * js[i][(k, y)]).sum())
}

/// `α ⊗ Id`.
pub fn scalar_valued(alpha: &DVector<f64>) -> Tensor3 {
    let n = alpha.len();
    Tensor3::from_fn(n, |k, x, y| if k == y { alpha[x] } else { 0.0 })
}

/// Projection `T ↦ P(T) − δ(Σ τ_i ⊗ J_i)` onto the canonical complement.
pub fn complement_projection(js: &[DMatrix<f64>; 3], t: &Tensor3) -> Tensor3 {
    let pt = projector(js, t);
    let tau = tau_of_projected(js, &pt);
    &pt - &delta(&structure_valued(js, &tau))
}

/// Largest `|tr(J_i T_X)|` over `i` and coordinate `X`.
pub fn trace_defect(js: &[DMatrix<f64>; 3], t: &Tensor3) -> f64 {
    let mut m = 0.0f64;
    for x in 0..t.n() {
        let s = t.slot(x);
        for j in js {
            m = m.max((j * &s).trace().abs());
        }
    }
    m
}

fn alpha_after(alpha: &DVector<f64>, j: &DMatrix<f64>) -> DVector<f64> {
    // (α ∘ J)_x = Σ_a α_a J[a][x]
    j.transpose() * alpha
}

/// `T^α = Σ ε_i (α∘J_i) ⊗ J_i`.
pub fn t_alpha(js: &[DMatrix<f64>; 3], alpha: &DVector<f64>) -> Tensor3 {
    let aj: [DVector<f64>; 3] = std::array::from_fn(|i| alpha_after(alpha, &js[i]) * EPS[i]);
    structure_valued(js, &aj)
}

/// `E^α(X, Y) = −(α(Y)X + Σ ε_i α(J_iY) J_iX + α(X)Y)`.
pub fn e_alpha(js: &[DMatrix<f64>; 3], alpha: &DVector<f64>) -> Tensor3 {
    let n = alpha.len();
    let aj: [DVector<f64>; 3] = std::array::from_fn(|i| alpha_after(alpha, &js[i]));
    Tensor3::from_fn(n, |k, x, y| {
        let mut v = 0.0;
        if k == x {
            v += alpha[y];
        }
        if k == y {
            v += alpha[x];
        }
        for i in 0..3 {
            v += EPS[i] * aj[i][y] * js[i][(k, x)];
        }
        -v
    })
}

/// `S^α_X(Y)`, the symmetric shift between minimal connections.
pub fn s_alpha(js: &[DMatrix<f64>; 3], alpha: &DVector<f64>) -> Tensor3 {
    let n = alpha.len();
    let aj: [DVector<f64>; 3] = std::array::from_fn(|i| alpha_after(alpha, &js[i]));
    Tensor3::from_fn(n, |k, x, y| {
        let mut v = 0.0;
        if k == x {
            v += alpha[y];
        }
        if k == y {
            v += alpha[x];
        }
        for i in 0..3 {
            v += EPS[i] * (aj[i][y] * js[i][(k, x)] + aj[i][x] * js[i][(k, y)]);
        }
        v
    })
}

/// `max_i ‖[A, J_i]‖`.
pub fn centralizer_residual(a: &DMatrix<f64>, js: &[DMatrix<f64>; 3]) -> f64 {
    js.iter().map(|j| (a * j - j * a).amax()).fold(0.0, f64::max)
}

/// Projection of `m` onto span{J_i}: coefficients and remainder.
pub fn project_onto_span(m: &DMatrix<f64>, js: &[DMatrix<f64>; 3]) -> ([f64; 3], DMatrix<f64>) {
    let mut gram = nalgebra::Matrix3::<f64>::zeros();
    let mut rhs = nalgebra::Vector3::<f64>::zeros();
    for i in 0..3 {
        for k in 0..3 {
            gram[(i, k)] = js[i].dot(&js[k]);
        }
        rhs[i] = js[i].dot(m);
    }
    let c = gram.lu().solve(&rhs).unwrap_or_default();
    let a = [c[0], c[1], c[2]];
    let rem = m - (&js[0] * a[0] + &js[1] * a[1] + &js[2] * a[2]);
    (a, rem)
}

/// `max_i` distance of `[A, J_i]` from span{J_1, J_2, J_3}.
pub fn normalizer_residual(a: &DMatrix<f64>, js: &[DMatrix<f64>; 3]) -> f64 {
    js.iter()
        .map(|j| project_onto_span(&(a * j - j * a), js).1.amax())
        .fold(0.0, f64::max)
}

/// Projection onto the centralizer: the average of `g⁻¹ B g` over
/// `g ∈ {Id, J1, J2, J3}`, using `J_i⁻¹ = ε_i J_i`.
pub fn centralizer_part(b: &DMatrix<f64>, js: &[DMatrix<f64>; 3]) -> DMatrix<f64> {
    let mut acc = b.clone();
    for i in 0..3 {
        acc += &js[i] * b * &js[i] * EPS[i];
    }
    acc * 0.25
}

/// Least-squares fit `T ≈ δ(Σ_b β_b ⊗ M_b)` over one-forms `β_b`, for fixed
/// matrices `M_b`. Returns the forms and the largest remaining component.
pub fn delta_fit(mats: &[DMatrix<f64>], t: &Tensor3) -> (Vec<DVector<f64>>, f64) {
    let n = t.n();
    let unknowns = mats.len() * n;
    let rows = n * n * (n - 1) / 2;
    let mut a = DMatrix::zeros(rows, unknowns);
    let mut rhs = DVector::zeros(rows);
    let mut r = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            for k in 0..n {
                for (b, m) in mats.iter().enumerate() {
                    a[(r, b * n + i)] += m[(k, j)];
                    a[(r, b * n + j)] -= m[(k, i)];
                }
                rhs[r] = t.get(k, i, j);
                r += 1;
            }
        }
    }
    let (x, _) = crate::linalg::lstsq(&a, &rhs, 1e-12);
    let resid = (&a * &x - &rhs).amax();
    let forms = (0..mats.len()).map(|b| x.rows(b * n, n).into_owned()).collect();
    (forms, resid)
}

/// Nijenhuis tensor on coordinate fields from the value and partials of `J`:
/// `N^b_ij = J^a_i ∂_aJ^b_j − J^a_j ∂_aJ^b_i − J^b_c(∂_iJ^c_j − ∂_jJ^c_i)`.
pub fn nijenhuis_at(j: &DMatrix<f64>, dj: &[DMatrix<f64>]) -> Tensor3 {
    bracket_at(j, dj, j, dj).scale(0.5)
}

/// Nijenhuis bracket `[A, B]` on coordinate fields.
pub fn bracket_at(a: &DMatrix<f64>, da: &[DMatrix<f64>], b: &DMatrix<f64>, db: &[DMatrix<f64>]) -> Tensor3 {
    let n = a.nrows();
    // directional derivatives: (D_A B)[i] = Σ_a A[a][i] ∂_a B
    let dir = |v: &DMatrix<f64>, d: &[DMatrix<f64>], i: usize| -> DMatrix<f64> {
        let mut acc = DMatrix::zeros(n, n);
        for s in 0..n {
            let c = v[(s, i)];
            if c != 0.0 {
                acc += &d[s] * c;
            }
        }
        acc
    };
    let ab: Vec<DMatrix<f64>> = (0..n).map(|i| dir(a, db, i)).collect();
    let ba: Vec<DMatrix<f64>> = (0..n).map(|i| dir(b, da, i)).collect();
    let mut t = Tensor3::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let curl_b = DVector::from_fn(n, |c, _| db[i][(c, j)] - db[j][(c, i)]);
            let curl_a = DVector::from_fn(n, |c, _| da[i][(c, j)] - da[j][(c, i)]);
            let corr = a * curl_b + b * curl_a;
            for k in 0..n {
                let v = ab[i][(k, j)] - ba[j][(k, i)] + ba[i][(k, j)] - ab[j][(k, i)] - corr[k];
                t.set(k, i, j, v);
            }
        }
    }
    t
}
