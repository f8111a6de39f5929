//! Pointwise connections preserving an admissible basis or its span: the
//! linear solver, the Obata connection, the minimal family and the induced
//! connection form on the structure bundle.

mod solve;

use nalgebra::{DMatrix, DVector, Matrix3};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::Point;
use crate::geometry::{OneForm, PqStructure, StructureJet, EPS};
use crate::tensorcalc::{algebra, th_from_jet, Tensor3};

pub use solve::{solve_preserving, solve_preserving_with, Preservation, SolveOptions, SolveStats};

/// Christoffel data at one point together with the structure jet there.
///
/// `gamma.get(a, k, b)` is `Γ^a_{kb}`, the `∂_a` component of `∇_{∂k} ∂b`,
/// so `gamma` is the connection as an endomorphism-valued one-form and its
/// torsion is `δ(gamma)`.
#[derive(Clone, Debug)]
pub struct ConnectionJet {
    pub point: Point,
    pub gamma: Tensor3,
    pub structure: StructureJet,
    pub stats: Option<SolveStats>,
}

/// Flattened form for reports.
#[derive(Clone, Debug, Serialize)]
pub struct ConnectionRecord {
    pub point: Vec<f64>,
    /// `Γ^a_{kb}` at index `a·n² + k·n + b`.
    pub gamma: Vec<f64>,
    pub stats: Option<SolveStats>,
}

impl ConnectionJet {
    pub fn n(&self) -> usize {
        self.gamma.n()
    }

    /// `Γ_k` as a matrix.
    pub fn gamma_k(&self, k: usize) -> DMatrix<f64> {
        self.gamma.slot(k)
    }

    pub fn torsion(&self) -> Tensor3 {
        algebra::delta(&self.gamma)
    }

    /// `(∇_{∂k} J_i) = ∂_k J_i + [Γ_k, J_i]`.
    pub fn covariant_derivative(&self, i: usize, k: usize) -> DMatrix<f64> {
        let g = self.gamma_k(k);
        let j = &self.structure.j[i];
        &self.structure.dj[i][k] + &g * j - j * &g
    }

    /// `∇_X` of `a1 J1 + a2 J2 + a3 J3` with constant coefficients.
    pub fn covariant_derivative_element(&self, a: [f64; 3], x: &DVector<f64>) -> DMatrix<f64> {
        let n = self.n();
        let mut acc = DMatrix::zeros(n, n);
        for k in 0..n {
            if x[k] != 0.0 {
                for i in 0..3 {
                    acc += self.covariant_derivative(i, k) * (a[i] * x[k]);
                }
            }
        }
        acc
    }

    /// Largest component of any `∇J_i`.
    pub fn basis_residual(&self) -> f64 {
        let mut m = 0.0f64;
        for i in 0..3 {
            for k in 0..self.n() {
                m = m.max(self.covariant_derivative(i, k).amax());
            }
        }
        m
    }

    /// Largest distance of any `∇J_i` from span{J1, J2, J3}.
    pub fn bundle_residual(&self) -> f64 {
        let mut m = 0.0f64;
        for i in 0..3 {
            for k in 0..self.n() {
                let d = self.covariant_derivative(i, k);
                m = m.max(algebra::project_onto_span(&d, &self.structure.j).1.amax());
            }
        }
        m
    }

    /// The connection `∇ + η`.
    pub fn shifted(&self, eta: &Tensor3) -> ConnectionJet {
        ConnectionJet {
            point: self.point.clone(),
            gamma: &self.gamma + eta,
            structure: self.structure.clone(),
            stats: None,
        }
    }

    pub fn record(&self) -> ConnectionRecord {
        ConnectionRecord {
            point: self.point.coords.clone(),
            gamma: self.gamma.data().to_vec(),
            stats: self.stats.clone(),
        }
    }
}

/// `Γ⁰_k = ¼ Σ ε_i J_i ∂_k J_i`, the average of the coordinate connection
/// over `{Id, J1, J2, J3}`; it preserves every `J_i`.
pub fn averaged_connection(jet: &StructureJet) -> Tensor3 {
    let n = jet.n();
    let mats: Vec<DMatrix<f64>> = (0..n)
        .map(|k| {
            let mut acc = DMatrix::zeros(n, n);
            for i in 0..3 {
                acc += &jet.j[i] * &jet.dj[i][k] * EPS[i];
            }
            acc * 0.25
        })
        .collect();
    Tensor3::from_fn(n, |a, k, b| mats[k][(a, b)])
}

/// Obata connection from a closed formula: `Γ⁰ − π(T(Γ⁰))`.
///
/// `Γ⁰` preserves the basis, and `T(Γ⁰) − T^H = δπ(T(Γ⁰))` with `π`
/// centralizer-valued, so the correction keeps the basis parallel and lands
/// on torsion `T^H`.
pub fn obata_closed_form(jet: &StructureJet) -> Tensor3 {
    let g0 = averaged_connection(jet);
    let t0 = algebra::delta(&g0);
    &g0 - &algebra::pi_section(&jet.j, &t0)
}

/// The connection with `∇J_i = 0` and torsion `T^H`, by the linear solver.
pub fn obata(h: &PqStructure, p: &Point) -> Result<ConnectionJet> {
    let jet = h.jet(p)?;
    let target = th_from_jet(&jet);
    solve::solve_at(jet, p.clone(), &target, &SolveOptions::default())
}

/// The Obata connection without the linear solve.
pub fn obata_fast(h: &PqStructure, p: &Point) -> Result<ConnectionJet> {
    let jet = h.jet(p)?;
    Ok(ConnectionJet {
        point: p.clone(),
        gamma: obata_closed_form(&jet),
        structure: jet,
        stats: None,
    })
}

/// `Obata − Σ τ_i ⊗ J_i + S^α`: preserves the bundle, torsion `T^𝒫`.
pub fn minimal(h: &PqStructure, p: &Point, alpha: &OneForm) -> Result<ConnectionJet> {
    minimal_from(&obata(h, p)?, alpha)
}

/// As [`minimal`], starting from the closed-form Obata connection.
pub fn minimal_fast(h: &PqStructure, p: &Point, alpha: &OneForm) -> Result<ConnectionJet> {
    minimal_from(&obata_fast(h, p)?, alpha)
}

/// The minimal connection for `α` from an already computed Obata jet.
pub fn minimal_from(base: &ConnectionJet, alpha: &OneForm) -> Result<ConnectionJet> {
    let js = &base.structure.j;
    let th = base.torsion();
    let tau = algebra::tau_of_projected(js, &th);
    let a = alpha.eval(&base.point.coords)?;
    let shift = &algebra::s_alpha(js, &a) - &algebra::structure_valued(js, &tau);
    let stats = base.stats.clone();
    let mut out = base.shifted(&shift);
    out.stats = stats;
    Ok(out)
}

/// `ω_k` with `∇_{∂k} J_i = Σ_j ω_k[j][i] J_j`.
#[derive(Clone, Debug, Serialize)]
pub struct FiberConnectionForm {
    pub omega: Vec<[[f64; 3]; 3]>,
    /// Largest distance of a `∇J_i` from the span.
    pub span_residual: f64,
}

impl FiberConnectionForm {
    pub fn matrix(&self, k: usize) -> Matrix3<f64> {
        Matrix3::from_fn(|r, c| self.omega[k][r][c])
    }

    /// `ω_X = Σ X^k ω_k`.
    pub fn along(&self, x: &DVector<f64>) -> Matrix3<f64> {
        let mut acc = Matrix3::zeros();
        for k in 0..self.omega.len() {
            acc += self.matrix(k) * x[k];
        }
        acc
    }

    /// Largest entry of `ω_kᵀ g + g ω_k` with `g = diag(−1, 1, 1)`.
    pub fn skew_residual(&self) -> f64 {
        let g = Matrix3::from_diagonal(&nalgebra::Vector3::new(EPS[0], EPS[1], EPS[2]));
        (0..self.omega.len())
            .map(|k| {
                let w = self.matrix(k);
                (w.transpose() * g + g * w).amax()
            })
            .fold(0.0, f64::max)
    }
}

/// Tolerance on the span residual in [`fiber_form`].
pub const SPAN_TOL: f64 = 1e-9;

pub fn fiber_form(c: &ConnectionJet) -> Result<FiberConnectionForm> {
    let n = c.n();
    let mut omega = Vec::with_capacity(n);
    let mut worst = 0.0f64;
    for k in 0..n {
        let mut w = [[0.0; 3]; 3];
        for i in 0..3 {
            let d = c.covariant_derivative(i, k);
            let (coef, rem) = algebra::project_onto_span(&d, &c.structure.j);
            worst = worst.max(rem.amax() / (1.0 + d.amax()));
            for j in 0..3 {
                w[j][i] = coef[j];
            }
        }
        omega.push(w);
    }
    if worst > SPAN_TOL {
        return Err(Error::NotPreserving { residual: worst });
    }
    Ok(FiberConnectionForm {
        omega,
        span_residual: worst,
    })
}
