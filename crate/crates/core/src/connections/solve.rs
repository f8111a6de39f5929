//! Dense least-squares solve for connections with prescribed torsion.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::ConnectionJet;
use crate::error::{Error, Result};
use crate::expr::Point;
use crate::geometry::{PqStructure, StructureJet};
use crate::tensorcalc::{Tensor3, VectorTwoForm};

/// What the solved connection must keep parallel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Preservation {
    /// Each `J_i`: `[Γ_k, J_i] = −∂_k J_i`.
    Basis,
    /// Only their span: `[Γ_k, J_i] + ∂_k J_i = Σ_j ω_k[j][i] J_j`, with
    /// the `ω_k` as extra unknowns.
    Bundle,
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub mode: Preservation,
    /// Permutes the equations before solving.
    pub shuffle_seed: Option<u64>,
    /// Relative residual above which the target is declared unreachable.
    pub unreachable_tol: f64,
    /// Relative cutoff for the numerical rank.
    pub rank_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            mode: Preservation::Basis,
            shuffle_seed: None,
            unreachable_tol: 1e-7,
            rank_tol: 1e-10,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveStats {
    pub mode: Preservation,
    pub equations: usize,
    pub unknowns: usize,
    pub rank: usize,
    pub expected_kernel: usize,
    pub relative_residual: f64,
}

/// Connection preserving each `J_i` at `p` with torsion `target(p)`.
pub fn solve_preserving(h: &PqStructure, p: &Point, target: &VectorTwoForm) -> Result<ConnectionJet> {
    solve_preserving_with(h, p, target, &SolveOptions::default())
}

pub fn solve_preserving_with(
    h: &PqStructure,
    p: &Point,
    target: &VectorTwoForm,
    opts: &SolveOptions,
) -> Result<ConnectionJet> {
    let jet = h.jet(p)?;
    let t = target.at(p)?;
    if t.n() != jet.n() {
        return Err(Error::Dimension {
            expected: jet.n(),
            found: t.n(),
        });
    }
    solve_at(jet, p.clone(), &t, opts)
}

fn unknown(n: usize, a: usize, k: usize, b: usize) -> usize {
    (a * n + k) * n + b
}

fn assemble(jet: &StructureJet, target: &Tensor3, mode: Preservation) -> (DMatrix<f64>, DVector<f64>) {
    let n = jet.n();
    let n3 = n * n * n;
    let extra = if mode == Preservation::Bundle { 9 * n } else { 0 };
    let rows = 3 * n3 + n * n * (n - 1) / 2;
    let mut a = DMatrix::zeros(rows, n3 + extra);
    let mut rhs = DVector::zeros(rows);
    let mut r = 0;
    for i in 0..3 {
        let j = &jet.j[i];
        for k in 0..n {
            for p in 0..n {
                for q in 0..n {
                    // ([Γ_k, J])[p][q] = Σ_c Γ_k[p][c] J[c][q] − J[p][c] Γ_k[c][q]
                    for c in 0..n {
                        a[(r, unknown(n, p, k, c))] += j[(c, q)];
                        a[(r, unknown(n, c, k, q))] -= j[(p, c)];
                    }
                    if mode == Preservation::Bundle {
                        for s in 0..3 {
                            a[(r, n3 + k * 9 + s * 3 + i)] = -jet.j[s][(p, q)];
                        }
                    }
                    rhs[r] = -jet.dj[i][k][(p, q)];
                    r += 1;
                }
            }
        }
    }
    for x in 0..n {
        for y in (x + 1)..n {
            for c in 0..n {
                a[(r, unknown(n, c, x, y))] += 1.0;
                a[(r, unknown(n, c, y, x))] -= 1.0;
                rhs[r] = target.get(c, x, y);
                r += 1;
            }
        }
    }
    (a, rhs)
}

pub(crate) fn solve_at(jet: StructureJet, p: Point, target: &Tensor3, opts: &SolveOptions) -> Result<ConnectionJet> {
    let n = jet.n();
    let (mut a, mut rhs) = assemble(&jet, target, opts.mode);
    if let Some(seed) = opts.shuffle_seed {
        let mut order: Vec<usize> = (0..a.nrows()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        a = a.select_rows(order.iter());
        rhs = rhs.select_rows(order.iter());
    }
    let unknowns = a.ncols();
    let (x, rank, expected_kernel) = match opts.mode {
        Preservation::Basis => {
            let qr = a.clone().qr();
            let r = qr.r();
            let diag_max = r.diagonal().amax();
            let rank = r
                .diagonal()
                .iter()
                .filter(|d| d.abs() > opts.rank_tol * diag_max)
                .count();
            if rank < unknowns {
                return Err(Error::RankDeficient {
                    rank,
                    expected: unknowns,
                });
            }
            let qtb = qr.q().transpose() * &rhs;
            let x = r
                .solve_upper_triangular(&qtb)
                .ok_or(Error::RankDeficient { rank, expected: unknowns })?;
            (x, rank, 0)
        }
        Preservation::Bundle => {
            let (x, rank) = crate::linalg::lstsq(&a, &rhs, opts.rank_tol);
            let kernel = n;
            if rank + kernel < unknowns {
                return Err(Error::RankDeficient {
                    rank,
                    expected: unknowns - kernel,
                });
            }
            (x, rank, kernel)
        }
    };
    let resid = (&a * &x - &rhs).norm();
    let scale = rhs.norm();
    let relative = if scale > 0.0 { resid / scale } else { resid };
    if relative > opts.unreachable_tol {
        return Err(Error::Unreachable { residual: relative });
    }
    let gamma = Tensor3::from_vec(n, x.rows(0, n * n * n).iter().copied().collect());
    Ok(ConnectionJet {
        point: p,
        gamma,
        structure: jet,
        stats: Some(SolveStats {
            mode: opts.mode,
            equations: a.nrows(),
            unknowns,
            rank,
            expected_kernel,
            relative_residual: relative,
        }),
    })
}
