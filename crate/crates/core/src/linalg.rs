//! Rank-revealing least squares on top of column-pivoted QR.
//!
//! nalgebra's SVD loses accuracy on some exactly rank-deficient inputs (an
//! 8×8 matrix `Id + J` with four exact zero singular values reconstructs
//! with error 3e-3), so everything rank-sensitive goes through pivoted QR,
//! which stays at roundoff on the same inputs.

use nalgebra::{DMatrix, DVector};

/// Orthonormal basis of the column space and its rank; columns count as
/// independent while `|R_ii| > rel_tol · |R_00|`.
pub(crate) fn span_basis(a: &DMatrix<f64>, rel_tol: f64) -> (DMatrix<f64>, usize) {
    let qr = a.clone().col_piv_qr();
    let r = qr.r();
    let rank = rank_of(&r, rel_tol);
    (qr.q().columns(0, rank).into_owned(), rank)
}

fn rank_of(r: &DMatrix<f64>, rel_tol: f64) -> usize {
    let k = r.nrows().min(r.ncols());
    if k == 0 || r[(0, 0)] == 0.0 {
        return 0;
    }
    let top = r[(0, 0)].abs();
    (0..k).take_while(|&i| r[(i, i)].abs() > rel_tol * top).count()
}

/// Minimum-norm least-squares solution of `a x ≈ b` and the numerical rank.
pub(crate) fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>, rel_tol: f64) -> (DVector<f64>, usize) {
    let cols = a.ncols();
    let qr = a.clone().col_piv_qr();
    let r = qr.r();
    let rank = rank_of(&r, rel_tol);
    if rank == 0 {
        return (DVector::zeros(cols), 0);
    }
    let qtb = qr.q().columns(0, rank).transpose() * b;
    let r11 = r.view((0, 0), (rank, rank)).into_owned();
    let z = r11
        .solve_upper_triangular(&qtb)
        .expect("pivoted diagonal above the rank cutoff");
    // a·P = q·r, so the basic solution is P·[z; 0]
    let mut x = DVector::zeros(cols);
    x.rows_mut(0, rank).copy_from(&z);
    qr.p().inv_permute_rows(&mut x);
    if rank < cols {
        // drop the null-space component: project onto the row space
        let (rows, _) = span_basis(&a.transpose(), rel_tol);
        let rows = rows.columns(0, rank.min(rows.ncols())).into_owned();
        x = &rows * (rows.transpose() * &x);
    }
    (x, rank)
}
