//! Factorization helpers built on Householder QR.

use nalgebra::DMatrix;

/// Orthonormal basis of the column space of `a` by column-pivoted QR.
///
/// Pivots below `rel_tol · |R₀₀|` count as dependent columns.
pub fn range_basis(a: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let (m, n) = a.shape();
    let k = m.min(n);
    let qr = a.clone().col_piv_qr();
    let r = qr.r();
    let top = if k > 0 { r[(0, 0)].abs() } else { 0.0 };
    let rank = (0..k).take_while(|&i| top > 0.0 && r[(i, i)].abs() > rel_tol * top).count();
    qr.q().columns(0, rank).into_owned()
}

/// Number of pivots of `r` above `rel_tol` times the largest one.
pub fn triangular_rank(r: &DMatrix<f64>, rel_tol: f64) -> usize {
    let k = r.nrows().min(r.ncols());
    let top = (0..k).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    (0..k).filter(|&i| top > 0.0 && r[(i, i)].abs() > rel_tol * top).count()
}
