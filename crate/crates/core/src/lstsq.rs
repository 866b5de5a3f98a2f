//! Dense least squares via Householder QR, for tall design matrices with a
//! handful of columns.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Columns whose `|R_kk|` falls below this fraction of the column norm are
/// treated as linearly dependent.
const RANK_TOL: f64 = 1e-10;

/// Minimizes `‖A x − b‖₂` for row-major `rows` of length `K`.
pub(crate) fn solve<const K: usize>(rows: &[[f64; K]], rhs: &[f64]) -> Result<[f64; K]> {
    let n = rows.len();
    if n < K || rhs.len() != n {
        return Err(Error::RankDeficient);
    }
    // column-major copy so each reflector touches contiguous memory
    let mut cols: Vec<Vec<f64>> = (0..K).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
    let mut b = rhs.to_vec();
    let col_norms: Vec<f64> = cols.iter().map(|c| norm(c)).collect();
    let mut r = [[0.0; K]; K];

    for k in 0..K {
        let alpha = norm(&cols[k][k..]);
        if alpha <= RANK_TOL * col_norms[k].max(f64::MIN_POSITIVE) {
            return Err(Error::RankDeficient);
        }
        let alpha = if cols[k][k] > 0.0 { -alpha } else { alpha };
        let mut v: Vec<f64> = cols[k][k..].to_vec();
        v[0] -= alpha;
        let vv: f64 = v.iter().map(|x| x * x).sum();
        for col in cols.iter_mut().skip(k) {
            reflect(&v, vv, &mut col[k..]);
        }
        reflect(&v, vv, &mut b[k..]);
        for (j, col) in cols.iter().enumerate().skip(k) {
            r[k][j] = col[k];
        }
    }

    let mut x = [0.0; K];
    for k in (0..K).rev() {
        let s: f64 = (k + 1..K).map(|j| r[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / r[k][k];
    }
    Ok(x)
}

fn reflect(v: &[f64], vv: f64, target: &mut [f64]) {
    let dot: f64 = v.iter().zip(target.iter()).map(|(a, b)| a * b).sum();
    let f = 2.0 * dot / vv;
    for (t, vi) in target.iter_mut().zip(v) {
        *t -= f * vi;
    }
}

fn norm(v: &[f64]) -> f64 {
    libm::sqrt(v.iter().map(|x| x * x).sum())
}
