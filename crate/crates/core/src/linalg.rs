//! Rank-revealing helpers shared by the recursion, the system bases and the
//! sampled oracle. Everything here works on `DMatrix<f64>` and tolerates empty
//! (zero-row or zero-column) inputs.

use nalgebra::{DMatrix, DVector};

/// Relative singular-value threshold used when compressing spans and
/// descriptors inside the recursion.
pub const PRUNE_RTOL: f64 = 1e-10;

/// Absolute floor below which a singular value counts as zero regardless of
/// the largest one. Inputs to the recursion are O(1) after orthonormalisation.
pub const ABS_FLOOR: f64 = 1e-12;

struct Svd {
    u: DMatrix<f64>,
    s: Vec<f64>,
    v: DMatrix<f64>,
}

/// Entries far below double precision relative to the largest one cannot
/// move any singular value, but they can stall the iteration, so they are
/// flushed to zero.
fn to_faer(m: &DMatrix<f64>) -> faer::Mat<f64> {
    let floor = m.amax() * f64::EPSILON * f64::EPSILON;
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| {
        let x = m[(i, j)];
        if x.abs() < floor {
            0.0
        } else {
            x
        }
    })
}

/// Full SVD with singular values in descending order. nalgebra's bidiagonal
/// iteration occasionally stalls on small rank-deficient stacks and returns
/// inaccurate triplets, so the decomposition is delegated to `faer`.
fn svd(m: &DMatrix<f64>) -> Svd {
    let d = to_faer(m).svd().expect("SVD failed to converge");
    let (u, v) = (d.U(), d.V());
    Svd {
        u: DMatrix::from_fn(u.nrows(), u.ncols(), |i, j| u[(i, j)]),
        s: d.S().column_vector().iter().copied().collect(),
        v: DMatrix::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)]),
    }
}

/// Singular values of `m` in descending order. Empty for empty matrices.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    to_faer(m)
        .singular_values()
        .expect("SVD failed to converge")
}

fn cutoff(sigma_max: f64, rtol: f64) -> f64 {
    (sigma_max * rtol).max(ABS_FLOOR)
}

/// Numerical rank with threshold `rtol * sigma_max` (and the absolute floor).
pub fn rank(m: &DMatrix<f64>, rtol: f64) -> usize {
    let s = singular_values(m);
    match s.first() {
        None => 0,
        Some(&smax) => {
            let tol = cutoff(smax, rtol);
            s.iter().filter(|&&x| x > tol).count()
        }
    }
}

/// Orthonormal basis (as columns) for the column space of `m`.
pub fn orth_columns(m: &DMatrix<f64>, rtol: f64) -> DMatrix<f64> {
    let rows = m.nrows();
    if rows == 0 || m.ncols() == 0 {
        return DMatrix::zeros(rows, 0);
    }
    let d = svd(m);
    let tol = cutoff(d.s[0], rtol);
    let r = d.s.iter().filter(|&&x| x > tol).count();
    d.u.columns(0, r).into_owned()
}

/// Orthonormal basis (as rows) for the row space of `m`.
pub fn orth_rows(m: &DMatrix<f64>, rtol: f64) -> DMatrix<f64> {
    orth_columns(&m.transpose(), rtol).transpose()
}

/// Orthonormal basis (as columns) for the null space of `m`.
pub fn null_space(m: &DMatrix<f64>, rtol: f64) -> DMatrix<f64> {
    let cols = m.ncols();
    if cols == 0 {
        return DMatrix::zeros(0, 0);
    }
    if m.nrows() == 0 {
        return DMatrix::identity(cols, cols);
    }
    let d = svd(m);
    let tol = cutoff(d.s[0], rtol);
    let r = d.s.iter().filter(|&&x| x > tol).count();
    d.v.columns(r, cols - r).into_owned()
}

/// Vertically stack matrices that share a column count.
pub fn vstack(blocks: &[&DMatrix<f64>], ncols: usize) -> DMatrix<f64> {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = DMatrix::zeros(rows, ncols);
    let mut r = 0;
    for b in blocks {
        debug_assert_eq!(b.ncols(), ncols);
        out.view_mut((r, 0), (b.nrows(), ncols)).copy_from(*b);
        r += b.nrows();
    }
    out
}

/// Horizontally stack matrices that share a row count.
pub fn hstack(blocks: &[&DMatrix<f64>], nrows: usize) -> DMatrix<f64> {
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(nrows, cols);
    let mut c = 0;
    for b in blocks {
        debug_assert_eq!(b.nrows(), nrows);
        out.view_mut((0, c), (nrows, b.ncols())).copy_from(*b);
        c += b.ncols();
    }
    out
}

/// Reduced row echelon form with partial pivoting in column order.
///
/// Returns the non-zero rows and the pivot column of each row. Entries with
/// magnitude below `tol` (relative to the largest entry of `m`) are treated
/// as zero and flushed.
pub fn rref(m: &DMatrix<f64>, tol: f64) -> (DMatrix<f64>, Vec<usize>) {
    let mut a = m.clone();
    let (rows, cols) = a.shape();
    let scale = a.amax().max(f64::MIN_POSITIVE);
    let eps = tol * scale;
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let (best, val) = (r..rows)
            .map(|i| (i, a[(i, c)].abs()))
            .fold((r, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if val <= eps {
            for i in r..rows {
                a[(i, c)] = 0.0;
            }
            continue;
        }
        a.swap_rows(r, best);
        let p = a[(r, c)];
        for j in 0..cols {
            a[(r, j)] /= p;
        }
        for i in 0..rows {
            if i != r {
                let f = a[(i, c)];
                if f != 0.0 {
                    for j in 0..cols {
                        a[(i, j)] -= f * a[(r, j)];
                    }
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    let mut out = a.rows(0, r).into_owned();
    out.iter_mut().for_each(|x| {
        if x.abs() <= eps {
            *x = 0.0
        }
    });
    (out, pivots)
}

/// Minimum-norm least-squares solution `x = pinv(a) b` with relative
/// singular-value cutoff `rtol`. Returns the solution and the rank used.
pub fn pinv_solve(a: &DMatrix<f64>, b: &DVector<f64>, rtol: f64) -> (DVector<f64>, usize) {
    let n = a.ncols();
    if a.nrows() == 0 || n == 0 {
        return (DVector::zeros(n), 0);
    }
    let d = svd(a);
    let tol = d.s[0] * rtol;
    let mut x = DVector::zeros(n);
    let mut used = 0;
    for (k, &s) in d.s.iter().enumerate() {
        if s > tol && s > 0.0 {
            used += 1;
            x += d.v.column(k) * (d.u.column(k).dot(b) / s);
        }
    }
    (x, used)
}

/// Largest principal angle between the ranges of two orthonormal bases of
/// equal width, computed as `asin ‖(1 − P₁) B₂‖₂` for accuracy at small
/// angles.
pub fn max_principal_angle(b1: &DMatrix<f64>, b2: &DMatrix<f64>) -> f64 {
    if b1.ncols() == 0 && b2.ncols() == 0 {
        return 0.0;
    }
    let resid = b2 - b1 * (b1.transpose() * b2);
    let s = singular_values(&resid);
    s.first().copied().unwrap_or(0.0).min(1.0).asin()
}

/// Largest singular value and its right singular vector; `None` for an
/// empty matrix.
pub fn top_right_singular(m: &DMatrix<f64>) -> Option<(f64, DVector<f64>)> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return None;
    }
    let d = svd(m);
    Some((d.s[0], d.v.column(0).into_owned()))
}
