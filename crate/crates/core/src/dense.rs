//! Rank-revealing factorizations with an explicit tolerance contract.
//!
//! The singular value decomposition here is one-sided (Hestenes) Jacobi.
//! It is slower than Golub-Kahan for large inputs but computes small
//! singular values to high relative accuracy, which is what every rank and
//! bijectivity verdict upstream depends on.

use crate::error::{Error, Result};
use crate::matrix::Matrix;

const MAX_SWEEPS: usize = 80;

/// Thin singular value decomposition `M = U diag(sigma) V^T`.
#[derive(Debug, Clone)]
pub struct Svd {
    /// `rows x k` left singular vectors, `k = min(rows, cols)`. Columns for
    /// zero singular values are zero.
    pub u: Matrix,
    /// Singular values in non-increasing order, length `min(rows, cols)`.
    pub sigma: Vec<f64>,
    /// Full `cols x cols` orthogonal matrix of right singular vectors.
    pub v: Matrix,
}

/// Numerical rank together with orthonormal bases of range and null space.
#[derive(Debug, Clone)]
pub struct RankFactorization {
    pub rank: usize,
    /// `rows x rank`, orthonormal columns spanning the column space.
    pub range_basis: Matrix,
    /// `cols x (cols - rank)`, orthonormal columns spanning the null space.
    pub null_basis: Matrix,
    /// Absolute cutoff: singular values strictly above it are counted.
    pub tol_used: f64,
    pub singular_values: Vec<f64>,
}

impl RankFactorization {
    /// Singular value closest to the cutoff on a logarithmic scale,
    /// normalized by the largest singular value. Zero when every singular
    /// value vanishes; one when there are none.
    pub fn cutoff_margin(&self) -> f64 {
        relative_margin(&self.singular_values, self.tol_used)
    }
}

/// The singular value nearest (in log ratio) to `cutoff`, divided by the
/// largest singular value.
pub(crate) fn relative_margin(sigma: &[f64], cutoff: f64) -> f64 {
    let smax = sigma.first().copied().unwrap_or(0.0);
    if sigma.is_empty() {
        return 1.0;
    }
    if smax == 0.0 {
        return 0.0;
    }
    let rel_cut = (cutoff / smax).max(f64::MIN_POSITIVE);
    sigma
        .iter()
        .map(|s| s / smax)
        .min_by(|a, b| {
            let da = log_gap(*a, rel_cut);
            let db = log_gap(*b, rel_cut);
            da.total_cmp(&db)
        })
        .unwrap_or(1.0)
}

fn log_gap(x: f64, cut: f64) -> f64 {
    if x <= 0.0 {
        f64::INFINITY
    } else {
        (x / cut).ln().abs()
    }
}

/// One-sided Jacobi on the columns of `a` (requires rows >= cols).
/// Returns the rotated columns and, when requested, the accumulated `V`.
fn jacobi_columns(a: &Matrix, want_v: bool) -> (Vec<Vec<f64>>, Option<Matrix>) {
    let n = a.cols();
    let m = a.rows();
    debug_assert!(m >= n);
    let mut cols = a.columns();
    let mut v = want_v.then(|| Matrix::identity(n));
    let eps = f64::EPSILON;

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let (alpha, beta, gamma) = {
                    let (cp, cq) = (&cols[p], &cols[q]);
                    let mut alpha = 0.0;
                    let mut beta = 0.0;
                    let mut gamma = 0.0;
                    for k in 0..m {
                        alpha += cp[k] * cp[k];
                        beta += cq[k] * cq[k];
                        gamma += cp[k] * cq[k];
                    }
                    (alpha, beta, gamma)
                };
                if gamma == 0.0 || alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                if gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (left, right) = cols.split_at_mut(q);
                let (cp, cq) = (&mut left[p], &mut right[0]);
                for k in 0..m {
                    let x = cp[k];
                    let y = cq[k];
                    cp[k] = c * x - s * y;
                    cq[k] = s * x + c * y;
                }
                if let Some(v) = v.as_mut() {
                    for k in 0..n {
                        let x = v[(k, p)];
                        let y = v[(k, q)];
                        v[(k, p)] = c * x - s * y;
                        v[(k, q)] = s * x + c * y;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    (cols, v)
}

/// Full singular value decomposition (thin `U`, full `V`).
pub fn svd(m: &Matrix) -> Svd {
    let (rows, cols) = m.shape();
    let k = rows.min(cols);
    // Wide inputs are padded with zero rows; rotations never mix a zero row
    // into a nonzero one, so the padding stays exactly zero.
    let work = if rows >= cols {
        m.clone()
    } else {
        let mut p = Matrix::zeros(cols, cols);
        for i in 0..rows {
            for j in 0..cols {
                p[(i, j)] = m[(i, j)];
            }
        }
        p
    };
    let (rotated, v) = jacobi_columns(&work, true);
    let v = v.expect("requested V");
    let norms: Vec<f64> = rotated.iter().map(|c| crate::matrix::norm(c)).collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]).then(a.cmp(&b)));

    let mut u = Matrix::zeros(rows, k);
    let mut sigma = Vec::with_capacity(k);
    for (jj, &j) in order.iter().take(k).enumerate() {
        let s = norms[j];
        sigma.push(s);
        if s > 0.0 {
            for i in 0..rows {
                u[(i, jj)] = rotated[j][i] / s;
            }
        }
    }
    let v_sorted = v.select_columns(&order);
    Svd {
        u,
        sigma,
        v: v_sorted,
    }
}

/// Singular values only, non-increasing, length `min(rows, cols)`.
pub fn singular_values(m: &Matrix) -> Vec<f64> {
    if m.rows() == 0 || m.cols() == 0 {
        return Vec::new();
    }
    let work = if m.rows() >= m.cols() {
        m.clone()
    } else {
        m.transpose()
    };
    let (rotated, _) = jacobi_columns(&work, false);
    let mut s: Vec<f64> = rotated.iter().map(|c| crate::matrix::norm(c)).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Default absolute rank cutoff `sigma_max * max(rows, cols) * 2^-52`.
pub fn default_rank_tol(sigma_max: f64, rows: usize, cols: usize) -> f64 {
    sigma_max * rows.max(cols) as f64 * f64::EPSILON
}

/// Numerical rank with orthonormal range and null-space bases.
///
/// `tol` is an absolute cutoff; singular values strictly above it count
/// toward the rank. When absent the default cutoff is used.
pub fn rank_factorization(m: &Matrix, tol: Option<f64>) -> Result<RankFactorization> {
    if let Some(t) = tol {
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::Input(format!("rank tolerance must be positive, got {t}")));
        }
    }
    let (rows, cols) = m.shape();
    let dec = svd(m);
    let smax = dec.sigma.first().copied().unwrap_or(0.0);
    let tol_used = tol
        .unwrap_or_else(|| default_rank_tol(smax, rows, cols))
        .max(f64::MIN_POSITIVE);
    let rank = dec.sigma.iter().filter(|&&s| s > tol_used).count();
    let range_basis = dec.u.select_columns(&(0..rank).collect::<Vec<_>>());
    let null_basis = dec.v.select_columns(&(rank..cols).collect::<Vec<_>>());
    Ok(RankFactorization {
        rank,
        range_basis,
        null_basis,
        tol_used,
        singular_values: dec.sigma,
    })
}

/// Largest and smallest singular values. The smallest is taken over the
/// `min(rows, cols)` singular values; an empty matrix yields `(0, 0)`.
pub fn singular_extremes(m: &Matrix) -> (f64, f64) {
    let s = singular_values(m);
    match (s.first(), s.last()) {
        (Some(a), Some(b)) => (*a, *b),
        _ => (0.0, 0.0),
    }
}

/// Relative invertibility threshold applied by [`solve_square`].
pub const INVERTIBILITY_RATIO: f64 = 1e-10;

/// Solves `A X = B` for square `A`.
///
/// Fails with [`Error::SingularMatrix`] when
/// `sigma_min(A) <= 1e-10 * sigma_max(A)`.
pub fn solve_square(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    solve_square_with(a, b, INVERTIBILITY_RATIO)
}

/// [`solve_square`] with a caller-chosen relative invertibility threshold.
pub fn solve_square_with(a: &Matrix, b: &Matrix, ratio: f64) -> Result<Matrix> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "solve_square needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if a.rows() != b.rows() {
        return Err(Error::Dimension(format!(
            "right-hand side has {} rows, expected {}",
            b.rows(),
            a.rows()
        )));
    }
    let n = a.rows();
    if n == 0 {
        return Ok(Matrix::zeros(0, b.cols()));
    }
    let (smax, smin) = singular_extremes(a);
    let threshold = ratio * smax;
    if !(smin > threshold) {
        return Err(Error::SingularMatrix {
            sigma_min: smin,
            threshold,
        });
    }
    let lu = Lu::factor(a);
    let mut x = lu.solve(b);
    // one step of iterative refinement
    let r = b - &(a * &x);
    let dx = lu.solve(&r);
    x = &x + &dx;
    Ok(x)
}

/// Inverse of a square matrix, subject to the same threshold as
/// [`solve_square`].
pub fn inverse(a: &Matrix) -> Result<Matrix> {
    solve_square(a, &Matrix::identity(a.rows()))
}

/// LU factorization with partial pivoting, `P A = L U`.
struct Lu {
    lu: Matrix,
    perm: Vec<usize>,
}

impl Lu {
    fn factor(a: &Matrix) -> Self {
        let n = a.rows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| lu[(i, k)].abs().total_cmp(&lu[(j, k)].abs()))
                .unwrap_or(k);
            if p != k {
                perm.swap(p, k);
                for j in 0..n {
                    let t = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = t;
                }
            }
            let pivot = lu[(k, k)];
            if pivot == 0.0 {
                continue;
            }
            for i in (k + 1)..n {
                let f = lu[(i, k)] / pivot;
                lu[(i, k)] = f;
                for j in (k + 1)..n {
                    let u = lu[(k, j)];
                    lu[(i, j)] -= f * u;
                }
            }
        }
        Self { lu, perm }
    }

    fn solve(&self, b: &Matrix) -> Matrix {
        let n = self.lu.rows();
        let mut x = Matrix::zeros(n, b.cols());
        for c in 0..b.cols() {
            let mut y: Vec<f64> = self.perm.iter().map(|&p| b[(p, c)]).collect();
            for i in 0..n {
                let mut s = y[i];
                for j in 0..i {
                    s -= self.lu[(i, j)] * y[j];
                }
                y[i] = s;
            }
            for i in (0..n).rev() {
                let mut s = y[i];
                for j in (i + 1)..n {
                    s -= self.lu[(i, j)] * y[j];
                }
                y[i] = s / self.lu[(i, i)];
            }
            for i in 0..n {
                x[(i, c)] = y[i];
            }
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn rank_of_diagonal_projector() {
        let f = rank_factorization(&Matrix::from_diag(&[1.0, 0.0]), None).unwrap();
        assert_eq!(f.rank, 1);
        assert!(close(f.range_basis[(0, 0)].abs(), 1.0, 1e-15));
        assert!(close(f.null_basis[(1, 0)].abs(), 1.0, 1e-15));
    }

    #[test]
    fn rank_of_zero_matrix() {
        let f = rank_factorization(&Matrix::zeros(3, 3), None).unwrap();
        assert_eq!(f.rank, 0);
        assert_eq!(f.range_basis.shape(), (3, 0));
        assert_eq!(f.null_basis, Matrix::identity(3));
        assert!(f.tol_used > 0.0);
    }

    #[test]
    fn rank_rejects_bad_tolerance() {
        assert!(rank_factorization(&Matrix::identity(2), Some(0.0)).is_err());
        assert!(rank_factorization(&Matrix::identity(2), Some(-1.0)).is_err());
    }

    #[test]
    fn wide_matrix_null_space() {
        let m = Matrix::from_rows(&[&[1.0, 1.0, 0.0]]);
        let f = rank_factorization(&m, None).unwrap();
        assert_eq!(f.rank, 1);
        assert_eq!(f.null_basis.shape(), (3, 2));
        let r = &m * &f.null_basis;
        assert!(r.max_abs() < 1e-15);
    }

    #[test]
    fn extremes_of_diagonal_and_identity() {
        let (a, b) = singular_extremes(&Matrix::from_diag(&[3.0, -4.0]));
        assert_eq!((a, b), (4.0, 3.0));
        assert_eq!(singular_extremes(&Matrix::identity(5)), (1.0, 1.0));
    }

    #[test]
    fn solve_examples() {
        let b = Matrix::from_rows(&[&[1.0, -2.0], &[3.5, 0.25]]);
        assert_eq!(solve_square(&Matrix::identity(2), &b).unwrap(), b);
        let x = solve_square(&Matrix::from_diag(&[2.0, 4.0]), &Matrix::identity(2)).unwrap();
        assert_eq!(x, Matrix::from_diag(&[0.5, 0.25]));
        let x = solve_square(
            &Matrix::from_rows(&[&[1.0, 1.0], &[0.0, 1.0]]),
            &Matrix::from_rows(&[&[1.0], &[0.0]]),
        )
        .unwrap();
        assert_eq!(x, Matrix::from_rows(&[&[1.0], &[0.0]]));
    }

    #[test]
    fn solve_reports_singularity() {
        let err = solve_square(&Matrix::from_diag(&[1.0, 0.0]), &Matrix::identity(2)).unwrap_err();
        match err {
            Error::SingularMatrix { sigma_min, .. } => assert_eq!(sigma_min, 0.0),
            e => panic!("unexpected {e:?}"),
        }
        assert!(solve_square(&Matrix::zeros(2, 3), &Matrix::zeros(2, 1)).is_err());
    }

    #[test]
    fn margin_picks_value_nearest_cutoff() {
        let m = relative_margin(&[2.0, 1e-3, 1e-9, 0.0], 1e-10);
        assert!(close(m, 5e-10, 1e-24));
        assert_eq!(relative_margin(&[0.0, 0.0], 1e-10), 0.0);
        assert_eq!(relative_margin(&[], 1e-10), 1.0);
    }
}
