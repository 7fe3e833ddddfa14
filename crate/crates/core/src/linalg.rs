//! Small dense helpers on `f64` slices, an SPD solver and the pseudoinverse.

use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// Solves `a x = b` for symmetric positive-definite `a` with a
/// square-root-free `L D L^T` factorization. Returns `None` when a pivot is
/// not strictly positive.
pub fn solve_spd(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = a.nrows();
    debug_assert_eq!(a.ncols(), n);
    debug_assert_eq!(b.nrows(), n);
    let mut l = DMatrix::<f64>::identity(n, n);
    let mut d = alloc::vec![0.0; n];
    for j in 0..n {
        let mut dj = a[(j, j)];
        for k in 0..j {
            dj -= l[(j, k)] * l[(j, k)] * d[k];
        }
        if dj.is_nan() || dj <= 0.0 {
            return None;
        }
        d[j] = dj;
        for i in j + 1..n {
            let mut v = a[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)] * d[k];
            }
            l[(i, j)] = v / dj;
        }
    }
    let mut x = b.clone();
    for c in 0..x.ncols() {
        for i in 0..n {
            let mut v = x[(i, c)];
            for k in 0..i {
                v -= l[(i, k)] * x[(k, c)];
            }
            x[(i, c)] = v;
        }
        for i in 0..n {
            x[(i, c)] /= d[i];
        }
        for i in (0..n).rev() {
            let mut v = x[(i, c)];
            for k in i + 1..n {
                v -= l[(k, i)] * x[(k, c)];
            }
            x[(i, c)] = v;
        }
    }
    Some(x)
}

/// Default rank-detection tolerance relative to the largest singular value.
pub fn default_rel_tol(rows: usize, cols: usize) -> f64 {
    rows.max(cols).max(1) as f64 * f64::EPSILON
}

/// Thin SVD `m = U diag(sigma) V^T` by one-sided Jacobi rotations, for
/// `rows >= cols`. Returns `(U, sigma, V)` with `U` of shape `rows x cols`;
/// columns of `U` whose `sigma` is zero are left unnormalized.
///
/// nalgebra's bidiagonal SVD can return factors that do not reconstruct
/// rank-deficient inputs, so the pseudoinverse uses this instead.
pub fn jacobi_svd(m: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>, DMatrix<f64>) {
    let (rows, cols) = m.shape();
    debug_assert!(rows >= cols);
    let mut u = m.clone();
    let mut v = DMatrix::<f64>::identity(cols, cols);
    const MAX_SWEEPS: usize = 60;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for i in 0..rows {
                    let (a, b) = (u[(i, p)], u[(i, q)]);
                    alpha += a * a;
                    beta += b * b;
                    gamma += a * b;
                }
                if gamma == 0.0 || libm::fabs(gamma) <= f64::EPSILON * libm::sqrt(alpha * beta) {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = libm::copysign(1.0, zeta) / (libm::fabs(zeta) + libm::sqrt(1.0 + zeta * zeta));
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = c * t;
                for i in 0..rows {
                    let (a, b) = (u[(i, p)], u[(i, q)]);
                    u[(i, p)] = c * a - s * b;
                    u[(i, q)] = s * a + c * b;
                }
                for i in 0..cols {
                    let (a, b) = (v[(i, p)], v[(i, q)]);
                    v[(i, p)] = c * a - s * b;
                    v[(i, q)] = s * a + c * b;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sigma = Vec::with_capacity(cols);
    for j in 0..cols {
        let n = libm::sqrt((0..rows).map(|i| u[(i, j)] * u[(i, j)]).sum::<f64>());
        if n > 0.0 {
            for i in 0..rows {
                u[(i, j)] /= n;
            }
        }
        sigma.push(n);
    }
    (u, sigma, v)
}

/// Moore-Penrose pseudoinverse by singular-value thresholding: singular
/// values at or below `rel_tol * sigma_max` are treated as zero.
pub fn pseudo_inverse(m: &DMatrix<f64>, rel_tol: f64) -> Result<DMatrix<f64>> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::param("matrix", "contains non-finite entries"));
    }
    if !rel_tol.is_finite() || rel_tol < 0.0 {
        return Err(Error::param("rel_tol", "must be finite and non-negative"));
    }
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return Ok(DMatrix::zeros(cols, rows));
    }
    // pinv(A) = pinv(A^T)^T, so factor whichever orientation is tall.
    let wide = rows < cols;
    let tall = if wide { m.transpose() } else { m.clone() };
    let (u, sigma, v) = jacobi_svd(&tall);
    let sigma_max = sigma.iter().cloned().fold(0.0, f64::max);
    let cutoff = rel_tol * sigma_max;

    // tall^+ = sum_r v_r u_r^T / sigma_r
    let (t_rows, t_cols) = tall.shape();
    let mut out = DMatrix::zeros(t_cols, t_rows);
    for (r, &s) in sigma.iter().enumerate() {
        if s <= cutoff || s == 0.0 {
            continue;
        }
        let inv = 1.0 / s;
        for i in 0..t_cols {
            let vi = v[(i, r)] * inv;
            if vi == 0.0 {
                continue;
            }
            for j in 0..t_rows {
                out[(i, j)] += vi * u[(j, r)];
            }
        }
    }
    Ok(if wide { out.transpose() } else { out })
}
