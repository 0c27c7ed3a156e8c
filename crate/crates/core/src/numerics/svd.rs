//! Singular value decomposition by one-sided (Hestenes) Jacobi rotations.
//!
//! Tall inputs are first reduced to their square `R` factor by a Householder
//! QR, so the rotation sweeps always run on columns of length `min(m, n)`.
//! Output conventions, all deterministic:
//!
//! * singular values descending, ties kept in original column order;
//! * each column of `U` has its largest-magnitude entry positive (the
//!   matching column of `V` is flipped with it);
//! * columns of `U` belonging to numerically zero singular values are
//!   completed to an orthonormal set from the standard basis.

use super::matrix::{dot, DenseMatrix};
use super::qr::HouseholderQr;
use crate::error::{Error, Result};

pub const MAX_SWEEPS: usize = 100;
pub const ROTATION_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct Svd {
    /// m×r, orthonormal columns.
    pub u: DenseMatrix,
    /// Length r = min(m, n), descending and non-negative.
    pub sigma: Vec<f64>,
    /// n×r, orthonormal columns.
    pub v: DenseMatrix,
}

impl Svd {
    /// `U · diag(sigma) · Vᵀ`.
    pub fn reconstruct(&self) -> DenseMatrix {
        let (m, r) = self.u.shape();
        let n = self.v.rows();
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            for k in 0..r {
                let uik = self.u.get(i, k) * self.sigma[k];
                if uik == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[i * n + j] += uik * self.v.get(j, k);
                }
            }
        }
        DenseMatrix::from_vec_unchecked(m, n, out)
    }
}

pub fn svd(m: &DenseMatrix) -> Result<Svd> {
    if m.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("svd"));
    }
    let (rows, cols) = m.shape();
    if rows < cols {
        let t = svd(&m.transpose())?;
        let mut out = Svd {
            u: t.v,
            sigma: t.sigma,
            v: t.u,
        };
        fix_signs(&mut out);
        return Ok(out);
    }
    if rows > cols {
        let qr = HouseholderQr::new(m)?;
        let inner = svd(&qr.r())?;
        let u = qr.apply_q(&inner.u)?;
        let mut out = Svd {
            u,
            sigma: inner.sigma,
            v: inner.v,
        };
        fix_signs(&mut out);
        return Ok(out);
    }
    jacobi_square(m)
}

fn jacobi_square(a: &DenseMatrix) -> Result<Svd> {
    let n = a.rows();
    // column-major copies; rotations act on column pairs
    let mut w: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();

    let mut converged = n <= 1;
    let mut residual = 0.0;
    let mut sweeps = 0;
    while !converged && sweeps < MAX_SWEEPS {
        sweeps += 1;
        residual = 0.0f64;
        for p in 0..n - 1 {
            let (left, right) = w.split_at_mut(p + 1);
            let wp = &mut left[p];
            let (vleft, vright) = v.split_at_mut(p + 1);
            let vp = &mut vleft[p];
            for (off, wq) in right.iter_mut().enumerate() {
                let (alpha, beta, gamma) = gram3(wp, wq);
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let scale = alpha.sqrt() * beta.sqrt();
                let rel = gamma.abs() / scale;
                residual = residual.max(rel);
                if rel <= ROTATION_TOLERANCE {
                    continue;
                }
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(wp, wq, c, s);
                rotate(vp, &mut vright[off], c, s);
            }
        }
        converged = residual <= ROTATION_TOLERANCE;
    }
    if !converged {
        return Err(Error::SvdNoConvergence { sweeps, residual });
    }

    let norms: Vec<f64> = w.iter().map(|c| dot(c, c).sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    // stable: equal values keep original column order
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));

    let sigma_max = norms.iter().cloned().fold(0.0, f64::max);
    let negligible = sigma_max * f64::EPSILON * n as f64;

    let mut u_cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut pending = Vec::new();
    for (slot, &j) in order.iter().enumerate() {
        let s = norms[j];
        if s > negligible && s > 0.0 {
            u_cols.push(w[j].iter().map(|x| x / s).collect());
        } else {
            u_cols.push(Vec::new());
            pending.push(slot);
        }
    }
    complete_basis(&mut u_cols, &pending, n);

    let sigma: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let mut u = vec![0.0; n * n];
    let mut vm = vec![0.0; n * n];
    for (slot, &j) in order.iter().enumerate() {
        for i in 0..n {
            u[i * n + slot] = u_cols[slot][i];
            vm[i * n + slot] = v[j][i];
        }
    }
    let mut out = Svd {
        u: DenseMatrix::from_vec_unchecked(n, n, u),
        sigma,
        v: DenseMatrix::from_vec_unchecked(n, n, vm),
    };
    fix_signs(&mut out);
    Ok(out)
}

#[inline]
fn gram3(a: &[f64], b: &[f64]) -> (f64, f64, f64) {
    let (mut aa, mut bb, mut ab) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        aa += x * x;
        bb += y * y;
        ab += x * y;
    }
    (aa, bb, ab)
}

#[inline]
fn rotate(a: &mut [f64], b: &mut [f64], c: f64, s: f64) {
    for (x, y) in a.iter_mut().zip(b.iter_mut()) {
        let (xa, yb) = (*x, *y);
        *x = c * xa - s * yb;
        *y = s * xa + c * yb;
    }
}

/// Fills the listed empty slots with unit vectors orthogonal to every other
/// column, drawn from the standard basis by two-pass Gram-Schmidt.
fn complete_basis(cols: &mut [Vec<f64>], pending: &[usize], dim: usize) {
    let mut candidate = 0;
    for &slot in pending {
        while candidate < dim {
            let mut e = vec![0.0; dim];
            e[candidate] = 1.0;
            candidate += 1;
            for _ in 0..2 {
                for other in cols.iter().filter(|c| !c.is_empty()) {
                    let proj = dot(&e, other);
                    for (x, o) in e.iter_mut().zip(other) {
                        *x -= proj * o;
                    }
                }
            }
            let norm = dot(&e, &e).sqrt();
            if norm > 0.5 {
                e.iter_mut().for_each(|x| *x /= norm);
                cols[slot] = e;
                break;
            }
        }
    }
}

fn fix_signs(s: &mut Svd) {
    let (m, r) = s.u.shape();
    let n = s.v.rows();
    for k in 0..r {
        let mut best = 0.0f64;
        let mut sign = 1.0;
        for i in 0..m {
            let x = s.u.get(i, k);
            if x.abs() > best {
                best = x.abs();
                sign = x.signum();
            }
        }
        if sign < 0.0 {
            let ud = s.u.data_mut();
            for i in 0..m {
                ud[i * r + k] = -ud[i * r + k];
            }
            let vd = s.v.data_mut();
            for i in 0..n {
                vd[i * r + k] = -vd[i * r + k];
            }
        }
    }
}
