use super::matrix::{axpy, dot, DenseMatrix};
use crate::error::{Error, Result};

/// Householder QR of a tall matrix, reflectors kept in factored form.
///
/// Storage is column-major and holds one copy of the input, so the
/// factorisation of a 500k×300 dictionary costs no more memory than the
/// dictionary itself.
pub struct HouseholderQr {
    rows: usize,
    cols: usize,
    /// Column `j` holds the unit reflector for step `j` in entries `j..rows`
    /// (empty when the step needed no reflection).
    reflectors: Vec<Vec<f64>>,
    r: Vec<f64>,
}

impl HouseholderQr {
    pub fn new(a: &DenseMatrix) -> Result<Self> {
        let (m, n) = a.shape();
        if m < n {
            return Err(Error::invalid(
                "a",
                format!("householder_qr needs rows >= cols, got {m}x{n}"),
            ));
        }
        let mut cols: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
        let mut reflectors = Vec::with_capacity(n);
        let mut r = vec![0.0; n * n];

        for j in 0..n {
            let (head, tail) = cols.split_at_mut(j + 1);
            let x = &head[j][j..];
            let alpha = dot(x, x).sqrt();
            let diag = if x[0] >= 0.0 { -alpha } else { alpha };
            let mut v = x.to_vec();
            v[0] -= diag;
            let vnorm = dot(&v, &v).sqrt();
            if alpha == 0.0 || vnorm == 0.0 {
                r[j * n + j] = x[0];
                v.clear();
            } else {
                v.iter_mut().for_each(|e| *e /= vnorm);
                for col in tail.iter_mut() {
                    let seg = &mut col[j..];
                    let proj = 2.0 * dot(&v, seg);
                    axpy(-proj, &v, seg);
                }
                r[j * n + j] = diag;
            }
            for (k, col) in tail.iter().enumerate() {
                r[j * n + j + 1 + k] = col[j];
            }
            // column j is consumed; drop it early to bound peak memory
            head[j] = Vec::new();
            reflectors.push(v);
        }
        Ok(Self {
            rows: m,
            cols: n,
            reflectors,
            r,
        })
    }

    pub fn r(&self) -> DenseMatrix {
        DenseMatrix::from_vec_unchecked(self.cols, self.cols, self.r.clone())
    }

    /// First `cols` rows of `Qᵀ · b`.
    pub fn apply_qt(&self, b: &DenseMatrix) -> Result<DenseMatrix> {
        if b.rows() != self.rows {
            return Err(Error::ShapeMismatch {
                op: "apply_qt",
                left: (self.cols, self.rows),
                right: b.shape(),
            });
        }
        let n = self.cols;
        let p = b.cols();
        let mut out = vec![0.0; n * p];
        for c in 0..p {
            let mut col = b.column(c);
            for (j, v) in self.reflectors.iter().enumerate() {
                if v.is_empty() {
                    continue;
                }
                let seg = &mut col[j..];
                let proj = 2.0 * dot(v, seg);
                axpy(-proj, v, seg);
            }
            for i in 0..n {
                out[i * p + c] = col[i];
            }
        }
        Ok(DenseMatrix::from_vec_unchecked(n, p, out))
    }

    /// `Q · c` for an n×p matrix `c`, giving an m×p result.
    pub fn apply_q(&self, c: &DenseMatrix) -> Result<DenseMatrix> {
        if c.rows() != self.cols {
            return Err(Error::ShapeMismatch {
                op: "apply_q",
                left: (self.rows, self.cols),
                right: c.shape(),
            });
        }
        let m = self.rows;
        let p = c.cols();
        let mut out = vec![0.0; m * p];
        for k in 0..p {
            let mut col = vec![0.0; m];
            for i in 0..self.cols {
                col[i] = c.get(i, k);
            }
            for (j, v) in self.reflectors.iter().enumerate().rev() {
                if v.is_empty() {
                    continue;
                }
                let seg = &mut col[j..];
                let proj = 2.0 * dot(v, seg);
                axpy(-proj, v, seg);
            }
            for i in 0..m {
                out[i * p + k] = col[i];
            }
        }
        Ok(DenseMatrix::from_vec_unchecked(m, p, out))
    }

    /// Explicit thin `Q` (m×n).
    pub fn thin_q(&self) -> DenseMatrix {
        self.apply_q(&DenseMatrix::identity(self.cols))
            .expect("identity has matching rows")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::matrix::{matmul, matmul_tn};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn reconstructs_tall_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = DenseMatrix::from_fn(40, 7, |_, _| rng.random_range(-1.0..1.0)).unwrap();
        let qr = HouseholderQr::new(&a).unwrap();
        let (q, r) = (qr.thin_q(), qr.r());
        let recon = matmul(&q, &r).unwrap();
        assert!(recon.sub(&a).unwrap().max_abs() < 1e-12);
        let qtq = matmul_tn(&q, &q).unwrap();
        assert!(qtq.sub(&DenseMatrix::identity(7)).unwrap().max_abs() < 1e-13);
        for i in 0..7 {
            for j in 0..i {
                assert_eq!(r.get(i, j), 0.0);
            }
        }
        // Qᵀ a recovers R
        let qta = qr.apply_qt(&a).unwrap();
        assert!(qta.sub(&r).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn handles_zero_columns() {
        let a = DenseMatrix::from_rows(&[[0.0, 1.0], [0.0, 2.0], [0.0, 3.0]]).unwrap();
        let qr = HouseholderQr::new(&a).unwrap();
        let (q, r) = (qr.thin_q(), qr.r());
        assert!(matmul(&q, &r).unwrap().sub(&a).unwrap().max_abs() < 1e-14);
        let qtq = matmul_tn(&q, &q).unwrap();
        assert!(qtq.sub(&DenseMatrix::identity(2)).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn rejects_wide_input() {
        assert!(HouseholderQr::new(&DenseMatrix::zeros(2, 3)).is_err());
    }
}
