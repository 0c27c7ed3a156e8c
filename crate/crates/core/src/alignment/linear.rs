use crate::dictionary::PairedMatrices;
use crate::error::{Error, Result};
use crate::numerics::{matmul, matmul_nt, matmul_tn, svd, DenseMatrix, HouseholderQr};

/// Unconstrained linear map `y ≈ W x`, the least-squares baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMap {
    pub w: DenseMatrix,
}

impl LinearMap {
    pub fn new(w: DenseMatrix) -> Result<Self> {
        if w.rows() != w.cols() {
            return Err(Error::invalid("w", format!("expected a square matrix, got {:?}", w.shape())));
        }
        Ok(Self { w })
    }

    pub fn dim(&self) -> usize {
        self.w.rows()
    }

    /// `W x`, not renormalised.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.w.matvec(x)
    }

    /// Row-wise `W x`.
    pub fn apply_rows(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        matmul_nt(x, &self.w)
    }
}

/// Minimum-norm minimiser of `Σᵢ ‖yᵢ − W xᵢ‖²` via the pseudo-inverse of
/// `X_D`. Tall dictionaries are reduced by QR first, so only a `d×d`
/// problem reaches the SVD.
pub fn fit_least_squares(p: &PairedMatrices) -> Result<LinearMap> {
    let (n, d) = p.x_d.shape();
    if n == 0 {
        return Err(Error::Empty("empty training dictionary".into()));
    }
    // Wᵀ = pinv(X_D) Y_D
    let (r, qty) = if n > d {
        let qr = HouseholderQr::new(&p.x_d)?;
        (qr.r(), qr.apply_qt(&p.y_d)?)
    } else {
        (p.x_d.clone(), p.y_d.clone())
    };
    let s = svd(&r)?;
    let tol = s.sigma.first().copied().unwrap_or(0.0) * f64::EPSILON * n.max(d) as f64;
    let rank = s.sigma.iter().take_while(|v| **v > tol).count();
    if rank < d {
        log::warn!("least squares: dictionary matrix has rank {rank} < {d}; returning the minimum-norm solution");
    }
    // Wᵀ = V Σ⁺ Uᵀ (QᵀY)
    let uty = matmul_tn(&s.u, &qty)?;
    let (r_dim, p_dim) = uty.shape();
    let mut scaled = vec![0.0; r_dim * p_dim];
    for k in 0..rank {
        let inv = 1.0 / s.sigma[k];
        for c in 0..p_dim {
            scaled[k * p_dim + c] = uty.get(k, c) * inv;
        }
    }
    let wt = matmul(&s.v, &DenseMatrix::new(r_dim, p_dim, scaled)?)?;
    LinearMap::new(wt.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::random_unit_rows;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal, StandardNormal};

    fn paired(x: DenseMatrix, y: DenseMatrix) -> PairedMatrices {
        let labels = (0..x.rows()).map(|i| (format!("s{i}"), format!("t{i}"))).collect();
        PairedMatrices::new(x, y, labels).unwrap()
    }

    #[test]
    fn identity_when_sides_match() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random_unit_rows(30, 5, &mut rng);
        let m = fit_least_squares(&paired(x.clone(), x)).unwrap();
        assert!(m.w.sub(&DenseMatrix::identity(5)).unwrap().max_abs() < 1e-8);
    }

    #[test]
    fn recovers_known_linear_map() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = DenseMatrix::from_fn(6, 6, |_, _| StandardNormal.sample(&mut rng)).unwrap();
        let x = random_unit_rows(40, 6, &mut rng);
        let y = matmul_nt(&x, &a).unwrap();
        let m = fit_least_squares(&paired(x, y)).unwrap();
        assert!(m.w.sub(&a).unwrap().max_abs() < 1e-6);
    }

    #[test]
    fn gradient_vanishes_at_solution() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let noise = Normal::new(0.0, 0.3).unwrap();
        let x = random_unit_rows(50, 7, &mut rng);
        let y = DenseMatrix::from_fn(50, 7, |i, j| x.get(i, (j + 1) % 7) + noise.sample(&mut rng)).unwrap();
        let m = fit_least_squares(&paired(x.clone(), y.clone())).unwrap();
        // ∂/∂W Σ‖yᵢ − W xᵢ‖² = 2 (W X_Dᵀ − Y_Dᵀ) X_D
        let resid = matmul_nt(&m.w, &x).unwrap().sub(&y.transpose()).unwrap();
        let grad = matmul(&resid, &x).unwrap().scale(2.0).unwrap();
        assert!(grad.max_abs() <= 1e-6, "{}", grad.max_abs());
    }

    #[test]
    fn rank_deficient_gives_minimum_norm() {
        // every x lies in the first two coordinates
        let x = DenseMatrix::from_rows(&[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.6, 0.8, 0.0], [0.8, -0.6, 0.0]]).unwrap();
        let y = x.clone();
        let m = fit_least_squares(&paired(x, y)).unwrap();
        let expected = DenseMatrix::from_rows(&[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.0]]).unwrap();
        assert!(m.w.sub(&expected).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn fewer_pairs_than_dimensions() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = random_unit_rows(3, 6, &mut rng);
        let y = random_unit_rows(3, 6, &mut rng);
        let m = fit_least_squares(&paired(x.clone(), y.clone())).unwrap();
        // interpolates the pairs exactly
        let fitted = m.apply_rows(&x).unwrap();
        assert!(fitted.sub(&y).unwrap().max_abs() < 1e-10);
        let wtw = matmul_tn(&m.w, &m.w).unwrap();
        assert!(wtw.as_slice().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn apply_matches_triple_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w = DenseMatrix::from_fn(4, 4, |_, _| StandardNormal.sample(&mut rng)).unwrap();
        let x = [0.5, -1.0, 2.0, 0.25];
        let got = LinearMap::new(w.clone()).unwrap().apply(&x).unwrap();
        for i in 0..4 {
            let mut s = 0.0;
            for j in 0..4 {
                s += w.get(i, j) * x[j];
            }
            assert!((got[i] - s).abs() < 1e-12);
        }
        let id = LinearMap::new(DenseMatrix::identity(4)).unwrap();
        assert_eq!(id.apply(&x).unwrap(), x.to_vec());
        let zero = LinearMap::new(DenseMatrix::zeros(4, 4)).unwrap();
        assert_eq!(zero.apply(&x).unwrap(), vec![0.0; 4]);
        assert!(id.apply(&[1.0]).is_err());
    }
}
