use serde::{Deserialize, Serialize};

use crate::dictionary::PairedMatrices;
use crate::error::{Error, Result};
use crate::numerics::{column_mean_center, matmul, matmul_tn, svd, DenseMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Source,
    Target,
}

/// Canonical correlation analysis fitted on the dictionary, computed with
/// two whitening SVDs followed by an alignment SVD.
///
/// A source row `x` maps to `(x − src_mean) · src_transform` and a target
/// row `y` to `(y − tgt_mean) · tgt_transform`.
#[derive(Debug, Clone, PartialEq)]
pub struct CcaMap {
    pub src_mean: Vec<f64>,
    pub tgt_mean: Vec<f64>,
    /// d×k′
    pub src_transform: DenseMatrix,
    /// d×k′
    pub tgt_transform: DenseMatrix,
    /// Canonical correlations of the dictionary, descending (length d).
    pub correlations: Vec<f64>,
}

impl CcaMap {
    pub fn dim(&self) -> usize {
        self.src_transform.rows()
    }

    pub fn rank(&self) -> usize {
        self.src_transform.cols()
    }

    /// The leading `k` canonical directions.
    pub fn reduce_rank(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.rank() {
            return Err(Error::invalid("k", format!("rank {k} is outside [1, {}]", self.rank())));
        }
        Ok(Self {
            src_transform: self.src_transform.leading_columns(k)?,
            tgt_transform: self.tgt_transform.leading_columns(k)?,
            ..self.clone()
        })
    }

    pub fn swapped(&self) -> Self {
        Self {
            src_mean: self.tgt_mean.clone(),
            tgt_mean: self.src_mean.clone(),
            src_transform: self.tgt_transform.clone(),
            tgt_transform: self.src_transform.clone(),
            correlations: self.correlations.clone(),
        }
    }

    fn parts(&self, side: Side) -> (&[f64], &DenseMatrix) {
        match side {
            Side::Source => (&self.src_mean, &self.src_transform),
            Side::Target => (&self.tgt_mean, &self.tgt_transform),
        }
    }

    /// Centred and transformed rows, without renormalisation.
    pub fn transform_rows(&self, rows: &DenseMatrix, side: Side) -> Result<DenseMatrix> {
        let (mean, transform) = self.parts(side);
        if rows.cols() != mean.len() {
            return Err(Error::ShapeMismatch {
                op: "apply_cca",
                left: rows.shape(),
                right: transform.shape(),
            });
        }
        let centred = DenseMatrix::from_fn(rows.rows(), rows.cols(), |i, j| rows.get(i, j) - mean[j])?;
        matmul(&centred, transform)
    }

    /// Aligned, unit-norm rows for retrieval.
    pub fn apply_rows(&self, rows: &DenseMatrix, side: Side) -> Result<DenseMatrix> {
        self.transform_rows(rows, side)?
            .normalize_rows()
            .map_err(|row| Error::ZeroNorm(format!("row {row} maps to the zero vector under CCA")))
    }

    pub fn apply(&self, x: &[f64], side: Side) -> Result<Vec<f64>> {
        Ok(self
            .apply_rows(&DenseMatrix::new(1, x.len(), x.to_vec())?, side)?
            .into_vec())
    }
}

fn whiten(m: &DenseMatrix, which: &'static str) -> Result<(DenseMatrix, Vec<f64>, DenseMatrix, Vec<f64>)> {
    let (centred, mean) = column_mean_center(m)?;
    let s = svd(&centred)?;
    let (n, d) = m.shape();
    let tol = s.sigma.first().copied().unwrap_or(0.0) * f64::EPSILON * n.max(d) as f64;
    if s.sigma.len() < d {
        return Err(Error::RankDeficient {
            op: which,
            index: s.sigma.len(),
            value: 0.0,
        });
    }
    if let Some((index, &value)) = s.sigma.iter().enumerate().find(|(_, v)| **v <= tol) {
        return Err(Error::RankDeficient { op: which, index, value });
    }
    Ok((s.u, s.sigma, s.v, mean))
}

/// `V Σ⁻¹ R[:, :k]`
fn compose(v: &DenseMatrix, sigma: &[f64], rotation: &DenseMatrix, k: usize) -> Result<DenseMatrix> {
    let d = v.rows();
    let scaled = DenseMatrix::from_fn(d, d, |i, j| v.get(i, j) / sigma[j])?;
    matmul(&scaled, &rotation.leading_columns(k)?)
}

/// Fits CCA with `k` retained canonical directions.
///
/// Centre `X_D` and take `X_D′ = Q_D Σ_X V_Xᵀ`; likewise
/// `Y_D′ = W_D Σ_Y V_Yᵀ`; then `Q_Dᵀ W_D = U′ Σ′ V′ᵀ`. The source transform
/// is `V_X Σ_X⁻¹ U′` and the target transform `V_Y Σ_Y⁻¹ V′`.
pub fn fit_cca(p: &PairedMatrices, k: usize) -> Result<CcaMap> {
    let (n, d) = p.x_d.shape();
    if n < 2 {
        return Err(Error::invalid("train", "CCA needs at least two pairs"));
    }
    if k == 0 || k > d {
        return Err(Error::invalid("k", format!("rank {k} is outside [1, {d}]")));
    }
    let (q_d, sigma_x, v_x, src_mean) = whiten(&p.x_d, "fit_cca (source)")?;
    let (w_d, sigma_y, v_y, tgt_mean) = whiten(&p.y_d, "fit_cca (target)")?;
    let m = matmul_tn(&q_d, &w_d)?;
    let s = svd(&m)?;
    log::info!(
        "cca fit on {n} pairs, d = {d}, leading correlation {:.4}",
        s.sigma.first().copied().unwrap_or(0.0)
    );
    Ok(CcaMap {
        src_transform: compose(&v_x, &sigma_x, &s.u, k)?,
        tgt_transform: compose(&v_y, &sigma_y, &s.v, k)?,
        src_mean,
        tgt_mean,
        correlations: s.sigma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::dot;
    use crate::synthetic::random_unit_rows;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn paired(x: DenseMatrix, y: DenseMatrix) -> PairedMatrices {
        let labels = (0..x.rows()).map(|i| (format!("s{i}"), format!("t{i}"))).collect();
        PairedMatrices::new(x, y, labels).unwrap()
    }

    fn column_correlations(a: &DenseMatrix, b: &DenseMatrix) -> Vec<f64> {
        (0..a.cols())
            .map(|k| {
                let (ca, cb) = (a.column(k), b.column(k));
                dot(&ca, &cb) / (dot(&ca, &ca).sqrt() * dot(&cb, &cb).sqrt())
            })
            .collect()
    }

    /// Canonical correlations of two 2-column centred samples from the
    /// eigenvalues of Cxx⁻¹ Cxy Cyy⁻¹ Cyx.
    fn covariance_oracle(x: &DenseMatrix, y: &DenseMatrix) -> [f64; 2] {
        let (xc, _) = column_mean_center(x).unwrap();
        let (yc, _) = column_mean_center(y).unwrap();
        let cxx = matmul_tn(&xc, &xc).unwrap();
        let cyy = matmul_tn(&yc, &yc).unwrap();
        let cxy = matmul_tn(&xc, &yc).unwrap();
        let inv2 = |m: &DenseMatrix| {
            let det = m.get(0, 0) * m.get(1, 1) - m.get(0, 1) * m.get(1, 0);
            DenseMatrix::from_rows(&[[m.get(1, 1) / det, -m.get(0, 1) / det], [-m.get(1, 0) / det, m.get(0, 0) / det]]).unwrap()
        };
        let prod = matmul(
            &matmul(&inv2(&cxx), &cxy).unwrap(),
            &matmul(&inv2(&cyy), &cxy.transpose()).unwrap(),
        )
        .unwrap();
        let tr = prod.get(0, 0) + prod.get(1, 1);
        let det = prod.get(0, 0) * prod.get(1, 1) - prod.get(0, 1) * prod.get(1, 0);
        let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
        [(tr / 2.0 + disc).sqrt(), (tr / 2.0 - disc).max(0.0).sqrt()]
    }

    #[test]
    fn identical_sides_align_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random_unit_rows(30, 5, &mut rng);
        let map = fit_cca(&paired(x.clone(), x.clone()), 5).unwrap();
        let a = map.apply_rows(&x, Side::Source).unwrap();
        let b = map.apply_rows(&x, Side::Target).unwrap();
        assert!(a.sub(&b).unwrap().max_abs() < 1e-8);
    }

    #[test]
    fn three_points_in_the_plane() {
        let x = DenseMatrix::from_rows(&[[1.0, 0.0], [0.0, 1.0], [0.6, -0.8]]).unwrap();
        let y = DenseMatrix::from_rows(&[[0.8, 0.6], [-1.0, 0.0], [0.0, 1.0]]).unwrap();
        let map = fit_cca(&paired(x.clone(), y.clone()), 2).unwrap();
        let oracle = covariance_oracle(&x, &y);
        let got = column_correlations(
            &map.transform_rows(&x, Side::Source).unwrap(),
            &map.transform_rows(&y, Side::Target).unwrap(),
        );
        for (g, o) in got.iter().zip(oracle) {
            assert!((g - o).abs() < 1e-6, "{got:?} vs {oracle:?}");
        }
    }

    #[test]
    fn correlations_match_covariance_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let noise = Normal::new(0.0, 0.5).unwrap();
        let x = random_unit_rows(12, 2, &mut rng);
        let y = DenseMatrix::from_fn(12, 2, |i, j| x.get(i, 1 - j) + noise.sample(&mut rng)).unwrap();
        let map = fit_cca(&paired(x.clone(), y.clone()), 2).unwrap();
        let oracle = covariance_oracle(&x, &y);
        let got = column_correlations(
            &map.transform_rows(&x, Side::Source).unwrap(),
            &map.transform_rows(&y, Side::Target).unwrap(),
        );
        assert!(oracle[0] > oracle[1] + 1e-3);
        for ((g, o), c) in got.iter().zip(oracle).zip(&map.correlations) {
            assert!((g - o).abs() < 1e-6, "{got:?} vs {oracle:?}");
            assert!((c - o).abs() < 1e-6);
        }
    }

    #[test]
    fn replays_direct_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_unit_rows(20, 4, &mut rng);
        let y = random_unit_rows(20, 4, &mut rng);
        let map = fit_cca(&paired(x.clone(), y.clone()), 4).unwrap();

        let (xc, _) = column_mean_center(&x).unwrap();
        let (yc, _) = column_mean_center(&y).unwrap();
        let sx = svd(&xc).unwrap();
        let sy = svd(&yc).unwrap();
        let s = svd(&matmul_tn(&sx.u, &sy.u).unwrap()).unwrap();
        let inv = |sig: &[f64]| DenseMatrix::diag(&sig.iter().map(|v| 1.0 / v).collect::<Vec<_>>()).unwrap();
        let q_aligned = matmul(&matmul(&matmul(&xc, &sx.v).unwrap(), &inv(&sx.sigma)).unwrap(), &s.u).unwrap();
        let w_aligned = matmul(&matmul(&matmul(&yc, &sy.v).unwrap(), &inv(&sy.sigma)).unwrap(), &s.v).unwrap();

        let got_q = map.transform_rows(&x, Side::Source).unwrap();
        let got_w = map.transform_rows(&y, Side::Target).unwrap();
        assert!(got_q.sub(&q_aligned).unwrap().max_abs() < 1e-10);
        assert!(got_w.sub(&w_aligned).unwrap().max_abs() < 1e-10);
        // aligned dictionary: orthonormal columns whose cross-product is diag(Σ′)
        let cross = matmul_tn(&got_q, &got_w).unwrap();
        assert!(cross.sub(&DenseMatrix::diag(&map.correlations).unwrap()).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn reduced_rank_and_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = random_unit_rows(20, 4, &mut rng);
        let y = random_unit_rows(20, 4, &mut rng);
        let p = paired(x.clone(), y);
        let map = fit_cca(&p, 2).unwrap();
        assert_eq!(map.rank(), 2);
        assert_eq!(fit_cca(&p, 4).unwrap().reduce_rank(2).unwrap(), map);
        assert!(map.reduce_rank(3).is_err());
        assert_eq!(map.apply_rows(&x, Side::Source).unwrap().shape(), (20, 2));
        assert!(fit_cca(&p, 0).is_err());
        assert!(fit_cca(&p, 5).is_err());
        // the dictionary centroid lands on the origin
        let err = map.apply(&map.src_mean.clone(), Side::Source).unwrap_err();
        assert!(matches!(err, Error::ZeroNorm(_)));
    }

    #[test]
    fn rank_deficient_dictionary_is_rejected() {
        // centred 3 points in 4 dimensions have rank at most 2
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = random_unit_rows(3, 4, &mut rng);
        let y = random_unit_rows(3, 4, &mut rng);
        assert!(matches!(fit_cca(&paired(x, y), 4), Err(Error::RankDeficient { .. })));
    }
}
