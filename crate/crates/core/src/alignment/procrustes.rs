use crate::dictionary::PairedMatrices;
use crate::error::{Error, Result};
use crate::numerics::{matmul, matmul_nt, matmul_tn, svd, DenseMatrix};

/// Orthogonal map `O = U Vᵀ` held in factored form.
///
/// Source vectors enter the shared space through `Vᵀ`, target vectors
/// through `Uᵀ`, so `yᵀ O x = (Uᵀy) · (Vᵀx)`. Keeping only the leading
/// `rank` singular directions drops the dimensions that matter least to the
/// dictionary's mean cosine similarity.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalMap {
    pub u: DenseMatrix,
    pub sigma: Vec<f64>,
    pub v: DenseMatrix,
    rank: usize,
}

impl OrthogonalMap {
    pub fn from_parts(u: DenseMatrix, sigma: Vec<f64>, v: DenseMatrix, rank: usize) -> Result<Self> {
        let d = u.rows();
        if u.shape() != (d, d) || v.shape() != (d, d) || sigma.len() != d {
            return Err(Error::ShapeMismatch {
                op: "OrthogonalMap::from_parts",
                left: u.shape(),
                right: v.shape(),
            });
        }
        let map = Self { u, sigma, v, rank: d };
        map.reduce_rank(rank)
    }

    pub fn dim(&self) -> usize {
        self.u.rows()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// The composed `d×d` matrix `U Vᵀ`.
    pub fn matrix(&self) -> DenseMatrix {
        matmul_nt(&self.u, &self.v).expect("square factors")
    }

    /// Same factors with `rank` directions retained.
    pub fn reduce_rank(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.dim() {
            return Err(Error::invalid(
                "k",
                format!("rank {k} is outside [1, {}]", self.dim()),
            ));
        }
        Ok(Self { rank: k, ..self.clone() })
    }

    /// The map in the opposite direction, `Oᵀ = V Uᵀ`.
    pub fn transposed(&self) -> Self {
        Self {
            u: self.v.clone(),
            sigma: self.sigma.clone(),
            v: self.u.clone(),
            rank: self.rank,
        }
    }

    fn project(&self, basis: &DenseMatrix, rows: &DenseMatrix) -> Result<DenseMatrix> {
        if rows.cols() != self.dim() {
            return Err(Error::ShapeMismatch {
                op: "project",
                left: rows.shape(),
                right: basis.shape(),
            });
        }
        let basis = basis.leading_columns(self.rank)?;
        let out = matmul(rows, &basis)?;
        if self.rank == self.dim() {
            return Ok(out);
        }
        out.normalize_rows()
            .map_err(|row| Error::ZeroNorm(format!("row {row} vanishes after rank reduction")))
    }

    /// Rows `x` mapped to `Vᵀx`, first `rank` components; renormalised when
    /// the rank is reduced.
    pub fn project_source(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        self.project(&self.v, x)
    }

    /// Rows `y` mapped to `Uᵀy`, first `rank` components; renormalised when
    /// the rank is reduced.
    pub fn project_target(&self, y: &DenseMatrix) -> Result<DenseMatrix> {
        self.project(&self.u, y)
    }

    pub fn project_source_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.project_source(&DenseMatrix::new(1, x.len(), x.to_vec())?)?.into_vec())
    }

    pub fn project_target_vec(&self, y: &[f64]) -> Result<Vec<f64>> {
        Ok(self.project_target(&DenseMatrix::new(1, y.len(), y.to_vec())?)?.into_vec())
    }

    /// `Σᵢ yᵢᵀ O xᵢ` over the dictionary, at full rank.
    pub fn objective(&self, p: &PairedMatrices) -> Result<f64> {
        dictionary_objective(&self.matrix(), p)
    }
}

/// `Σᵢ yᵢᵀ O xᵢ` for an arbitrary square `o`.
pub fn dictionary_objective(o: &DenseMatrix, p: &PairedMatrices) -> Result<f64> {
    let mapped = matmul_nt(&p.x_d, o)?;
    Ok(mapped
        .row_iter()
        .zip(p.y_d.row_iter())
        .map(|(a, b)| crate::numerics::dot(a, b))
        .sum())
}

/// Maximises the dictionary's summed cosine similarity over orthogonal
/// maps: SVD of `M = Y_Dᵀ X_D = U Σ Vᵀ`, giving `O = U Vᵀ`.
pub fn fit_procrustes(p: &PairedMatrices) -> Result<OrthogonalMap> {
    if p.n() == 0 {
        return Err(Error::Empty("empty training dictionary".into()));
    }
    let m = matmul_tn(&p.y_d, &p.x_d)?;
    let s = svd(&m)?;
    let d = m.rows();
    log::info!(
        "procrustes fit on {} pairs, d = {d}, sigma range [{:.4e}, {:.4e}]",
        p.n(),
        s.sigma.last().copied().unwrap_or(0.0),
        s.sigma.first().copied().unwrap_or(0.0)
    );
    Ok(OrthogonalMap {
        u: s.u,
        sigma: s.sigma,
        v: s.v,
        rank: d,
    })
}
