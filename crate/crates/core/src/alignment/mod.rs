//! Linear maps between two embedding spaces fitted on a bilingual
//! dictionary: the orthogonal (SVD) solution, a least-squares baseline and
//! CCA.

mod artifact;
mod cca;
mod linear;
mod procrustes;

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

pub use artifact::{load_map, save_map, MapArtifact, ARTIFACT_VERSION};
pub use cca::{fit_cca, CcaMap, Side};
pub use linear::{fit_least_squares, LinearMap};
pub use procrustes::{dictionary_objective, fit_procrustes, OrthogonalMap};

use crate::dictionary::PairedMatrices;
use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;
use crate::retrieval::{RetrievalConfig, Retriever};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    #[value(name = "procrustes", alias = "svd", alias = "orthogonal")]
    Procrustes,
    #[value(name = "lsq", alias = "least-squares")]
    Lsq,
    #[value(name = "cca")]
    Cca,
}

impl fmt::Display for MapKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            MapKind::Procrustes => "procrustes",
            MapKind::Lsq => "lsq",
            MapKind::Cca => "cca",
        })
    }
}

/// Any fitted map. Both projections return unit rows in a shared space, so
/// cosine similarity is a dot product downstream.
#[derive(Debug, Clone, PartialEq)]
pub enum FittedMap {
    Orthogonal(OrthogonalMap),
    Linear(LinearMap),
    Cca(CcaMap),
}

impl FittedMap {
    pub fn kind(&self) -> MapKind {
        match self {
            FittedMap::Orthogonal(_) => MapKind::Procrustes,
            FittedMap::Linear(_) => MapKind::Lsq,
            FittedMap::Cca(_) => MapKind::Cca,
        }
    }

    /// Input embedding dimension.
    pub fn dim(&self) -> usize {
        match self {
            FittedMap::Orthogonal(m) => m.dim(),
            FittedMap::Linear(m) => m.dim(),
            FittedMap::Cca(m) => m.dim(),
        }
    }

    /// Dimension of the shared space.
    pub fn rank(&self) -> usize {
        match self {
            FittedMap::Orthogonal(m) => m.rank(),
            FittedMap::Linear(m) => m.dim(),
            FittedMap::Cca(m) => m.rank(),
        }
    }

    pub fn with_rank(&self, k: usize) -> Result<Self> {
        match self {
            FittedMap::Orthogonal(m) => Ok(FittedMap::Orthogonal(m.reduce_rank(k)?)),
            FittedMap::Cca(m) => Ok(FittedMap::Cca(m.reduce_rank(k)?)),
            FittedMap::Linear(m) if k == m.dim() => Ok(self.clone()),
            FittedMap::Linear(_) => Err(Error::invalid("rank", "the least-squares map has no rank parameter")),
        }
    }

    /// Source rows in the shared space, unit norm.
    pub fn project_sources(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        match self {
            FittedMap::Orthogonal(m) => m.project_source(x),
            FittedMap::Linear(m) => m
                .apply_rows(x)?
                .normalize_rows()
                .map_err(|row| Error::ZeroNorm(format!("row {row} maps to the zero vector"))),
            FittedMap::Cca(m) => m.apply_rows(x, Side::Source),
        }
    }

    /// Target rows in the shared space, unit norm.
    pub fn project_targets(&self, y: &DenseMatrix) -> Result<DenseMatrix> {
        match self {
            FittedMap::Orthogonal(m) => m.project_target(y),
            FittedMap::Linear(m) => {
                if y.cols() != m.dim() {
                    return Err(Error::ShapeMismatch {
                        op: "project_targets",
                        left: y.shape(),
                        right: m.w.shape(),
                    });
                }
                Ok(y.clone())
            }
            FittedMap::Cca(m) => m.apply_rows(y, Side::Target),
        }
    }

    /// The map for the opposite translation direction. The least-squares map
    /// is not invertible in general and must be refitted instead.
    pub fn reversed(&self) -> Result<Self> {
        match self {
            FittedMap::Orthogonal(m) => Ok(FittedMap::Orthogonal(m.transposed())),
            FittedMap::Cca(m) => Ok(FittedMap::Cca(m.swapped())),
            FittedMap::Linear(_) => Err(Error::invalid("map", "a least-squares map cannot be reversed; refit it on the swapped dictionary")),
        }
    }
}

/// Fits a map of the given kind at full rank.
pub fn fit_map(kind: MapKind, p: &PairedMatrices) -> Result<FittedMap> {
    Ok(match kind {
        MapKind::Procrustes => FittedMap::Orthogonal(fit_procrustes(p)?),
        MapKind::Lsq => FittedMap::Linear(fit_least_squares(p)?),
        MapKind::Cca => FittedMap::Cca(fit_cca(p, p.dim())?),
    })
}

/// `{d, d−20, d−40, …}` down to `⌈d/2⌉`.
pub fn default_rank_grid(d: usize) -> Vec<usize> {
    let floor = d.div_ceil(2).max(1);
    (0..).map(|i| d.saturating_sub(20 * i)).take_while(|&k| k >= floor && k > 0).collect()
}

/// Precision@1 on the training dictionary: each distinct source retrieves
/// among the dictionary's distinct targets and scores a hit when the
/// retrieved word is one of its translations.
pub fn training_precision(map: &FittedMap, train: &PairedMatrices, cfg: &RetrievalConfig) -> Result<f64> {
    let mut src_rows = Vec::new();
    let mut tgt_rows = Vec::new();
    let mut src_index: HashMap<&str, usize> = HashMap::new();
    let mut tgt_index: HashMap<&str, usize> = HashMap::new();
    let mut valid: Vec<HashSet<usize>> = Vec::new();
    for (i, (s, t)) in train.kept_pairs.iter().enumerate() {
        let ti = *tgt_index.entry(t).or_insert_with(|| {
            tgt_rows.push(i);
            tgt_rows.len() - 1
        });
        let si = *src_index.entry(s).or_insert_with(|| {
            src_rows.push(i);
            valid.push(HashSet::new());
            src_rows.len() - 1
        });
        valid[si].insert(ti);
    }
    if src_rows.is_empty() {
        return Err(Error::Empty("empty training dictionary".into()));
    }
    let sources = map.project_sources(&train.x_d.select_rows(&src_rows))?;
    let targets = map.project_targets(&train.y_d.select_rows(&tgt_rows))?;
    let retriever = Retriever::new(&sources, &targets, *cfg)?;
    let mut hits = 0usize;
    for (j, ok) in valid.iter().enumerate() {
        if retriever.top_k(j, 1)?.top().is_some_and(|t| ok.contains(&t)) {
            hits += 1;
        }
    }
    Ok(hits as f64 / valid.len() as f64)
}

/// Picks the retained rank with the best training precision@1; ties go to
/// the larger rank.
pub fn select_rank(
    map: &OrthogonalMap,
    train: &PairedMatrices,
    cfg: &RetrievalConfig,
    candidates: &[usize],
) -> Result<usize> {
    select_rank_fitted(&FittedMap::Orthogonal(map.clone()), train, cfg, candidates)
}

/// [`select_rank`] for any map with a rank parameter.
pub fn select_rank_fitted(
    map: &FittedMap,
    train: &PairedMatrices,
    cfg: &RetrievalConfig,
    candidates: &[usize],
) -> Result<usize> {
    if candidates.is_empty() {
        return Err(Error::invalid("candidates", "no candidate ranks"));
    }
    let d = map.dim();
    if let Some(bad) = candidates.iter().find(|&&k| k == 0 || k > d) {
        return Err(Error::invalid("candidates", format!("rank {bad} is outside [1, {d}]")));
    }
    let mut sorted = candidates.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    sorted.dedup();
    let mut best: Option<(usize, f64)> = None;
    for k in sorted {
        let p = training_precision(&map.with_rank(k)?, train, cfg)?;
        log::info!("rank {k}: training precision@1 {p:.4}");
        if best.is_none_or(|(_, bp)| p > bp) {
            best = Some((k, p));
        }
    }
    Ok(best.expect("candidates are non-empty").0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::matmul_nt;
    use crate::synthetic::{random_orthogonal, random_unit_rows};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn paired(x: DenseMatrix, y: DenseMatrix) -> PairedMatrices {
        let labels = (0..x.rows()).map(|i| (format!("s{i}"), format!("t{i}"))).collect();
        PairedMatrices::new(x, y, labels).unwrap()
    }

    #[test]
    fn rank_grid() {
        assert_eq!(default_rank_grid(300).first(), Some(&300));
        assert_eq!(default_rank_grid(300).last(), Some(&160));
        assert_eq!(default_rank_grid(50), vec![50, 30]);
        assert_eq!(default_rank_grid(1), vec![1]);
        assert_eq!(default_rank_grid(3), vec![3]);
    }

    #[test]
    fn noiseless_rotation_selects_full_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = random_orthogonal(30, &mut rng);
        let x = random_unit_rows(80, 30, &mut rng);
        let y = matmul_nt(&x, &r).unwrap();
        let p = paired(x, y);
        let map = fit_procrustes(&p).unwrap();
        let cfg = RetrievalConfig::default();
        assert_eq!(select_rank(&map, &p, &cfg, &[10, 20, 30]).unwrap(), 30);
        assert_eq!(select_rank(&map, &p, &cfg, &[20]).unwrap(), 20);
        assert_eq!(training_precision(&FittedMap::Orthogonal(map.clone()), &p, &cfg).unwrap(), 1.0);
        assert!(select_rank(&map, &p, &cfg, &[]).is_err());
        assert!(select_rank(&map, &p, &cfg, &[31]).is_err());
    }

    #[test]
    fn reversal_and_projection_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = random_unit_rows(40, 6, &mut rng);
        let y = random_unit_rows(40, 6, &mut rng);
        let p = paired(x.clone(), y.clone());
        for kind in [MapKind::Procrustes, MapKind::Lsq, MapKind::Cca] {
            let m = fit_map(kind, &p).unwrap();
            assert_eq!(m.kind(), kind);
            assert_eq!(m.dim(), 6);
            let px = m.project_sources(&x).unwrap();
            let py = m.project_targets(&y).unwrap();
            assert_eq!(px.cols(), py.cols());
            for row in px.row_iter().chain(py.row_iter()) {
                assert!((crate::numerics::norm(row) - 1.0).abs() < 1e-10);
            }
            match kind {
                MapKind::Lsq => assert!(m.reversed().is_err()),
                _ => {
                    let back = m.reversed().unwrap();
                    let a = m.project_sources(&x).unwrap();
                    let b = back.project_targets(&x).unwrap();
                    assert!(a.sub(&b).unwrap().max_abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn translation_pairs_with_several_targets_count_as_hits() {
        let x = DenseMatrix::from_rows(&[[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        let labels = vec![
            ("a".to_string(), "x".to_string()),
            ("a".to_string(), "x2".to_string()),
            ("b".to_string(), "y".to_string()),
        ];
        let p = PairedMatrices::new(x.clone(), x, labels).unwrap();
        let map = fit_map(MapKind::Procrustes, &p).unwrap();
        let prec = training_precision(&map, &p, &RetrievalConfig::default()).unwrap();
        assert_eq!(prec, 1.0);
    }
}
