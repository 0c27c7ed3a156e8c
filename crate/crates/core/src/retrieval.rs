//! Translation retrieval in the shared space.
//!
//! Rows of `sources` and `targets` are unit vectors that already live in the
//! shared space, so `S[i][j] = targets[i] · sources[j]` is a cosine
//! similarity. Three rankings are available: nearest neighbour, the
//! conventional softmax over targets, and the inverted softmax, which
//! normalises each candidate target over a random sample of source words and
//! so penalises hubs.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::alignment::FittedMap;
use crate::dictionary::PairedMatrices;
use crate::error::{Error, Result};
use crate::numerics::{dot, norm, DenseMatrix};

pub const DEFAULT_SAMPLE_SIZE: usize = 1500;
pub const SENTENCE_SAMPLE_SIZE: usize = 12800;
pub const DEFAULT_BETA_MAX: f64 = 200.0;
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[value(name = "nn")]
    Nn,
    #[value(name = "softmax")]
    Softmax,
    #[value(name = "isf", alias = "inverted-softmax", alias = "inverted_softmax")]
    InvertedSoftmax,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Method::Nn => "nn",
            Method::Softmax => "softmax",
            Method::InvertedSoftmax => "inverted_softmax",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetrievalConfig {
    pub method: Method,
    /// Inverse temperature.
    pub beta: f64,
    /// Number of source rows sampled for the inverted denominator.
    pub n_s: usize,
    pub seed: u64,
    pub beta_max: f64,
    /// Draw one denominator sample for every query instead of one per query.
    pub global_sample: bool,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        Self {
            method: Method::Nn,
            beta: 1.0,
            n_s: DEFAULT_SAMPLE_SIZE,
            seed: DEFAULT_SEED,
            beta_max: DEFAULT_BETA_MAX,
            global_sample: false,
        }
    }
}

impl RetrievalConfig {
    pub fn with_method(method: Method) -> Self {
        Self {
            method,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta_max > 0.0 && self.beta_max.is_finite()) {
            return Err(Error::invalid("beta_max", format!("{} is not a positive finite number", self.beta_max)));
        }
        if !(self.beta > 0.0 && self.beta <= self.beta_max) {
            return Err(Error::invalid(
                "beta",
                format!("{} is outside (0, {}]", self.beta, self.beta_max),
            ));
        }
        if self.n_s == 0 {
            return Err(Error::invalid("n_s", "sample size must be at least 1"));
        }
        Ok(())
    }
}

/// Candidates ordered by descending score, ties by ascending index.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredCandidates {
    pub indices: Vec<usize>,
    pub scores: Vec<f64>,
}

impl ScoredCandidates {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn top(&self) -> Option<usize> {
        self.indices.first().copied()
    }
}

fn check_query(query: &[f64], dim: usize) -> Result<()> {
    if query.len() != dim {
        return Err(Error::ShapeMismatch {
            op: "similarity_scores",
            left: (1, query.len()),
            right: (0, dim),
        });
    }
    let n = norm(query);
    if n == 0.0 || !n.is_finite() {
        return Err(Error::ZeroNorm("retrieval query".into()));
    }
    if (n - 1.0).abs() > 1e-6 {
        return Err(Error::invalid("query", format!("expected a unit vector, norm is {n}")));
    }
    Ok(())
}

/// Cosine similarity of a unit query against every unit target row.
pub fn similarity_scores(query: &[f64], targets: &DenseMatrix) -> Result<Vec<f64>> {
    check_query(query, targets.cols())?;
    Ok(targets.row_iter().map(|t| dot(t, query)).collect())
}

/// Picks the `k` best entries by `(key desc, index asc)`.
pub(crate) fn top_k_by(keys: &[f64], k: usize) -> Vec<usize> {
    let k = k.min(keys.len());
    if k == 0 {
        return Vec::new();
    }
    let cmp = |a: &usize, b: &usize| keys[*b].total_cmp(&keys[*a]).then(a.cmp(b));
    let mut idx: Vec<usize> = (0..keys.len()).collect();
    if k < idx.len() {
        idx.select_nth_unstable_by(k - 1, cmp);
        idx.truncate(k);
    }
    idx.sort_unstable_by(cmp);
    idx
}

fn clamp_top_k(top_k: usize, n: usize) -> Result<usize> {
    if top_k == 0 {
        return Err(Error::invalid("top_k", "must be at least 1"));
    }
    if top_k > n {
        log::warn!("top_k = {top_k} exceeds the {n} available targets; clamping");
    }
    Ok(top_k.min(n))
}

pub fn retrieve_nn(query: &[f64], targets: &DenseMatrix, top_k: usize) -> Result<ScoredCandidates> {
    let scores = similarity_scores(query, targets)?;
    let k = clamp_top_k(top_k, scores.len())?;
    let indices = top_k_by(&scores, k);
    Ok(ScoredCandidates {
        scores: indices.iter().map(|&i| scores[i]).collect(),
        indices,
    })
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + values.map(|v| (v - m).exp()).sum::<f64>().ln()
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

fn check_pool(j: usize, sources: &DenseMatrix, targets: &DenseMatrix) -> Result<()> {
    if sources.cols() != targets.cols() {
        return Err(Error::ShapeMismatch {
            op: "retrieval",
            left: sources.shape(),
            right: targets.shape(),
        });
    }
    if j >= sources.rows() {
        return Err(Error::invalid("query", format!("source row {j} out of range ({} rows)", sources.rows())));
    }
    if targets.rows() == 0 {
        return Err(Error::Empty("no retrieval targets".into()));
    }
    Ok(())
}

/// `P(i | j) = exp(β S_ij) / Σ_m exp(β S_mj)` over every target row.
pub fn softmax_confidence(
    j: usize,
    sources: &DenseMatrix,
    targets: &DenseMatrix,
    cfg: &RetrievalConfig,
) -> Result<Vec<f64>> {
    check_pool(j, sources, targets)?;
    let query = sources.row(j);
    let logits: Vec<f64> = targets.row_iter().map(|t| cfg.beta * dot(t, query)).collect();
    let lse = log_sum_exp(logits.iter().copied());
    Ok(logits.into_iter().map(|l| (l - lse).exp()).collect())
}

/// Seed for query `index`'s private random stream.
pub fn stream_seed(seed: u64, index: u64) -> u64 {
    fn splitmix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    splitmix(seed ^ splitmix(index))
}

fn draw_sample(n_sources: usize, n_s: usize, seed: u64) -> Vec<usize> {
    if n_s >= n_sources {
        return (0..n_sources).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = rand::seq::index::sample(&mut rng, n_sources, n_s).into_vec();
    idx.sort_unstable();
    idx
}

/// Source rows entering query `j`'s inverted denominator: `n_s` rows drawn
/// without replacement (from the query's own stream, or the shared stream
/// in global mode), always including `j`. Sorted.
pub fn denominator_sample(n_sources: usize, j: usize, cfg: &RetrievalConfig) -> Vec<usize> {
    let seed = if cfg.global_sample {
        cfg.seed
    } else {
        stream_seed(cfg.seed, j as u64)
    };
    let mut sample = draw_sample(n_sources, cfg.n_s, seed);
    if let Err(pos) = sample.binary_search(&j) {
        sample.insert(pos, j);
    }
    sample
}

/// Log of `lse_n(β S_in)` for every target `i` over the given source rows.
fn target_log_denominators(sample: &DenseMatrix, targets: &DenseMatrix, beta: f64) -> Vec<f64> {
    let mut logits = vec![0.0; sample.rows()];
    targets
        .row_iter()
        .map(|t| {
            for (l, s) in logits.iter_mut().zip(sample.row_iter()) {
                *l = beta * dot(t, s);
            }
            log_sum_exp(logits.iter().copied())
        })
        .collect()
}

/// Inverted softmax for source row `j`, in log space:
/// `β S_ij − ln Σ_{n ∈ sample} exp(β S_in)`.
///
/// The per-query normaliser α_j is left out, so these are unnormalised
/// log-scores, not log-probabilities; rankings are unaffected.
pub fn inverted_softmax_scores(
    j: usize,
    sources: &DenseMatrix,
    targets: &DenseMatrix,
    cfg: &RetrievalConfig,
) -> Result<Vec<f64>> {
    check_pool(j, sources, targets)?;
    let sample = denominator_sample(sources.rows(), j, cfg);
    let sample_rows = sources.select_rows(&sample);
    let denom = target_log_denominators(&sample_rows, targets, cfg.beta);
    let query = sources.row(j);
    Ok(targets
        .row_iter()
        .zip(denom)
        .map(|(t, d)| cfg.beta * dot(t, query) - d)
        .collect())
}

/// Batch scorer over fixed source and target pools. In global-sample mode
/// the inverted denominators are computed once and reused by every query.
pub struct Retriever<'a> {
    sources: &'a DenseMatrix,
    targets: &'a DenseMatrix,
    cfg: RetrievalConfig,
    global: Option<GlobalDenominators>,
}

struct GlobalDenominators {
    sample: Vec<usize>,
    log_denom: Vec<f64>,
}

impl<'a> Retriever<'a> {
    pub fn new(sources: &'a DenseMatrix, targets: &'a DenseMatrix, cfg: RetrievalConfig) -> Result<Self> {
        cfg.validate()?;
        if sources.cols() != targets.cols() {
            return Err(Error::ShapeMismatch {
                op: "Retriever::new",
                left: sources.shape(),
                right: targets.shape(),
            });
        }
        if targets.rows() == 0 || sources.rows() == 0 {
            return Err(Error::Empty("retrieval pool is empty".into()));
        }
        let global = (cfg.method == Method::InvertedSoftmax && cfg.global_sample).then(|| {
            let sample = draw_sample(sources.rows(), cfg.n_s, cfg.seed);
            let log_denom = target_log_denominators(&sources.select_rows(&sample), targets, cfg.beta);
            GlobalDenominators { sample, log_denom }
        });
        Ok(Self {
            sources,
            targets,
            cfg,
            global,
        })
    }

    pub fn config(&self) -> &RetrievalConfig {
        &self.cfg
    }

    pub fn n_targets(&self) -> usize {
        self.targets.rows()
    }

    /// Ranking keys for source row `j` over every target. Nearest neighbour
    /// and softmax both rank by cosine (the softmax is monotone in it); the
    /// inverted softmax ranks by its log-score.
    pub fn ranking_keys(&self, j: usize) -> Result<Vec<f64>> {
        check_pool(j, self.sources, self.targets)?;
        match self.cfg.method {
            Method::Nn | Method::Softmax => {
                let q = self.sources.row(j);
                Ok(self.targets.row_iter().map(|t| dot(t, q)).collect())
            }
            Method::InvertedSoftmax => match &self.global {
                None => inverted_softmax_scores(j, self.sources, self.targets, &self.cfg),
                Some(g) => {
                    let q = self.sources.row(j);
                    let in_sample = g.sample.binary_search(&j).is_ok();
                    Ok(self
                        .targets
                        .row_iter()
                        .zip(&g.log_denom)
                        .map(|(t, d)| {
                            let logit = self.cfg.beta * dot(t, q);
                            let denom = if in_sample { *d } else { log_add_exp(*d, logit) };
                            logit - denom
                        })
                        .collect())
                }
            },
        }
    }

    /// Top `k` targets for source row `j`. Scores are cosines for nearest
    /// neighbour, probabilities for the softmax, log-scores for the inverted
    /// softmax.
    pub fn top_k(&self, j: usize, k: usize) -> Result<ScoredCandidates> {
        let keys = self.ranking_keys(j)?;
        let k = clamp_top_k(k, keys.len())?;
        let indices = top_k_by(&keys, k);
        let scores = match self.cfg.method {
            Method::Softmax => {
                let logits: Vec<f64> = keys.iter().map(|s| self.cfg.beta * s).collect();
                let lse = log_sum_exp(logits.iter().copied());
                indices.iter().map(|&i| (logits[i] - lse).exp()).collect()
            }
            _ => indices.iter().map(|&i| keys[i]).collect(),
        };
        Ok(ScoredCandidates { indices, scores })
    }
}

/// For every target, how many source rows retrieve it first under `cfg`.
pub fn hub_counts(sources: &DenseMatrix, targets: &DenseMatrix, cfg: &RetrievalConfig) -> Result<Vec<usize>> {
    let r = Retriever::new(sources, targets, *cfg)?;
    let mut counts = vec![0; targets.rows()];
    for j in 0..sources.rows() {
        let keys = r.ranking_keys(j)?;
        counts[top_k_by(&keys, 1)[0]] += 1;
    }
    Ok(counts)
}

/// Result of fitting the inverse temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaFit {
    pub beta: f64,
    /// The optimum sits at the `beta_max` cap.
    pub diverged: bool,
    pub objective: f64,
}

/// Log-likelihood of the valid pairs as a function of β.
///
/// Pair `j` has source `j` and target `j`; `sim[i * n + j] = S_ij`.
pub struct BetaObjective {
    n: usize,
    sim: Vec<f64>,
    method: Method,
}

impl BetaObjective {
    pub fn new(sources: &DenseMatrix, targets: &DenseMatrix, method: Method) -> Result<Self> {
        if method == Method::Nn {
            return Err(Error::invalid("method", "nearest neighbour has no temperature"));
        }
        if sources.shape() != targets.shape() {
            return Err(Error::ShapeMismatch {
                op: "BetaObjective::new",
                left: sources.shape(),
                right: targets.shape(),
            });
        }
        let n = sources.rows();
        if n < 2 {
            return Err(Error::invalid("train", "fitting beta needs at least two pairs"));
        }
        let mut sim = Vec::with_capacity(n * n);
        for t in targets.row_iter() {
            sim.extend(sources.row_iter().map(|s| dot(t, s)));
        }
        Ok(Self { n, sim, method })
    }

    /// Sum over valid pairs of `ln P(j → j)`.
    pub fn value(&self, beta: f64) -> Result<f64> {
        let n = self.n;
        let s = |i: usize, j: usize| self.sim[i * n + j];
        let total = match self.method {
            Method::Nn => unreachable!("rejected in new"),
            Method::Softmax => (0..n)
                .map(|j| beta * s(j, j) - log_sum_exp((0..n).map(|m| beta * s(m, j))))
                .sum::<f64>(),
            Method::InvertedSoftmax => {
                // row normalisers over sources, then α_j over targets
                let row_lse: Vec<f64> = (0..n)
                    .map(|i| log_sum_exp(self.sim[i * n..(i + 1) * n].iter().map(|v| beta * v)))
                    .collect();
                (0..n)
                    .map(|j| {
                        let log_alpha = log_sum_exp((0..n).map(|i| beta * s(i, j) - row_lse[i]));
                        beta * s(j, j) - row_lse[j] - log_alpha
                    })
                    .sum::<f64>()
            }
        };
        if total.is_finite() {
            Ok(total)
        } else {
            Err(Error::NonFiniteObjective { beta })
        }
    }
}

const BETA_GRID: usize = 40;
const GOLDEN_TOLERANCE: f64 = 1e-7;

/// Maximises the training log-likelihood over β ∈ (0, beta_max]: a coarse
/// grid brackets the optimum, golden-section search refines it.
pub fn maximize_beta(objective: &BetaObjective, beta_max: f64) -> Result<BetaFit> {
    if !(beta_max > 0.0 && beta_max.is_finite()) {
        return Err(Error::invalid("beta_max", format!("{beta_max} is not a positive finite number")));
    }
    let step = beta_max / BETA_GRID as f64;
    let mut best = (0usize, f64::NEG_INFINITY);
    for g in 1..=BETA_GRID {
        let v = objective.value(step * g as f64)?;
        if v > best.1 {
            best = (g, v);
        }
    }
    let (mut lo, mut hi) = (step * (best.0 - 1) as f64, (step * (best.0 + 1) as f64).min(beta_max));
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let mut f1 = objective.value(x1.max(f64::MIN_POSITIVE))?;
    let mut f2 = objective.value(x2)?;
    while hi - lo > GOLDEN_TOLERANCE * beta_max.max(1.0) {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = objective.value(x2)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = objective.value(x1.max(f64::MIN_POSITIVE))?;
        }
    }
    let beta = (0.5 * (lo + hi)).max(f64::MIN_POSITIVE);
    let value = objective.value(beta)?;
    let at_cap = objective.value(beta_max)?;
    if at_cap >= value || beta >= beta_max * (1.0 - 1e-6) {
        return Ok(BetaFit {
            beta: beta_max,
            diverged: true,
            objective: at_cap,
        });
    }
    Ok(BetaFit {
        beta,
        diverged: false,
        objective: value,
    })
}

/// Fits β for `method` on the training dictionary mapped into the shared
/// space. Targets and (for the inverted form) denominator sources are the
/// dictionary's own rows.
pub fn fit_beta(
    train: &PairedMatrices,
    map: &FittedMap,
    cfg_template: &RetrievalConfig,
    method: Method,
) -> Result<BetaFit> {
    let sources = map.project_sources(&train.x_d)?;
    let targets = map.project_targets(&train.y_d)?;
    let objective = BetaObjective::new(&sources, &targets, method)?;
    let fit = maximize_beta(&objective, cfg_template.beta_max)?;
    log::info!(
        "fitted beta = {:.4} for {method}{}",
        fit.beta,
        if fit.diverged { " (diverged to beta_max)" } else { "" }
    );
    Ok(fit)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_rows(rows: &[&[f64]]) -> DenseMatrix {
        DenseMatrix::from_rows(rows).unwrap().normalize_rows().unwrap()
    }

    #[test]
    fn similarity_basics() {
        let t = unit_rows(&[&[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0]]);
        let s = similarity_scores(t.row(2), &t).unwrap();
        assert!((s[2] - 1.0).abs() < 1e-9);
        let s = similarity_scores(&[1.0, 0.0], &t).unwrap();
        assert!(s[1].abs() < 1e-9);
        assert!(matches!(similarity_scores(&[0.0, 0.0], &t), Err(Error::ZeroNorm(_))));
        assert!(similarity_scores(&[2.0, 0.0], &t).is_err());
    }

    #[test]
    fn nn_on_standard_basis() {
        let t = DenseMatrix::identity(5);
        let r = retrieve_nn(t.row(2), &t, 1).unwrap();
        assert_eq!(r.indices, vec![2]);
    }

    #[test]
    fn nn_tie_goes_to_lower_index() {
        let mut rows = vec![vec![0.0, 1.0]; 8];
        rows[4] = vec![1.0, 0.0];
        rows[7] = vec![1.0, 0.0];
        let t = DenseMatrix::from_rows(&rows).unwrap();
        let r = retrieve_nn(&[1.0, 0.0], &t, 3).unwrap();
        assert_eq!(&r.indices[..2], &[4, 7]);
        assert_eq!(r.indices[2], 0);
    }

    #[test]
    fn nn_clamps_top_k() {
        let t = DenseMatrix::identity(3);
        assert_eq!(retrieve_nn(t.row(0), &t, 10).unwrap().len(), 3);
        assert!(retrieve_nn(t.row(0), &t, 0).is_err());
    }

    #[test]
    fn softmax_closed_form() {
        let sources = DenseMatrix::from_rows(&[[1.0, 0.0]]).unwrap();
        let targets = DenseMatrix::from_rows(&[[1.0, 0.0], [0.0, 1.0]]).unwrap();
        let cfg = RetrievalConfig {
            method: Method::Softmax,
            beta: 9f64.ln(),
            ..Default::default()
        };
        let p = softmax_confidence(0, &sources, &targets, &cfg).unwrap();
        assert!((p[0] - 0.9).abs() < 1e-9 && (p[1] - 0.1).abs() < 1e-9);
    }

    #[test]
    fn softmax_tiny_beta_is_uniform() {
        let sources = unit_rows(&[&[1.0, 2.0, 3.0]]);
        let targets = unit_rows(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0], &[1.0, 1.0, 1.0]]);
        let cfg = RetrievalConfig {
            method: Method::Softmax,
            beta: 1e-9,
            ..Default::default()
        };
        let p = softmax_confidence(0, &sources, &targets, &cfg).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(p.iter().all(|v| (v - 0.25).abs() < 1e-6));
    }

    #[test]
    fn log_helpers() {
        assert!((log_add_exp(0.0, 0.0) - 2f64.ln()).abs() < 1e-15);
        assert!((log_sum_exp([1000.0, 1000.0].into_iter()) - (1000.0 + 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn sample_includes_query_and_is_deterministic() {
        let cfg = RetrievalConfig {
            n_s: 10,
            seed: 3,
            ..Default::default()
        };
        for j in [0, 17, 99] {
            let a = denominator_sample(100, j, &cfg);
            assert_eq!(a, denominator_sample(100, j, &cfg));
            assert!(a.binary_search(&j).is_ok());
            assert!(a.len() == 10 || a.len() == 11);
            assert!(a.windows(2).all(|w| w[0] < w[1]));
        }
        assert_ne!(denominator_sample(100, 1, &cfg), denominator_sample(100, 2, &cfg));
        let all = RetrievalConfig { n_s: 500, ..cfg };
        assert_eq!(denominator_sample(100, 5, &all), (0..100).collect::<Vec<_>>());
    }

    #[test]
    fn global_mode_matches_direct_formula() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let sources = DenseMatrix::from_fn(30, 4, |_, _| rng.random_range(-1.0..1.0)).unwrap().normalize_rows().unwrap();
        let targets = DenseMatrix::from_fn(12, 4, |_, _| rng.random_range(-1.0..1.0)).unwrap().normalize_rows().unwrap();
        let cfg = RetrievalConfig {
            method: Method::InvertedSoftmax,
            beta: 7.0,
            n_s: 9,
            global_sample: true,
            ..Default::default()
        };
        let r = Retriever::new(&sources, &targets, cfg).unwrap();
        for j in 0..30 {
            let got = r.ranking_keys(j).unwrap();
            let sample = denominator_sample(30, j, &cfg);
            for (i, g) in got.iter().enumerate() {
                let t = targets.row(i);
                let denom: f64 = sample.iter().map(|&n| (cfg.beta * dot(t, sources.row(n))).exp()).sum();
                let expected = cfg.beta * dot(t, sources.row(j)) - denom.ln();
                assert!((g - expected).abs() < 1e-12, "{g} vs {expected}");
            }
        }
    }

    #[test]
    fn config_validation() {
        assert!(RetrievalConfig::default().validate().is_ok());
        let bad = RetrievalConfig { beta: 0.0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = RetrievalConfig { beta: 300.0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = RetrievalConfig { n_s: 0, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn top_k_helpers_agree_with_full_sort() {
        let keys = [0.3, 0.9, 0.3, -1.0, 0.9, 0.5];
        assert_eq!(top_k_by(&keys, 4), vec![1, 4, 5, 0]);
        assert_eq!(top_k_by(&keys, 100).len(), 6);
    }

    #[test]
    fn nn_has_no_beta() {
        let m = DenseMatrix::identity(2);
        assert!(BetaObjective::new(&m, &m, Method::Nn).is_err());
    }
}
