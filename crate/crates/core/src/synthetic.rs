//! Synthetic bilingual data with a known ground-truth rotation, used by the
//! tests, the acceptance suite and the examples.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::dictionary::{PhrasePairs, Provenance, WordDictionary};
use crate::embeddings::{EmbeddingSet, Vocabulary};
use crate::error::{Error, Result};
use crate::numerics::{matmul_nt, DenseMatrix, HouseholderQr};

/// Haar-distributed random orthogonal matrix: QR of a Gaussian matrix with
/// the signs of `R`'s diagonal folded into `Q`.
pub fn random_orthogonal<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DenseMatrix {
    let g = DenseMatrix::from_fn(d, d, |_, _| StandardNormal.sample(rng)).expect("finite gaussian");
    let qr = HouseholderQr::new(&g).expect("square input");
    let q = qr.thin_q();
    let r = qr.r();
    DenseMatrix::from_fn(d, d, |i, j| if r.get(j, j) < 0.0 { -q.get(i, j) } else { q.get(i, j) })
        .expect("finite")
}

/// `n` rows drawn uniformly from the unit sphere in `d` dimensions.
pub fn random_unit_rows<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> DenseMatrix {
    loop {
        let g = DenseMatrix::from_fn(n, d, |_, _| StandardNormal.sample(rng)).expect("finite gaussian");
        if let Ok(m) = g.normalize_rows() {
            return m;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticConfig {
    pub vocab: usize,
    pub dim: usize,
    /// Gaussian noise per component, added before renormalisation.
    pub noise: f64,
    pub train_pairs: usize,
    pub test_pairs: usize,
    /// Fraction of training pairs whose target is replaced by a random word.
    pub mispair_fraction: f64,
    /// Fraction of words spelled identically in both languages.
    pub shared_fraction: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            vocab: 2000,
            dim: 50,
            noise: 0.1,
            train_pairs: 500,
            test_pairs: 300,
            mispair_fraction: 0.0,
            shared_fraction: 0.0,
            seed: 42,
        }
    }
}

/// Two vocabularies related by a rotation: target word `i` is the
/// translation of source word `i`, with vector `normalize(R xᵢ + noise)`.
#[derive(Debug, Clone)]
pub struct SyntheticTask {
    pub src: EmbeddingSet,
    pub tgt: EmbeddingSet,
    pub rotation: DenseMatrix,
    pub train: WordDictionary,
    /// Held-out (source, target) pairs disjoint from the training words.
    pub test: Vec<(String, String)>,
}

impl SyntheticTask {
    pub fn generate(cfg: &SyntheticConfig) -> Result<Self> {
        if cfg.train_pairs + cfg.test_pairs > cfg.vocab {
            return Err(Error::invalid("vocab", "train and test pairs exceed the vocabulary"));
        }
        if !(0.0..=1.0).contains(&cfg.mispair_fraction) || !(0.0..=1.0).contains(&cfg.shared_fraction) {
            return Err(Error::invalid("fraction", "fractions must lie in [0, 1]"));
        }
        let noise = Normal::new(0.0, cfg.noise).map_err(|e| Error::invalid("noise", e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let rotation = random_orthogonal(cfg.dim, &mut rng);
        let x = random_unit_rows(cfg.vocab, cfg.dim, &mut rng);
        let rx = matmul_nt(&x, &rotation)?;
        let y = DenseMatrix::from_fn(cfg.vocab, cfg.dim, |i, j| rx.get(i, j) + noise.sample(&mut rng))?
            .normalize_rows()
            .map_err(|row| Error::ZeroNorm(format!("synthetic target {row}")))?;

        let mut src_words = Vec::with_capacity(cfg.vocab);
        let mut tgt_words = Vec::with_capacity(cfg.vocab);
        for i in 0..cfg.vocab {
            if rng.random_bool(cfg.shared_fraction) {
                src_words.push(format!("w{i}"));
                tgt_words.push(format!("w{i}"));
            } else {
                src_words.push(format!("s{i}"));
                tgt_words.push(format!("t{i}"));
            }
        }

        let mut order: Vec<usize> = (0..cfg.vocab).collect();
        order.shuffle(&mut rng);
        let mut train: Vec<(String, String)> = order[..cfg.train_pairs]
            .iter()
            .map(|&i| (src_words[i].clone(), tgt_words[i].clone()))
            .collect();
        let n_bad = (cfg.mispair_fraction * cfg.train_pairs as f64).round() as usize;
        let bad = rand::seq::index::sample(&mut rng, cfg.train_pairs, n_bad).into_vec();
        for b in bad {
            let truth = order[b];
            let mut wrong = rng.random_range(0..cfg.vocab - 1);
            if wrong >= truth {
                wrong += 1;
            }
            train[b].1 = tgt_words[wrong].clone();
        }
        let test = order[cfg.train_pairs..cfg.train_pairs + cfg.test_pairs]
            .iter()
            .map(|&i| (src_words[i].clone(), tgt_words[i].clone()))
            .collect();

        let src = EmbeddingSet::new(vocab(src_words)?, x)?.normalize_rows()?;
        let tgt = EmbeddingSet::new(vocab(tgt_words)?, y)?.normalize_rows()?;
        Ok(Self {
            src,
            tgt,
            rotation,
            train: WordDictionary::new(train, Provenance::Custom)?,
            test,
        })
    }

    /// A line-aligned corpus: each source sentence is a random run of source
    /// words and its mate the same run of target translations.
    pub fn corpus(&self, sentences: usize, length: usize, seed: u64) -> PhrasePairs {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.src.len();
        let mut out = PhrasePairs::default();
        for _ in 0..sentences {
            let idx: Vec<usize> = (0..length).map(|_| rng.random_range(0..n)).collect();
            out.source_sentences
                .push(idx.iter().map(|&i| self.src.vocab().word(i).to_string()).collect());
            out.target_sentences
                .push(idx.iter().map(|&i| self.tgt.vocab().word(i).to_string()).collect());
        }
        out
    }
}

fn vocab(words: Vec<String>) -> Result<Vocabulary> {
    Vocabulary::new(words).map_err(|w| Error::invalid("vocab", format!("duplicate word {w}")))
}

/// A small instance where one target sits near the centroid of the
/// sources and is every source's nearest neighbour, although each source
/// has its own true translation.
#[derive(Debug, Clone)]
pub struct HubInstance {
    pub sources: DenseMatrix,
    pub targets: DenseMatrix,
    /// `truth[j]` is the target index translating source `j`.
    pub truth: Vec<usize>,
    pub hub: usize,
}

/// Sources are `e₁, e₂, e₃` in four dimensions. Target `i` is
/// `0.5 eᵢ + (√3/2) e₄` (cosine 0.5 with its source) and the hub is
/// `(e₁ + e₂ + e₃)/√3` (cosine 1/√3 ≈ 0.577 with every source).
pub fn hub_instance() -> HubInstance {
    let h = 3f64.sqrt().recip();
    let c = 3f64.sqrt() / 2.0;
    let sources = DenseMatrix::from_rows(&[[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]])
        .expect("finite");
    let targets = DenseMatrix::from_rows(&[[0.5, 0.0, 0.0, c], [0.0, 0.5, 0.0, c], [0.0, 0.0, 0.5, c], [h, h, h, 0.0]])
        .expect("finite");
    HubInstance {
        sources,
        targets,
        truth: vec![0, 1, 2],
        hub: 3,
    }
}
