//! Training dictionaries and their resolution to paired matrices.
//!
//! Three sources are supported: an expert TSV word list, the set of tokens
//! spelled identically in both vocabularies, and a line-aligned parallel
//! corpus whose sentence vectors act as dictionary entries. Out-of-vocabulary
//! material is always dropped and counted, never replaced by zero vectors.

use std::fmt;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embeddings::{open_text, read_line, EmbeddingSet, Vocabulary};
use crate::error::{Error, Result};
use crate::numerics::{axpy, norm, DenseMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Expert,
    Pseudo,
    Phrase,
    Custom,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Expert => "expert",
            Provenance::Pseudo => "pseudo",
            Provenance::Phrase => "phrase",
            Provenance::Custom => "custom",
        })
    }
}

/// Ordered (source, target) pairs. A source token may appear with several
/// targets.
#[derive(Debug, Clone, PartialEq)]
pub struct WordDictionary {
    pub pairs: Vec<(String, String)>,
    pub provenance: Provenance,
}

impl WordDictionary {
    pub fn new(pairs: Vec<(String, String)>, provenance: Provenance) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::Empty("dictionary has no pairs".into()));
        }
        Ok(Self { pairs, provenance })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Exchanges the source and target columns.
    pub fn swapped(&self) -> Self {
        Self {
            pairs: self.pairs.iter().map(|(s, t)| (t.clone(), s.clone())).collect(),
            provenance: self.provenance,
        }
    }

    pub fn truncate(&mut self, max_pairs: usize) {
        self.pairs.truncate(max_pairs);
    }
}

/// Counts reported when a dictionary is resolved against embeddings.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolveStats {
    pub total: usize,
    pub kept: usize,
    pub dropped_source: usize,
    pub dropped_target: usize,
}

impl fmt::Display for ResolveStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} of {} pairs kept ({} dropped for source, {} for target)",
            self.kept, self.total, self.dropped_source, self.dropped_target
        )
    }
}

/// Row-aligned dictionary matrices: row `i` of `x_d` and `y_d` are the
/// source and target vectors of the `i`th kept pair. Rows are unit norm.
#[derive(Debug, Clone)]
pub struct PairedMatrices {
    pub x_d: DenseMatrix,
    pub y_d: DenseMatrix,
    pub kept_pairs: Vec<(String, String)>,
    pub stats: ResolveStats,
}

impl PairedMatrices {
    pub fn new(x_d: DenseMatrix, y_d: DenseMatrix, kept_pairs: Vec<(String, String)>) -> Result<Self> {
        if x_d.shape() != y_d.shape() {
            return Err(Error::ShapeMismatch {
                op: "PairedMatrices::new",
                left: x_d.shape(),
                right: y_d.shape(),
            });
        }
        if kept_pairs.len() != x_d.rows() {
            return Err(Error::invalid(
                "kept_pairs",
                format!("{} labels for {} rows", kept_pairs.len(), x_d.rows()),
            ));
        }
        let n = x_d.rows();
        Ok(Self {
            x_d,
            y_d,
            kept_pairs,
            stats: ResolveStats {
                total: n,
                kept: n,
                ..Default::default()
            },
        })
    }

    pub fn n(&self) -> usize {
        self.x_d.rows()
    }

    pub fn dim(&self) -> usize {
        self.x_d.cols()
    }

    /// Source and target roles exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            x_d: self.y_d.clone(),
            y_d: self.x_d.clone(),
            kept_pairs: self.kept_pairs.iter().map(|(s, t)| (t.clone(), s.clone())).collect(),
            stats: ResolveStats {
                dropped_source: self.stats.dropped_target,
                dropped_target: self.stats.dropped_source,
                ..self.stats
            },
        }
    }

    /// At most `cap` pairs, drawn uniformly without replacement and kept in
    /// dictionary order. Returns a clone when `n <= cap`.
    pub fn subsample(&self, cap: usize, seed: u64) -> Self {
        if self.n() <= cap {
            return self.clone();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut idx = rand::seq::index::sample(&mut rng, self.n(), cap).into_vec();
        idx.sort_unstable();
        Self {
            x_d: self.x_d.select_rows(&idx),
            y_d: self.y_d.select_rows(&idx),
            kept_pairs: idx.iter().map(|&i| self.kept_pairs[i].clone()).collect(),
            stats: self.stats,
        }
    }
}

/// Line-aligned sentence pairs, already tokenised.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PhrasePairs {
    pub source_sentences: Vec<Vec<String>>,
    pub target_sentences: Vec<Vec<String>>,
}

impl PhrasePairs {
    pub fn count(&self) -> usize {
        self.source_sentences.len()
    }

    pub fn swapped(&self) -> Self {
        Self {
            source_sentences: self.target_sentences.clone(),
            target_sentences: self.source_sentences.clone(),
        }
    }
}

/// Reads `source<TAB>target` lines. Lines without a tab may instead hold
/// exactly two whitespace-separated tokens.
pub fn load_tsv_dictionary(path: impl AsRef<Path>) -> Result<WordDictionary> {
    let pairs = read_tsv_pairs(path.as_ref())?;
    WordDictionary::new(pairs, Provenance::Expert).map_err(|_| Error::Data {
        path: path.as_ref().to_owned(),
        reason: "dictionary is empty".into(),
    })
}

pub(crate) fn read_tsv_pairs(path: &Path) -> Result<Vec<(String, String)>> {
    let mut reader = open_text(path)?;
    let mut buf = Vec::new();
    let mut pairs = Vec::new();
    let mut line_no = 0;
    while let Some(line) = {
        line_no += 1;
        read_line(&mut *reader, &mut buf, path, line_no)?
    } {
        if line.trim().is_empty() {
            continue;
        }
        let mut parts: Box<dyn Iterator<Item = &str>> = if line.contains('\t') {
            Box::new(line.split('\t'))
        } else {
            Box::new(line.split_ascii_whitespace())
        };
        match (parts.next(), parts.next(), parts.next()) {
            (Some(s), Some(t), None) if !s.is_empty() && !t.is_empty() => {
                pairs.push((s.to_owned(), t.to_owned()));
            }
            _ => {
                return Err(Error::Parse {
                    path: path.to_owned(),
                    line: line_no,
                    reason: "expected a source and a target separated by one tab or by spaces".into(),
                })
            }
        }
    }
    Ok(pairs)
}

/// Every token spelled byte-identically in both vocabularies, paired with
/// itself, in source frequency order.
pub fn build_pseudo_dictionary(src: &Vocabulary, tgt: &Vocabulary) -> Result<WordDictionary> {
    let pairs: Vec<(String, String)> = src
        .words()
        .iter()
        .filter(|w| tgt.contains(w))
        .map(|w| (w.clone(), w.clone()))
        .collect();
    if pairs.is_empty() {
        return Err(Error::Empty(
            "no identical strings shared by the two vocabularies".into(),
        ));
    }
    log::info!("pseudo-dictionary: {} identical strings", pairs.len());
    WordDictionary::new(pairs, Provenance::Pseudo)
}

fn require_normalized(e: &EmbeddingSet, which: &'static str) -> Result<()> {
    if e.is_normalized() {
        Ok(())
    } else {
        Err(Error::invalid(which, "embedding set must be normalized first"))
    }
}

/// Looks up every pair; pairs with an out-of-vocabulary side are dropped and
/// counted. Kept pairs stay in dictionary order.
pub fn resolve(dict: &WordDictionary, src: &EmbeddingSet, tgt: &EmbeddingSet) -> Result<PairedMatrices> {
    require_normalized(src, "src")?;
    require_normalized(tgt, "tgt")?;
    if src.dim() != tgt.dim() {
        return Err(Error::ShapeMismatch {
            op: "resolve",
            left: src.matrix().shape(),
            right: tgt.matrix().shape(),
        });
    }
    let mut stats = ResolveStats {
        total: dict.len(),
        ..Default::default()
    };
    let mut src_rows = Vec::new();
    let mut tgt_rows = Vec::new();
    let mut kept = Vec::new();
    for (s, t) in &dict.pairs {
        let (si, ti) = (src.vocab().rank(s), tgt.vocab().rank(t));
        if si.is_none() {
            stats.dropped_source += 1;
        }
        if ti.is_none() {
            stats.dropped_target += 1;
        }
        if let (Some(si), Some(ti)) = (si, ti) {
            src_rows.push(si);
            tgt_rows.push(ti);
            kept.push((s.clone(), t.clone()));
        }
    }
    stats.kept = kept.len();
    log::info!("{} dictionary: {stats}", dict.provenance);
    if kept.is_empty() {
        return Err(Error::Empty(format!("every dictionary pair was dropped: {stats}")));
    }
    Ok(PairedMatrices {
        x_d: src.matrix().select_rows(&src_rows),
        y_d: tgt.matrix().select_rows(&tgt_rows),
        kept_pairs: kept,
        stats,
    })
}

/// Normalised sum of the in-vocabulary word vectors of a sentence. `None`
/// when nothing is in vocabulary or the sum vanishes.
pub fn sentence_vector<S: AsRef<str>>(tokens: &[S], e: &EmbeddingSet) -> Option<Vec<f64>> {
    let mut sum = vec![0.0; e.dim()];
    let mut hits = 0;
    for t in tokens {
        if let Some(v) = e.lookup(t.as_ref()) {
            axpy(1.0, v, &mut sum);
            hits += 1;
        }
    }
    if hits == 0 {
        return None;
    }
    let n = norm(&sum);
    if n < 1e-10 || !n.is_finite() {
        return None;
    }
    sum.iter_mut().for_each(|v| *v /= n);
    Some(sum)
}

/// Lowercase, then split on ASCII whitespace.
pub fn tokenize(line: &str) -> Vec<String> {
    line.split_ascii_whitespace().map(str::to_lowercase).collect()
}

/// Reads two line-aligned files: skips `skip` leading lines, then keeps up
/// to `max_pairs` pairs, stopping early at the shorter file.
pub fn load_aligned_corpus(
    src_path: impl AsRef<Path>,
    tgt_path: impl AsRef<Path>,
    max_pairs: usize,
    skip: usize,
) -> Result<PhrasePairs> {
    let (sp, tp) = (src_path.as_ref(), tgt_path.as_ref());
    let mut src = open_text(sp)?;
    let mut tgt = open_text(tp)?;
    let (mut sbuf, mut tbuf) = (Vec::new(), Vec::new());
    let mut pairs = PhrasePairs::default();
    let mut line_no = 0;
    while pairs.count() < max_pairs {
        line_no += 1;
        let s = read_line(&mut *src, &mut sbuf, sp, line_no)?;
        let t = read_line(&mut *tgt, &mut tbuf, tp, line_no)?;
        let (Some(s), Some(t)) = (s, t) else {
            break;
        };
        if line_no <= skip {
            continue;
        }
        pairs.source_sentences.push(tokenize(&s));
        pairs.target_sentences.push(tokenize(&t));
    }
    if pairs.count() == 0 {
        return Err(Error::Data {
            path: sp.to_owned(),
            reason: format!("no aligned sentence pairs after skipping {skip} lines"),
        });
    }
    log::info!("aligned corpus: {} pairs (skipped {skip})", pairs.count());
    Ok(pairs)
}

/// Statistics for a phrase dictionary build.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PhraseStats {
    pub total: usize,
    pub kept: usize,
    pub empty_source: usize,
    pub empty_target: usize,
}

/// Sentence vectors of each aligned pair, dropping pairs where either side
/// has no in-vocabulary token.
pub fn build_phrase_matrices(p: &PhrasePairs, src: &EmbeddingSet, tgt: &EmbeddingSet) -> Result<PairedMatrices> {
    let (matrices, _) = phrase_matrices_with_index(p, src, tgt)?;
    Ok(matrices)
}

/// As [`build_phrase_matrices`], also returning the corpus index of every
/// kept row.
pub(crate) fn phrase_matrices_with_index(
    p: &PhrasePairs,
    src: &EmbeddingSet,
    tgt: &EmbeddingSet,
) -> Result<(PairedMatrices, Vec<usize>)> {
    require_normalized(src, "src")?;
    require_normalized(tgt, "tgt")?;
    if src.dim() != tgt.dim() {
        return Err(Error::ShapeMismatch {
            op: "build_phrase_matrices",
            left: src.matrix().shape(),
            right: tgt.matrix().shape(),
        });
    }
    let d = src.dim();
    let mut stats = PhraseStats {
        total: p.count(),
        ..Default::default()
    };
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut kept_pairs = Vec::new();
    let mut index = Vec::new();
    for (i, (s, t)) in p.source_sentences.iter().zip(&p.target_sentences).enumerate() {
        let sv = sentence_vector(s, src);
        let tv = sentence_vector(t, tgt);
        if sv.is_none() {
            stats.empty_source += 1;
        }
        if tv.is_none() {
            stats.empty_target += 1;
        }
        if let (Some(sv), Some(tv)) = (sv, tv) {
            xs.extend(sv);
            ys.extend(tv);
            kept_pairs.push((s.join(" "), t.join(" ")));
            index.push(i);
        }
    }
    stats.kept = kept_pairs.len();
    log::info!(
        "phrase dictionary: {} of {} pairs kept ({} empty source, {} empty target)",
        stats.kept,
        stats.total,
        stats.empty_source,
        stats.empty_target
    );
    if stats.kept == 0 {
        return Err(Error::Empty(format!(
            "every sentence pair was dropped ({} pairs, {} empty source, {} empty target)",
            stats.total, stats.empty_source, stats.empty_target
        )));
    }
    let n = stats.kept;
    let matrices = PairedMatrices {
        x_d: DenseMatrix::new(n, d, xs)?,
        y_d: DenseMatrix::new(n, d, ys)?,
        kept_pairs,
        stats: ResolveStats {
            total: stats.total,
            kept: stats.kept,
            dropped_source: stats.empty_source,
            dropped_target: stats.empty_target,
        },
    };
    Ok((matrices, index))
}
