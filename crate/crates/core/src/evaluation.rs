//! Translation precision@k on word test sets and the sentence retrieval
//! experiment, with JSON and TSV reports.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alignment::FittedMap;
use crate::dictionary::{phrase_matrices_with_index, read_tsv_pairs, PhrasePairs};
use crate::embeddings::{EmbeddingSet, Vocabulary};
use crate::error::{Error, Result};
use crate::retrieval::{Method, RetrievalConfig, Retriever};

pub const REPORT_FORMAT_VERSION: u32 = 1;
pub const DEFAULT_KS: [usize; 3] = [1, 5, 10];

const BIN_EDGES: [(usize, &str); 5] = [
    (5_000, "0-5k"),
    (20_000, "5-20k"),
    (50_000, "20-50k"),
    (100_000, "50-100k"),
    (200_000, "100-200k"),
];
const OVERFLOW_BIN: &str = "200k+";

/// Frequency bin of a 0-based vocabulary rank.
pub fn bin_label(rank: usize) -> &'static str {
    BIN_EDGES
        .iter()
        .find(|(edge, _)| rank < *edge)
        .map_or(OVERFLOW_BIN, |(_, label)| label)
}

fn bin_order(label: &str) -> usize {
    BIN_EDGES
        .iter()
        .position(|(_, l)| *l == label)
        .unwrap_or(BIN_EDGES.len())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestEntry {
    pub source: String,
    /// Every accepted translation, in first-seen order.
    pub targets: Vec<String>,
    pub bin: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestSet {
    pub entries: Vec<TestEntry>,
    /// Source tokens missing from the source vocabulary.
    pub skipped: Vec<String>,
}

impl TestSet {
    /// Merges pairs by source and assigns each source its frequency bin.
    pub fn from_pairs(pairs: &[(String, String)], src_vocab: &Vocabulary) -> Result<Self> {
        let mut entries: Vec<TestEntry> = Vec::new();
        let mut skipped: Vec<String> = Vec::new();
        let mut index: HashMap<&str, usize> = HashMap::new();
        let mut skipped_seen: BTreeSet<&str> = BTreeSet::new();
        for (s, t) in pairs {
            let Some(rank) = src_vocab.rank(s) else {
                if skipped_seen.insert(s) {
                    skipped.push(s.clone());
                }
                continue;
            };
            let i = *index.entry(s).or_insert_with(|| {
                entries.push(TestEntry {
                    source: s.clone(),
                    targets: Vec::new(),
                    bin: bin_label(rank),
                });
                entries.len() - 1
            });
            if !entries[i].targets.contains(t) {
                entries[i].targets.push(t.clone());
            }
        }
        if entries.is_empty() {
            return Err(Error::Empty(format!(
                "no test source is in the vocabulary ({} skipped)",
                skipped.len()
            )));
        }
        Ok(Self { entries, skipped })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Bin labels present, in frequency order.
    pub fn bins(&self) -> Vec<&'static str> {
        let mut bins: Vec<&'static str> = self.entries.iter().map(|e| e.bin).collect();
        bins.sort_by_key(|b| bin_order(b));
        bins.dedup();
        bins
    }
}

/// Reads a `source<TAB>target` test file.
pub fn load_test_set(path: impl AsRef<Path>, src_vocab: &Vocabulary) -> Result<TestSet> {
    let path = path.as_ref();
    let pairs = read_tsv_pairs(path)?;
    let set = TestSet::from_pairs(&pairs, src_vocab).map_err(|e| Error::Data {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    log::info!(
        "test set: {} entries from {} lines, {} sources out of vocabulary",
        set.len(),
        pairs.len(),
        set.skipped.len()
    );
    Ok(set)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalOptions {
    pub ks: Vec<usize>,
    pub parallel: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            ks: DEFAULT_KS.to_vec(),
            parallel: true,
        }
    }
}

impl EvalOptions {
    fn validate(&self) -> Result<usize> {
        if self.ks.is_empty() || self.ks.contains(&0) {
            return Err(Error::invalid("ks", "need at least one k, all positive"));
        }
        if self.ks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("ks", "must be strictly increasing"));
        }
        Ok(*self.ks.last().expect("non-empty"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub map: String,
    pub rank: usize,
    pub method: Method,
    pub beta: f64,
    pub n_s: usize,
    pub seed: u64,
    pub global_sample: bool,
}

impl ConfigEcho {
    fn new(map: &FittedMap, cfg: &RetrievalConfig) -> Self {
        Self {
            map: map.kind().to_string(),
            rank: map.rank(),
            method: cfg.method,
            beta: cfg.beta,
            n_s: cfg.n_s,
            seed: cfg.seed,
            global_sample: cfg.global_sample,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    /// Test entries (or sampled queries) submitted.
    pub entries: usize,
    /// Entries scored; entries whose every target is out of vocabulary are
    /// scored as misses.
    pub evaluated: usize,
    pub skipped_source_oov: usize,
    pub all_targets_oov: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinResult {
    pub label: String,
    pub evaluated: usize,
    pub all_targets_oov: usize,
    /// `hits[i]` counts hits within the top `ks[i]`.
    pub hits: Vec<usize>,
    pub precision: Vec<f64>,
    /// Precision with all-targets-OOV entries left out of the denominator.
    pub precision_excluding_oov: Vec<f64>,
}

impl BinResult {
    fn new(label: &str, outcomes: &[&Outcome], ks: &[usize]) -> Self {
        let evaluated = outcomes.len();
        let oov = outcomes.iter().filter(|o| o.targets_oov).count();
        let hits: Vec<usize> = ks
            .iter()
            .map(|&k| outcomes.iter().filter(|o| o.first_hit.is_some_and(|r| r < k)).count())
            .collect();
        let ratio = |h: usize, n: usize| if n == 0 { 0.0 } else { h as f64 / n as f64 };
        Self {
            label: label.to_string(),
            evaluated,
            all_targets_oov: oov,
            precision: hits.iter().map(|&h| ratio(h, evaluated)).collect(),
            precision_excluding_oov: hits.iter().map(|&h| ratio(h, evaluated - oov)).collect(),
            hits,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub format_version: u32,
    pub software_version: String,
    /// `words` or `sentences`.
    pub task: String,
    pub config: ConfigEcho,
    pub counts: Counts,
    pub ks: Vec<usize>,
    pub overall: BinResult,
    pub bins: Vec<BinResult>,
}

impl EvaluationReport {
    /// Overall precision at `k`, if `k` was evaluated.
    pub fn precision_at(&self, k: usize) -> Option<f64> {
        self.ks.iter().position(|&x| x == k).map(|i| self.overall.precision[i])
    }

    pub fn tsv_header(&self) -> String {
        let mut cols: Vec<String> = ["task", "map", "rank", "method", "beta", "n_s", "seed", "evaluated"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        cols.extend(self.ks.iter().map(|k| format!("p@{k}")));
        cols.join("\t")
    }

    /// One tab-separated summary row matching [`Self::tsv_header`].
    pub fn tsv_row(&self) -> String {
        let c = &self.config;
        let mut cols = vec![
            self.task.clone(),
            c.map.clone(),
            c.rank.to_string(),
            c.method.to_string(),
            c.beta.to_string(),
            c.n_s.to_string(),
            c.seed.to_string(),
            self.counts.evaluated.to_string(),
        ];
        cols.extend(self.overall.precision.iter().map(|p| format!("{p:.4}")));
        cols.join("\t")
    }
}

struct Outcome {
    bin: &'static str,
    targets_oov: bool,
    /// Position of the first correct candidate within the top `max_k`.
    first_hit: Option<usize>,
}

fn collect<T: Send, F>(n: usize, parallel: bool, f: F) -> Result<Vec<T>>
where
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    if parallel {
        (0..n).into_par_iter().map(f).collect()
    } else {
        (0..n).map(f).collect()
    }
}

/// Precision@k for every `k` in `opts.ks`: each in-vocabulary test source is
/// mapped into the shared space and retrieves over the whole target
/// vocabulary; a hit at `k` means any accepted translation is in the top `k`.
pub fn evaluate_words(
    src: &EmbeddingSet,
    tgt: &EmbeddingSet,
    map: &FittedMap,
    cfg: &RetrievalConfig,
    test: &TestSet,
    opts: &EvalOptions,
) -> Result<EvaluationReport> {
    let max_k = opts.validate()?;
    cfg.validate()?;
    if !src.is_normalized() || !tgt.is_normalized() {
        return Err(Error::invalid("embeddings", "both embedding sets must be normalised"));
    }
    let targets = map.project_targets(tgt.matrix())?;
    let ranks: Vec<usize> = test
        .entries
        .iter()
        .map(|e| src.vocab().rank(&e.source).expect("test sources are in vocabulary"))
        .collect();
    // the inverted denominator samples the whole source vocabulary
    let (sources, query_rows) = if cfg.method == Method::InvertedSoftmax {
        (map.project_sources(src.matrix())?, ranks.clone())
    } else {
        (
            map.project_sources(&src.matrix().select_rows(&ranks))?,
            (0..ranks.len()).collect(),
        )
    };
    let retriever = Retriever::new(&sources, &targets, *cfg)?;
    let outcomes = collect(test.len(), opts.parallel, |i| {
        let entry = &test.entries[i];
        let valid: Vec<usize> = entry.targets.iter().filter_map(|t| tgt.vocab().rank(t)).collect();
        let top = retriever.top_k(query_rows[i], max_k)?;
        Ok(Outcome {
            bin: entry.bin,
            targets_oov: valid.is_empty(),
            first_hit: top.indices.iter().position(|c| valid.contains(c)),
        })
    })?;

    let all: Vec<&Outcome> = outcomes.iter().collect();
    let bins = test
        .bins()
        .into_iter()
        .map(|b| {
            let subset: Vec<&Outcome> = outcomes.iter().filter(|o| o.bin == b).collect();
            BinResult::new(b, &subset, &opts.ks)
        })
        .collect();
    let overall = BinResult::new("all", &all, &opts.ks);
    Ok(EvaluationReport {
        format_version: REPORT_FORMAT_VERSION,
        software_version: env!("CARGO_PKG_VERSION").to_string(),
        task: "words".into(),
        config: ConfigEcho::new(map, cfg),
        counts: Counts {
            entries: test.len() + test.skipped.len(),
            evaluated: outcomes.len(),
            skipped_source_oov: test.skipped.len(),
            all_targets_oov: overall.all_targets_oov,
        },
        ks: opts.ks.clone(),
        overall,
        bins,
    })
}

/// Sentence retrieval over a held-out aligned corpus: `n_queries` source
/// sentences sampled with `cfg.seed` each retrieve among every target
/// sentence of the pool. A candidate counts as correct when it is the
/// aligned mate or has exactly the mate's token sequence.
pub fn evaluate_sentence_retrieval(
    src: &EmbeddingSet,
    tgt: &EmbeddingSet,
    map: &FittedMap,
    cfg: &RetrievalConfig,
    pool: &PhrasePairs,
    n_queries: usize,
    opts: &EvalOptions,
) -> Result<EvaluationReport> {
    let max_k = opts.validate()?;
    cfg.validate()?;
    let (matrices, kept) = phrase_matrices_with_index(pool, src, tgt)?;
    let n = kept.len();
    let sources = map.project_sources(&matrices.x_d)?;
    let targets = map.project_targets(&matrices.y_d)?;

    let mut group_of: HashMap<&[String], usize> = HashMap::new();
    let groups: Vec<usize> = kept
        .iter()
        .map(|&c| {
            let next = group_of.len();
            *group_of.entry(pool.target_sentences[c].as_slice()).or_insert(next)
        })
        .collect();

    if n_queries == 0 {
        return Err(Error::invalid("n_queries", "must be at least 1"));
    }
    if n_queries > n {
        log::warn!("{n_queries} queries requested but the pool has {n} usable pairs; using all");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut queries = rand::seq::index::sample(&mut rng, n, n_queries.min(n)).into_vec();
    queries.sort_unstable();

    let retriever = Retriever::new(&sources, &targets, *cfg)?;
    let outcomes = collect(queries.len(), opts.parallel, |q| {
        let j = queries[q];
        let top = retriever.top_k(j, max_k)?;
        Ok(Outcome {
            bin: "all",
            targets_oov: false,
            first_hit: top.indices.iter().position(|&c| groups[c] == groups[j]),
        })
    })?;
    let all: Vec<&Outcome> = outcomes.iter().collect();
    let overall = BinResult::new("all", &all, &opts.ks);
    Ok(EvaluationReport {
        format_version: REPORT_FORMAT_VERSION,
        software_version: env!("CARGO_PKG_VERSION").to_string(),
        task: "sentences".into(),
        config: ConfigEcho::new(map, cfg),
        counts: Counts {
            entries: queries.len(),
            evaluated: outcomes.len(),
            skipped_source_oov: pool.count() - n,
            all_targets_oov: 0,
        },
        ks: opts.ks.clone(),
        overall,
        bins: Vec::new(),
    })
}

/// Writes the report as pretty-printed JSON.
pub fn emit_report(r: &EvaluationReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, r)
        .map_err(std::io::Error::from)
        .and_then(|_| writeln!(w))
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn load_report(path: impl AsRef<Path>) -> Result<EvaluationReport> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Data {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alignment::{fit_map, MapKind};
    use crate::dictionary::{resolve, Provenance, WordDictionary};
    use crate::numerics::DenseMatrix;
    use crate::synthetic::random_unit_rows;

    fn vocab(n: usize) -> Vocabulary {
        Vocabulary::new((0..n).map(|i| format!("w{i}")).collect()).unwrap()
    }

    fn pairs(p: &[(&str, &str)]) -> Vec<(String, String)> {
        p.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
    }

    fn self_translation(n: usize, d: usize) -> (EmbeddingSet, FittedMap, TestSet) {
        let mut rng = <ChaCha8Rng as SeedableRng>::seed_from_u64(3);
        let e = EmbeddingSet::new(vocab(n), random_unit_rows(n, d, &mut rng))
            .unwrap()
            .normalize_rows()
            .unwrap();
        let words: Vec<(String, String)> = e.vocab().words().iter().map(|w| (w.clone(), w.clone())).collect();
        let dict = WordDictionary::new(words.clone(), Provenance::Custom).unwrap();
        let map = fit_map(MapKind::Procrustes, &resolve(&dict, &e, &e).unwrap()).unwrap();
        let test = TestSet::from_pairs(&words, e.vocab()).unwrap();
        (e, map, test)
    }

    #[test]
    fn bin_boundaries() {
        assert_eq!(bin_label(0), "0-5k");
        assert_eq!(bin_label(4999), "0-5k");
        assert_eq!(bin_label(5000), "5-20k");
        assert_eq!(bin_label(199_999), "100-200k");
        assert_eq!(bin_label(200_000), "200k+");
    }

    #[test]
    fn merges_lines_by_source() {
        let v = vocab(10);
        let t = TestSet::from_pairs(&pairs(&[("w1", "a"), ("w2", "b"), ("w1", "c"), ("w1", "a"), ("zz", "q")]), &v).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.entries[0].targets, vec!["a", "c"]);
        assert_eq!(t.skipped, vec!["zz"]);
        assert!(TestSet::from_pairs(&pairs(&[("zz", "q")]), &v).is_err());
    }

    #[test]
    fn self_translation_is_perfect_for_every_method() {
        let (e, map, test) = self_translation(40, 8);
        for method in [Method::Nn, Method::Softmax, Method::InvertedSoftmax] {
            let cfg = RetrievalConfig {
                beta: 10.0,
                ..RetrievalConfig::with_method(method)
            };
            let r = evaluate_words(&e, &e, &map, &cfg, &test, &EvalOptions::default()).unwrap();
            assert_eq!(r.overall.precision, vec![1.0; 3], "{method}");
            assert_eq!(r.counts.evaluated, 40);
            let bin_total: usize = r.bins.iter().map(|b| b.evaluated).sum();
            assert_eq!(bin_total, r.counts.evaluated);
        }
        let back = map.reversed().unwrap();
        let r1 = evaluate_words(&e, &e, &back, &RetrievalConfig::default(), &test, &EvalOptions::default()).unwrap();
        assert_eq!(r1.overall.precision, vec![1.0; 3]);
    }

    #[test]
    fn all_oov_targets_count_as_misses() {
        let (e, map, _) = self_translation(20, 6);
        let test = TestSet::from_pairs(&pairs(&[("w1", "w1"), ("w2", "nope"), ("w3", "w3")]), e.vocab()).unwrap();
        let r = evaluate_words(&e, &e, &map, &RetrievalConfig::default(), &test, &EvalOptions::default()).unwrap();
        assert_eq!(r.counts.all_targets_oov, 1);
        assert!((r.overall.precision[0] - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.overall.precision_excluding_oov[0], 1.0);
    }

    #[test]
    fn serial_and_parallel_agree() {
        let (e, map, test) = self_translation(60, 5);
        let mut rng = <ChaCha8Rng as SeedableRng>::seed_from_u64(9);
        let noisy = EmbeddingSet::new(e.vocab().clone(), random_unit_rows(60, 5, &mut rng))
            .unwrap()
            .normalize_rows()
            .unwrap();
        let cfg = RetrievalConfig {
            beta: 5.0,
            n_s: 10,
            ..RetrievalConfig::with_method(Method::InvertedSoftmax)
        };
        let serial = EvalOptions {
            parallel: false,
            ..Default::default()
        };
        let a = evaluate_words(&e, &noisy, &map, &cfg, &test, &serial).unwrap();
        let b = evaluate_words(&e, &noisy, &map, &cfg, &test, &EvalOptions::default()).unwrap();
        assert_eq!(a, b);
        for w in a.overall.precision.windows(2) {
            assert!(w[0] <= w[1]);
        }
    }

    #[test]
    fn sentence_retrieval_identity_pool() {
        let v = Vocabulary::new(vec!["a".into(), "b".into(), "c".into()]).unwrap();
        let e = EmbeddingSet::new(v, DenseMatrix::identity(3)).unwrap().normalize_rows().unwrap();
        let map = fit_map(
            MapKind::Procrustes,
            &resolve(
                &WordDictionary::new(pairs(&[("a", "a"), ("b", "b"), ("c", "c")]), Provenance::Custom).unwrap(),
                &e,
                &e,
            )
            .unwrap(),
        )
        .unwrap();
        let sent = |w: &[&str]| w.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        let pool = PhrasePairs {
            source_sentences: vec![sent(&["a"]), sent(&["b"]), sent(&["c"]), sent(&["zz"])],
            target_sentences: vec![sent(&["a"]), sent(&["b"]), sent(&["c"]), sent(&["a"])],
        };
        let r = evaluate_sentence_retrieval(&e, &e, &map, &RetrievalConfig::default(), &pool, 3, &EvalOptions::default())
            .unwrap();
        assert_eq!(r.overall.precision, vec![1.0; 3]);
        assert_eq!(r.counts.skipped_source_oov, 1);
    }

    #[test]
    fn duplicate_sentences_share_credit() {
        let v = Vocabulary::new(vec!["a".into(), "b".into()]).unwrap();
        let e = EmbeddingSet::new(v, DenseMatrix::identity(2)).unwrap().normalize_rows().unwrap();
        let map = FittedMap::Orthogonal(
            crate::alignment::OrthogonalMap::from_parts(DenseMatrix::identity(2), vec![1.0; 2], DenseMatrix::identity(2), 2)
                .unwrap(),
        );
        let sent = |w: &[&str]| w.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        // rows 0 and 1 are identical, so query 1 ties and retrieves row 0 first
        let pool = PhrasePairs {
            source_sentences: vec![sent(&["a"]), sent(&["a"]), sent(&["b"])],
            target_sentences: vec![sent(&["a"]), sent(&["a"]), sent(&["b"])],
        };
        let opts = EvalOptions {
            ks: vec![1],
            parallel: false,
        };
        let r = evaluate_sentence_retrieval(&e, &e, &map, &RetrievalConfig::default(), &pool, 3, &opts).unwrap();
        assert_eq!(r.overall.precision, vec![1.0]);
    }

    #[test]
    fn report_round_trip_and_tsv() {
        let (e, map, test) = self_translation(30, 4);
        let r = evaluate_words(&e, &e, &map, &RetrievalConfig::default(), &test, &EvalOptions::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        emit_report(&r, &path).unwrap();
        assert_eq!(load_report(&path).unwrap(), r);
        assert_eq!(r.tsv_header().split('\t').count(), r.tsv_row().split('\t').count());
        assert_eq!(r.precision_at(5), Some(1.0));
        assert_eq!(r.precision_at(2), None);
        std::fs::write(&path, "{").unwrap();
        assert!(matches!(load_report(&path), Err(Error::Data { .. })));
    }

    #[test]
    fn rejects_bad_ks() {
        let (e, map, test) = self_translation(10, 3);
        for ks in [vec![], vec![0], vec![5, 1]] {
            let opts = EvalOptions { ks, parallel: false };
            assert!(evaluate_words(&e, &e, &map, &RetrievalConfig::default(), &test, &opts).is_err());
        }
    }
}
