//! The `orthoalign` command line: `align` fits and saves a map, `translate`
//! prints ranked candidates, `evaluate` writes a precision report.
//!
//! Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical error.
//! Failures print one line to standard error:
//! `orthoalign: error[<class>]: <message>`.

use std::ffi::OsString;
use std::fs::OpenOptions;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::alignment::{load_map, save_map, FittedMap, MapArtifact, MapKind};
use crate::dictionary::{
    build_phrase_matrices, build_pseudo_dictionary, load_aligned_corpus, load_tsv_dictionary, resolve, PairedMatrices,
};
use crate::embeddings::{load_word2vec_text, EmbeddingSet};
use crate::error::{Error, ErrorClass, Result};
use crate::evaluation::{emit_report, evaluate_sentence_retrieval, evaluate_words, load_test_set, EvalOptions};
use crate::pipeline::{align, AlignOptions, RankChoice};
use crate::retrieval::{Method, RetrievalConfig, Retriever, DEFAULT_BETA_MAX, DEFAULT_SAMPLE_SIZE, DEFAULT_SEED};

#[derive(Debug, Parser)]
#[command(name = "orthoalign", version, about = "Offline bilingual word vectors with orthogonal maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a map from a dictionary and save it.
    Align(AlignArgs),
    /// Print ranked translations for query words.
    Translate(TranslateArgs),
    /// Score a saved map on a word test set or a held-out aligned corpus.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args)]
struct EmbeddingArgs {
    /// Source embeddings, word2vec text format (optionally .gz).
    #[arg(long)]
    src: PathBuf,
    /// Target embeddings, word2vec text format (optionally .gz).
    #[arg(long)]
    tgt: PathBuf,
    /// Keep only the most frequent N words of each embedding file.
    #[arg(long)]
    limit: Option<usize>,
    /// Exchange the roles of the source and target languages.
    #[arg(long, visible_alias = "swap")]
    reverse: bool,
}

#[derive(Debug, Args)]
struct RetrievalArgs {
    /// Retrieval method.
    #[arg(long, value_enum, default_value_t = Method::Nn)]
    method: Method,
    /// Inverse temperature; defaults to the value stored with the map, else fitted or 1.
    #[arg(long)]
    beta: Option<f64>,
    /// Sample size for the inverted softmax denominator.
    #[arg(long = "ns", default_value_t = DEFAULT_SAMPLE_SIZE)]
    n_s: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Upper bound on the inverse temperature.
    #[arg(long, default_value_t = DEFAULT_BETA_MAX)]
    beta_max: f64,
    /// Share one denominator sample between all queries.
    #[arg(long)]
    global_sample: bool,
}

impl RetrievalArgs {
    fn config(&self, beta: f64) -> Result<RetrievalConfig> {
        let cfg = RetrievalConfig {
            method: self.method,
            beta,
            n_s: self.n_s,
            seed: self.seed,
            beta_max: self.beta_max,
            global_sample: self.global_sample,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
struct AlignArgs {
    #[command(flatten)]
    emb: EmbeddingArgs,
    /// Word dictionary as `source<TAB>target` lines, or `pseudo` for identical strings.
    #[arg(long, conflicts_with = "corpus", required_unless_present = "corpus")]
    dict: Option<String>,
    /// Line-aligned source and target corpus files for a phrase dictionary.
    #[arg(long, num_args = 2, value_names = ["SRC", "TGT"])]
    corpus: Option<Vec<PathBuf>>,
    /// Use at most N dictionary pairs or corpus lines.
    #[arg(long)]
    max_pairs: Option<usize>,
    /// Skip the first N corpus lines.
    #[arg(long, default_value_t = 0, requires = "corpus")]
    skip: usize,
    #[arg(long, value_enum, default_value_t = MapKind::Procrustes)]
    map: MapKind,
    /// Retained rank, or `auto` to choose it on the training dictionary.
    #[arg(long)]
    rank: Option<String>,
    #[command(flatten)]
    retrieval: RetrievalArgs,
    /// Output map artifact.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TranslateArgs {
    #[command(flatten)]
    emb: EmbeddingArgs,
    /// Map artifact written by `align`.
    #[arg(long)]
    artifact: PathBuf,
    #[command(flatten)]
    retrieval: RetrievalArgs,
    /// Candidates printed per query.
    #[arg(long, default_value_t = 10)]
    top_k: usize,
    /// File with one query word per line.
    #[arg(long)]
    words_file: Option<PathBuf>,
    /// Query words.
    words: Vec<String>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[command(flatten)]
    emb: EmbeddingArgs,
    #[arg(long)]
    artifact: PathBuf,
    #[command(flatten)]
    retrieval: RetrievalArgs,
    /// Word test set as `source<TAB>target` lines.
    #[arg(long, conflicts_with = "corpus", required_unless_present = "corpus")]
    test: Option<PathBuf>,
    /// Held-out line-aligned corpus for sentence retrieval.
    #[arg(long, num_args = 2, value_names = ["SRC", "TGT"])]
    corpus: Option<Vec<PathBuf>>,
    /// Skip the first N corpus lines.
    #[arg(long, default_value_t = 0, requires = "corpus")]
    skip: usize,
    /// Candidate pool size for sentence retrieval.
    #[arg(long, default_value_t = 200_000, requires = "corpus")]
    max_pairs: usize,
    /// Sampled sentence queries.
    #[arg(long, default_value_t = 5000, requires = "corpus")]
    queries: usize,
    /// Comma-separated cut-offs.
    #[arg(long, value_delimiter = ',', default_values_t = [1usize, 5, 10])]
    ks: Vec<usize>,
    /// Evaluate on one thread.
    #[arg(long)]
    serial: bool,
    /// JSON report path.
    #[arg(long)]
    out: PathBuf,
    /// Append a TSV summary row here (header written when the file is new).
    #[arg(long)]
    tsv: Option<PathBuf>,
}

/// Runs the tool and returns its exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return 0;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments");
            eprintln!("orthoalign: error[usage]: {}", first.trim_start_matches("error: "));
            return 2;
        }
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let result = match cli.command {
        Command::Align(a) => cmd_align(&a),
        Command::Translate(a) => cmd_translate(&a, &mut out),
        Command::Evaluate(a) => cmd_evaluate(&a, &mut out),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let (label, code) = match e.class() {
                ErrorClass::Usage => ("usage", 2),
                ErrorClass::Data => ("data", 3),
                ErrorClass::Numerical => ("numerical", 4),
            };
            let msg = e.to_string().replace('\n', " ");
            eprintln!("orthoalign: error[{label}]: {msg}");
            code
        }
    }
}

fn load_pair(args: &EmbeddingArgs) -> Result<(EmbeddingSet, EmbeddingSet)> {
    let load = |p: &Path| load_word2vec_text(p, args.limit)?.normalize_rows();
    let src = load(&args.src)?;
    let tgt = load(&args.tgt)?;
    if src.dim() != tgt.dim() {
        return Err(Error::invalid(
            "tgt",
            format!("source dimension {} differs from target dimension {}", src.dim(), tgt.dim()),
        ));
    }
    Ok(if args.reverse { (tgt, src) } else { (src, tgt) })
}

fn corpus_paths(c: &[PathBuf], reverse: bool) -> (&Path, &Path) {
    if reverse {
        (&c[1], &c[0])
    } else {
        (&c[0], &c[1])
    }
}

fn parse_rank(s: &str) -> Result<Option<usize>> {
    if s == "auto" {
        return Ok(None);
    }
    s.parse::<usize>()
        .map(Some)
        .map_err(|_| Error::invalid("rank", format!("expected a positive integer or `auto`, got {s:?}")))
}

fn training_pairs(a: &AlignArgs, src: &EmbeddingSet, tgt: &EmbeddingSet) -> Result<(PairedMatrices, String)> {
    if let Some(c) = &a.corpus {
        let (sp, tp) = corpus_paths(c, a.emb.reverse);
        let corpus = load_aligned_corpus(sp, tp, a.max_pairs.unwrap_or(usize::MAX), a.skip)?;
        let p = build_phrase_matrices(&corpus, src, tgt)?;
        let prov = format!("phrase corpus {} ({} of {} pairs kept)", sp.display(), p.n(), corpus.count());
        return Ok((p, prov));
    }
    let dict_arg = a.dict.as_deref().expect("clap requires --dict or --corpus");
    let mut dict = if dict_arg == "pseudo" {
        build_pseudo_dictionary(src.vocab(), tgt.vocab())?
    } else {
        let d = load_tsv_dictionary(dict_arg)?;
        if a.emb.reverse {
            d.swapped()
        } else {
            d
        }
    };
    if let Some(n) = a.max_pairs {
        dict.truncate(n);
    }
    let p = resolve(&dict, src, tgt)?;
    let prov = format!("{} dictionary {dict_arg} ({})", dict.provenance, p.stats);
    Ok((p, prov))
}

fn cmd_align(a: &AlignArgs) -> Result<()> {
    let retrieval = a.retrieval.config(a.retrieval.beta.unwrap_or(1f64.min(a.retrieval.beta_max)))?;
    let rank = match a.rank.as_deref().map(parse_rank).transpose()? {
        None => RankChoice::Full,
        Some(None) => RankChoice::Auto,
        Some(Some(k)) => RankChoice::Fixed(k),
    };
    let (src, tgt) = load_pair(&a.emb)?;
    let (train, provenance) = training_pairs(a, &src, &tgt)?;
    log::info!("training pairs: {}", train.stats);
    let opts = AlignOptions {
        kind: a.map,
        rank,
        retrieval,
        fixed_beta: a.retrieval.beta.is_some(),
    };
    let aligned = align(&train, &opts)?;
    if let FittedMap::Orthogonal(m) = &aligned.map {
        let head: Vec<String> = m.sigma.iter().take(5).map(|s| format!("{s:.4}")).collect();
        log::info!(
            "singular values: max {:.4}, min {:.4e}, leading [{}]",
            m.sigma.first().copied().unwrap_or(0.0),
            m.sigma.last().copied().unwrap_or(0.0),
            head.join(", ")
        );
    }
    if let Some(b) = &aligned.beta {
        if b.diverged {
            log::warn!("beta reached the cap {}", b.beta);
        }
    }
    log::info!(
        "map {} rank {} of {}, beta {:?}",
        aligned.map.kind(),
        aligned.map.rank(),
        aligned.map.dim(),
        aligned.beta.map(|b| b.beta)
    );
    save_map(
        &MapArtifact {
            beta: aligned.beta.map(|b| b.beta),
            map: aligned.map,
            provenance,
        },
        &a.out,
    )
}

fn load_artifact(path: &Path, reverse: bool, d: usize) -> Result<MapArtifact> {
    let mut art = load_map(path)?;
    if reverse {
        art.map = art.map.reversed()?;
    }
    if art.map.dim() != d {
        return Err(Error::invalid(
            "artifact",
            format!("map dimension {} does not match embedding dimension {d}", art.map.dim()),
        ));
    }
    Ok(art)
}

fn resolved_config(r: &RetrievalArgs, stored: Option<f64>) -> Result<RetrievalConfig> {
    r.config(r.beta.or(stored).unwrap_or(1f64.min(r.beta_max)))
}

fn cmd_translate(a: &TranslateArgs, out: &mut impl Write) -> Result<()> {
    let mut words = a.words.clone();
    if let Some(p) = &a.words_file {
        let file = std::fs::File::open(p).map_err(|e| Error::io(p, e))?;
        for line in io::BufReader::new(file).lines() {
            let line = line.map_err(|e| Error::io(p, e))?;
            words.extend(line.split_whitespace().map(str::to_string));
        }
    }
    if words.is_empty() {
        return Err(Error::invalid("words", "no query words given"));
    }
    let (src, tgt) = load_pair(&a.emb)?;
    let art = load_artifact(&a.artifact, a.emb.reverse, src.dim())?;
    let cfg = resolved_config(&a.retrieval, art.beta)?;
    let sources = art.map.project_sources(src.matrix())?;
    let targets = art.map.project_targets(tgt.matrix())?;
    let retriever = Retriever::new(&sources, &targets, cfg)?;
    let io_err = |e| Error::io("<stdout>", e);
    for w in &words {
        match src.vocab().rank(w) {
            None => writeln!(out, "{w}\tOOV").map_err(io_err)?,
            Some(j) => {
                writeln!(out, "{w}").map_err(io_err)?;
                let top = retriever.top_k(j, a.top_k)?;
                for (r, (i, s)) in top.indices.iter().zip(&top.scores).enumerate() {
                    writeln!(out, "  {}\t{}\t{s:.6}", r + 1, tgt.vocab().word(*i)).map_err(io_err)?;
                }
            }
        }
    }
    out.flush().map_err(io_err)
}

fn cmd_evaluate(a: &EvaluateArgs, out: &mut impl Write) -> Result<()> {
    let (src, tgt) = load_pair(&a.emb)?;
    let art = load_artifact(&a.artifact, a.emb.reverse, src.dim())?;
    let cfg = resolved_config(&a.retrieval, art.beta)?;
    let opts = EvalOptions {
        ks: a.ks.clone(),
        parallel: !a.serial,
    };
    let report = match (&a.test, &a.corpus) {
        (Some(t), _) => {
            let test = load_test_set(t, src.vocab())?;
            evaluate_words(&src, &tgt, &art.map, &cfg, &test, &opts)?
        }
        (None, Some(c)) => {
            let (sp, tp) = corpus_paths(c, a.emb.reverse);
            let pool = load_aligned_corpus(sp, tp, a.max_pairs, a.skip)?;
            evaluate_sentence_retrieval(&src, &tgt, &art.map, &cfg, &pool, a.queries, &opts)?
        }
        (None, None) => unreachable!("clap requires --test or --corpus"),
    };
    emit_report(&report, &a.out)?;
    if let Some(p) = &a.tsv {
        let fresh = !p.exists();
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(p)
            .map_err(|e| Error::io(p, e))?;
        if fresh {
            writeln!(f, "{}", report.tsv_header()).map_err(|e| Error::io(p, e))?;
        }
        writeln!(f, "{}", report.tsv_row()).map_err(|e| Error::io(p, e))?;
    }
    let io_err = |e| Error::io("<stdout>", e);
    writeln!(out, "{}", report.tsv_header()).map_err(io_err)?;
    writeln!(out, "{}", report.tsv_row()).map_err(io_err)?;
    out.flush().map_err(io_err)
}
