//! Runs the English–Italian word and sentence translation tasks on the real
//! embeddings and dictionaries.
//!
//! ```text
//! cargo run --release --example reproduce -- /path/to/data [words|pseudo|phrase|sentences]
//! ```
//!
//! The directory must hold the two 200k-word embedding files, the training
//! and test dictionaries and the Europarl English–Italian corpus, under the
//! names listed in `FILES`. `ORTHOALIGN_DATA` may replace the first argument.

use std::path::{Path, PathBuf};

use orthoalign::alignment::MapKind;
use orthoalign::dictionary::{
    build_phrase_matrices, build_pseudo_dictionary, load_aligned_corpus, load_tsv_dictionary, resolve, PairedMatrices,
};
use orthoalign::embeddings::{load_word2vec_text, EmbeddingSet};
use orthoalign::evaluation::{evaluate_sentence_retrieval, evaluate_words, EvalOptions, EvaluationReport, TestSet};
use orthoalign::pipeline::{align, AlignOptions, RankChoice};
use orthoalign::retrieval::{Method, SENTENCE_SAMPLE_SIZE};

const FILES: [&str; 6] = [
    "EN.200K.cbow1_wind5_hs0_neg10_size300_smpl1e-05.txt",
    "IT.200K.cbow1_wind5_hs0_neg10_size300_smpl1e-05.txt",
    "OPUS_en_it_europarl_train_5K.txt",
    "OPUS_en_it_europarl_test.txt",
    "europarl-v7.it-en.en",
    "europarl-v7.it-en.it",
];

struct Data {
    dir: PathBuf,
    en: EmbeddingSet,
    it: EmbeddingSet,
    test: Vec<(String, String)>,
}

impl Data {
    fn load(dir: PathBuf) -> orthoalign::Result<Self> {
        let emb = |f: &str| load_word2vec_text(dir.join(f), None)?.normalize_rows();
        Ok(Self {
            en: emb(FILES[0])?,
            it: emb(FILES[1])?,
            test: load_tsv_dictionary(dir.join(FILES[3]))?.pairs,
            dir,
        })
    }

    fn test_it_en(&self) -> Vec<(String, String)> {
        self.test.iter().map(|(a, b)| (b.clone(), a.clone())).collect()
    }

    fn corpus(&self, max_pairs: usize, skip: usize) -> orthoalign::Result<orthoalign::dictionary::PhrasePairs> {
        load_aligned_corpus(self.dir.join(FILES[4]), self.dir.join(FILES[5]), max_pairs, skip)
    }
}

fn words(
    src: &EmbeddingSet,
    tgt: &EmbeddingSet,
    train: &PairedMatrices,
    test: &[(String, String)],
    kind: MapKind,
    method: Method,
    rank: RankChoice,
) -> orthoalign::Result<EvaluationReport> {
    let mut opts = AlignOptions {
        rank,
        ..AlignOptions::new(kind, method)
    };
    opts.retrieval.global_sample = true;
    let a = align(train, &opts)?;
    let test = TestSet::from_pairs(test, src.vocab())?;
    evaluate_words(src, tgt, &a.map, &a.retrieval, &test, &EvalOptions::default())
}

fn show(label: &str, r: &EvaluationReport) {
    let p = &r.overall.precision;
    println!("{label:<40} p@1 {:.3}  p@5 {:.3}  p@10 {:.3}", p[0], p[1], p[2]);
}

fn expert(d: &Data) -> orthoalign::Result<()> {
    let train = resolve(&load_tsv_dictionary(d.dir.join(FILES[2]))?, &d.en, &d.it)?;
    let svd = MapKind::Procrustes;
    show("en-it nn", &words(&d.en, &d.it, &train, &d.test, svd, Method::Nn, RankChoice::Full)?);
    show(
        "en-it inverted softmax",
        &words(&d.en, &d.it, &train, &d.test, svd, Method::InvertedSoftmax, RankChoice::Full)?,
    );
    let full = words(&d.en, &d.it, &train, &d.test, svd, Method::InvertedSoftmax, RankChoice::Auto)?;
    show("en-it inverted softmax, reduced rank", &full);
    for b in &full.bins {
        println!("  {:<10} p@1 {:.3} ({} words)", b.label, b.precision[0], b.evaluated);
    }
    let it_en = train.swapped();
    show(
        "it-en inverted softmax, reduced rank",
        &words(&d.it, &d.en, &it_en, &d.test_it_en(), svd, Method::InvertedSoftmax, RankChoice::Auto)?,
    );
    Ok(())
}

fn pseudo(d: &Data) -> orthoalign::Result<()> {
    let en_it = resolve(&build_pseudo_dictionary(d.en.vocab(), d.it.vocab())?, &d.en, &d.it)?;
    println!("{} identically spelled pairs", en_it.n());
    let run = |s, t, p: &PairedMatrices, test: &[(String, String)], kind, method, rank| words(s, t, p, test, kind, method, rank);
    let (svd, isf, auto) = (MapKind::Procrustes, Method::InvertedSoftmax, RankChoice::Auto);
    show("pseudo en-it", &run(&d.en, &d.it, &en_it, &d.test, svd, isf, auto)?);
    show("pseudo it-en", &run(&d.it, &d.en, &en_it.swapped(), &d.test_it_en(), svd, isf, auto)?);
    show(
        "pseudo en-it least squares",
        &run(&d.en, &d.it, &en_it, &d.test, MapKind::Lsq, Method::Nn, RankChoice::Full)?,
    );
    Ok(())
}

fn phrase(d: &Data) -> orthoalign::Result<()> {
    let en_it = build_phrase_matrices(&d.corpus(500_000, 0)?, &d.en, &d.it)?;
    let (svd, isf, auto) = (MapKind::Procrustes, Method::InvertedSoftmax, RankChoice::Auto);
    show("phrase en-it", &words(&d.en, &d.it, &en_it, &d.test, svd, isf, auto)?);
    show("phrase it-en", &words(&d.it, &d.en, &en_it.swapped(), &d.test_it_en(), svd, isf, auto)?);
    Ok(())
}

fn sentences(d: &Data) -> orthoalign::Result<()> {
    let train = build_phrase_matrices(&d.corpus(300_000, 0)?, &d.en, &d.it)?;
    let pool = d.corpus(200_000, 300_000)?;
    let opts = EvalOptions::default();

    let mut en_it = AlignOptions::new(MapKind::Procrustes, Method::InvertedSoftmax);
    en_it.retrieval.n_s = SENTENCE_SAMPLE_SIZE;
    en_it.retrieval.global_sample = true;
    let a = align(&train, &en_it)?;
    show(
        "sentences en-it inverted softmax",
        &evaluate_sentence_retrieval(&d.en, &d.it, &a.map, &a.retrieval, &pool, 5000, &opts)?,
    );
    let b = align(&train.swapped(), &AlignOptions::new(MapKind::Procrustes, Method::Nn))?;
    show(
        "sentences it-en nn",
        &evaluate_sentence_retrieval(&d.it, &d.en, &b.map, &b.retrieval, &pool.swapped(), 5000, &opts)?,
    );
    Ok(())
}

fn main() -> orthoalign::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let mut args = std::env::args().skip(1);
    let dir = args
        .next()
        .or_else(|| std::env::var("ORTHOALIGN_DATA").ok())
        .map(PathBuf::from);
    let Some(dir) = dir.filter(|d| Path::new(d).is_dir()) else {
        eprintln!("usage: reproduce <data-dir> [words|pseudo|phrase|sentences]");
        eprintln!("expected files: {}", FILES.join(", "));
        std::process::exit(2);
    };
    let task = args.next();
    let d = Data::load(dir)?;
    match task.as_deref() {
        None => {
            expert(&d)?;
            pseudo(&d)?;
            phrase(&d)?;
            sentences(&d)
        }
        Some("words") => expert(&d),
        Some("pseudo") => pseudo(&d),
        Some("phrase") => phrase(&d),
        Some("sentences") => sentences(&d),
        Some(other) => {
            eprintln!("unknown task {other}");
            std::process::exit(2);
        }
    }
}
