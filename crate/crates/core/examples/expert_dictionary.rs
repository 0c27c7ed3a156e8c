//! Aligns two synthetic vocabularies with a seed dictionary and evaluates
//! precision@k with nearest-neighbour and inverted-softmax retrieval.
//!
//! ```text
//! cargo run --release --example expert_dictionary
//! ```

use orthoalign::alignment::MapKind;
use orthoalign::dictionary::resolve;
use orthoalign::evaluation::{evaluate_words, EvalOptions, TestSet};
use orthoalign::pipeline::{align, AlignOptions, RankChoice};
use orthoalign::retrieval::Method;
use orthoalign::synthetic::{SyntheticConfig, SyntheticTask};

fn main() -> orthoalign::Result<()> {
    let task = SyntheticTask::generate(&SyntheticConfig {
        noise: 0.25,
        ..Default::default()
    })?;
    let train = resolve(&task.train, &task.src, &task.tgt)?;
    let test = TestSet::from_pairs(&task.test, task.src.vocab())?;
    println!("{} training pairs, {} test words", train.n(), test.len());

    for (method, rank) in [
        (Method::Nn, RankChoice::Full),
        (Method::InvertedSoftmax, RankChoice::Full),
        (Method::InvertedSoftmax, RankChoice::Auto),
    ] {
        let opts = AlignOptions {
            rank,
            ..AlignOptions::new(MapKind::Procrustes, method)
        };
        let a = align(&train, &opts)?;
        let r = evaluate_words(&task.src, &task.tgt, &a.map, &a.retrieval, &test, &EvalOptions::default())?;
        let beta = a.beta.map_or("-".to_string(), |b| format!("{:.2}", b.beta));
        println!(
            "{method:<16} rank {:>3} beta {beta:>6}  p@1 {:.3}  p@5 {:.3}  p@10 {:.3}",
            a.map.rank(),
            r.overall.precision[0],
            r.overall.precision[1],
            r.overall.precision[2],
        );
    }
    Ok(())
}
