//! Trains on averaged sentence vectors from a line-aligned corpus instead
//! of a word dictionary.
//!
//! ```text
//! cargo run --release --example phrase_dictionary
//! ```

use orthoalign::alignment::MapKind;
use orthoalign::dictionary::build_phrase_matrices;
use orthoalign::evaluation::{evaluate_words, EvalOptions, TestSet};
use orthoalign::pipeline::{align, AlignOptions};
use orthoalign::retrieval::Method;
use orthoalign::synthetic::{SyntheticConfig, SyntheticTask};

fn main() -> orthoalign::Result<()> {
    let task = SyntheticTask::generate(&SyntheticConfig {
        noise: 0.2,
        ..Default::default()
    })?;
    let test = TestSet::from_pairs(&task.test, task.src.vocab())?;
    for sentences in [100, 1000, 5000] {
        let corpus = task.corpus(sentences, 12, 3);
        let train = build_phrase_matrices(&corpus, &task.src, &task.tgt)?;
        let a = align(&train, &AlignOptions::new(MapKind::Procrustes, Method::InvertedSoftmax))?;
        let r = evaluate_words(&task.src, &task.tgt, &a.map, &a.retrieval, &test, &EvalOptions::default())?;
        println!("{sentences:>5} sentences  p@1 {:.3}", r.overall.precision[0]);
    }
    Ok(())
}
