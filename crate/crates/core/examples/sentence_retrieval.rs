//! Retrieves the translation of held-out sentences from a pool of
//! candidates, after training on other sentences of the same corpus.
//!
//! ```text
//! cargo run --release --example sentence_retrieval
//! ```

use orthoalign::alignment::MapKind;
use orthoalign::dictionary::build_phrase_matrices;
use orthoalign::evaluation::{evaluate_sentence_retrieval, EvalOptions};
use orthoalign::pipeline::{align, AlignOptions};
use orthoalign::retrieval::Method;
use orthoalign::synthetic::{SyntheticConfig, SyntheticTask};

fn main() -> orthoalign::Result<()> {
    let task = SyntheticTask::generate(&SyntheticConfig {
        noise: 0.3,
        ..Default::default()
    })?;
    let train = build_phrase_matrices(&task.corpus(3000, 10, 1), &task.src, &task.tgt)?;
    let pool = task.corpus(2000, 4, 2);

    for method in [Method::Nn, Method::InvertedSoftmax] {
        let mut opts = AlignOptions::new(MapKind::Procrustes, method);
        opts.retrieval.global_sample = true;
        let a = align(&train, &opts)?;
        let r = evaluate_sentence_retrieval(&task.src, &task.tgt, &a.map, &a.retrieval, &pool, 500, &EvalOptions::default())?;
        println!(
            "{method:<16} p@1 {:.3}  p@5 {:.3}  p@10 {:.3}",
            r.overall.precision[0], r.overall.precision[1], r.overall.precision[2]
        );
    }
    Ok(())
}
