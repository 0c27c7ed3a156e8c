//! Trains without a seed dictionary, using words spelled the same in both
//! languages as training pairs.
//!
//! ```text
//! cargo run --release --example pseudo_dictionary
//! ```

use orthoalign::alignment::MapKind;
use orthoalign::dictionary::{build_pseudo_dictionary, resolve};
use orthoalign::evaluation::{evaluate_words, EvalOptions, TestSet};
use orthoalign::pipeline::{align, AlignOptions};
use orthoalign::retrieval::Method;
use orthoalign::synthetic::{SyntheticConfig, SyntheticTask};

fn main() -> orthoalign::Result<()> {
    let task = SyntheticTask::generate(&SyntheticConfig {
        noise: 0.2,
        shared_fraction: 0.3,
        ..Default::default()
    })?;
    let pseudo = build_pseudo_dictionary(task.src.vocab(), task.tgt.vocab())?;
    let train = resolve(&pseudo, &task.src, &task.tgt)?;
    println!("{} identically spelled pairs", train.n());

    let test = TestSet::from_pairs(&task.test, task.src.vocab())?;
    for kind in [MapKind::Procrustes, MapKind::Lsq] {
        let a = align(&train, &AlignOptions::new(kind, Method::Nn))?;
        let r = evaluate_words(&task.src, &task.tgt, &a.map, &a.retrieval, &test, &EvalOptions::default())?;
        println!("{kind:<10} p@1 {:.3}", r.overall.precision[0]);
    }
    Ok(())
}
