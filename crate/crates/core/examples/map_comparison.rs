//! Compares the orthogonal map, unconstrained least squares and CCA on the
//! same task, with and without noisy dictionary entries.
//!
//! ```text
//! cargo run --release --example map_comparison
//! ```

use orthoalign::alignment::MapKind;
use orthoalign::dictionary::resolve;
use orthoalign::evaluation::{evaluate_words, EvalOptions, TestSet};
use orthoalign::pipeline::{align, AlignOptions};
use orthoalign::retrieval::Method;
use orthoalign::synthetic::{SyntheticConfig, SyntheticTask};

fn main() -> orthoalign::Result<()> {
    for mispair_fraction in [0.0, 0.3] {
        let task = SyntheticTask::generate(&SyntheticConfig {
            noise: 0.2,
            mispair_fraction,
            ..Default::default()
        })?;
        let train = resolve(&task.train, &task.src, &task.tgt)?;
        let test = TestSet::from_pairs(&task.test, task.src.vocab())?;
        println!("mispaired fraction {mispair_fraction}");
        for kind in [MapKind::Procrustes, MapKind::Lsq, MapKind::Cca] {
            let a = align(&train, &AlignOptions::new(kind, Method::Nn))?;
            let r = evaluate_words(&task.src, &task.tgt, &a.map, &a.retrieval, &test, &EvalOptions::default())?;
            println!("  {kind:<10} p@1 {:.3}  p@10 {:.3}", r.overall.precision[0], r.overall.precision[2]);
        }
    }
    Ok(())
}
