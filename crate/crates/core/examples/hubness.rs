//! Shows a hub target stealing nearest-neighbour queries and the inverted
//! softmax redistributing them.
//!
//! ```text
//! cargo run --release --example hubness
//! ```

use orthoalign::alignment::{fit_map, MapKind};
use orthoalign::dictionary::resolve;
use orthoalign::retrieval::{hub_counts, Method, RetrievalConfig, Retriever};
use orthoalign::synthetic::{hub_instance, SyntheticConfig, SyntheticTask};

fn main() -> orthoalign::Result<()> {
    let h = hub_instance();
    for method in [Method::Nn, Method::InvertedSoftmax] {
        let cfg = RetrievalConfig {
            beta: 10.0,
            ..RetrievalConfig::with_method(method)
        };
        let r = Retriever::new(&h.sources, &h.targets, cfg)?;
        let picks: Vec<usize> = (0..h.truth.len()).map(|j| r.top_k(j, 1).map(|c| c.indices[0])).collect::<Result<_, _>>()?;
        println!("{method:<16} picks {picks:?} (truth {:?}, hub {})", h.truth, h.hub);
    }

    let task = SyntheticTask::generate(&SyntheticConfig {
        vocab: 1500,
        dim: 20,
        noise: 0.4,
        ..Default::default()
    })?;
    let map = fit_map(MapKind::Procrustes, &resolve(&task.train, &task.src, &task.tgt)?)?;
    let xs = map.project_sources(task.src.matrix())?;
    let ys = map.project_targets(task.tgt.matrix())?;
    for method in [Method::Nn, Method::InvertedSoftmax] {
        let cfg = RetrievalConfig {
            beta: 15.0,
            n_s: 500,
            global_sample: true,
            ..RetrievalConfig::with_method(method)
        };
        let mut counts = hub_counts(&xs, &ys, &cfg)?;
        counts.sort_unstable_by(|a, b| b.cmp(a));
        let never = counts.iter().filter(|&&c| c == 0).count();
        println!("{method:<16} busiest targets {:?}, never retrieved {never}", &counts[..5]);
    }
    Ok(())
}
