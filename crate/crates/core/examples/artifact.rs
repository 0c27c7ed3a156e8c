//! Saves a fitted map with its temperature, reloads it and translates a few
//! words.
//!
//! ```text
//! cargo run --release --example artifact -- /tmp/map.oaln
//! ```

use orthoalign::alignment::{load_map, save_map, MapArtifact, MapKind};
use orthoalign::dictionary::resolve;
use orthoalign::pipeline::{align, AlignOptions};
use orthoalign::retrieval::{Method, Retriever};
use orthoalign::synthetic::{SyntheticConfig, SyntheticTask};

fn main() -> orthoalign::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("orthoalign-example.oaln"));
    let task = SyntheticTask::generate(&SyntheticConfig {
        noise: 0.2,
        ..Default::default()
    })?;
    let a = align(
        &resolve(&task.train, &task.src, &task.tgt)?,
        &AlignOptions::new(MapKind::Procrustes, Method::InvertedSoftmax),
    )?;
    save_map(
        &MapArtifact {
            map: a.map,
            provenance: "synthetic".into(),
            beta: a.beta.map(|b| b.beta),
        },
        &path,
    )?;
    let loaded = load_map(&path)?;
    println!("{}: {} map, rank {}, beta {:?}", path.display(), loaded.map.kind(), loaded.map.rank(), loaded.beta);

    let xs = loaded.map.project_sources(task.src.matrix())?;
    let ys = loaded.map.project_targets(task.tgt.matrix())?;
    let cfg = orthoalign::retrieval::RetrievalConfig {
        beta: loaded.beta.unwrap_or(1.0),
        ..a.retrieval
    };
    let r = Retriever::new(&xs, &ys, cfg)?;
    for (source, target) in task.test.iter().take(5) {
        let j = task.src.vocab().rank(source).expect("test word in vocabulary");
        let top = r.top_k(j, 3)?;
        let words: Vec<&str> = top.indices.iter().map(|&i| task.tgt.vocab().word(i)).collect();
        println!("{source} -> {words:?} (expected {target})");
    }
    Ok(())
}
