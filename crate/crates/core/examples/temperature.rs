//! Fits the inverse temperature by maximum likelihood on training pairs and
//! prints the objective around the optimum.
//!
//! ```text
//! cargo run --release --example temperature
//! ```

use orthoalign::alignment::{fit_map, MapKind};
use orthoalign::dictionary::resolve;
use orthoalign::retrieval::{maximize_beta, BetaObjective, Method, DEFAULT_BETA_MAX};
use orthoalign::synthetic::{SyntheticConfig, SyntheticTask};

fn main() -> orthoalign::Result<()> {
    let task = SyntheticTask::generate(&SyntheticConfig {
        noise: 0.2,
        ..Default::default()
    })?;
    let train = resolve(&task.train, &task.src, &task.tgt)?;
    let map = fit_map(MapKind::Procrustes, &train)?;
    let xs = map.project_sources(&train.x_d)?;
    let ys = map.project_targets(&train.y_d)?;

    for method in [Method::Softmax, Method::InvertedSoftmax] {
        let objective = BetaObjective::new(&xs, &ys, method)?;
        let fit = maximize_beta(&objective, DEFAULT_BETA_MAX)?;
        println!("{method}: beta {:.3}, log-likelihood {:.2}, diverged {}", fit.beta, fit.objective, fit.diverged);
        for scale in [0.5, 0.9, 1.0, 1.1, 2.0] {
            let b = fit.beta * scale;
            println!("  beta {b:>8.3}  {:.2}", objective.value(b)?);
        }
    }
    Ok(())
}
