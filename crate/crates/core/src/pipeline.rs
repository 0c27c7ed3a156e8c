//! Fitting a map together with its retrieval hyper-parameters, as done by
//! the `align` command.

use crate::alignment::{default_rank_grid, fit_map, select_rank_fitted, FittedMap, MapKind};
use crate::dictionary::PairedMatrices;
use crate::error::Result;
use crate::retrieval::{fit_beta, BetaFit, Method, RetrievalConfig};

/// Training pairs used for β fitting and rank selection.
pub const HYPERPARAMETER_MAX_PAIRS: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankChoice {
    Full,
    Fixed(usize),
    /// Best training precision@1 over [`default_rank_grid`].
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignOptions {
    pub kind: MapKind,
    pub rank: RankChoice,
    /// Retrieval settings used while tuning. `beta` is only used when
    /// `fixed_beta` is set.
    pub retrieval: RetrievalConfig,
    /// Skip β fitting and use `retrieval.beta`.
    pub fixed_beta: bool,
}

impl AlignOptions {
    pub fn new(kind: MapKind, method: Method) -> Self {
        Self {
            kind,
            rank: RankChoice::Full,
            retrieval: RetrievalConfig::with_method(method),
            fixed_beta: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Aligned {
    pub map: FittedMap,
    /// Present unless the method is nearest neighbour.
    pub beta: Option<BetaFit>,
    /// Retrieval configuration matching the fitted map.
    pub retrieval: RetrievalConfig,
}

fn temperature(map: &FittedMap, tuning: &PairedMatrices, opts: &AlignOptions) -> Result<Option<BetaFit>> {
    let cfg = &opts.retrieval;
    match cfg.method {
        Method::Nn => Ok(None),
        _ if opts.fixed_beta => Ok(Some(BetaFit {
            beta: cfg.beta,
            diverged: false,
            objective: f64::NAN,
        })),
        m => fit_beta(tuning, map, cfg, m).map(Some),
    }
}

/// Fits the map, then (for softmax methods) β, then the rank. With an
/// automatic rank, β is fitted at full rank for the search and refitted at
/// the chosen rank.
pub fn align(train: &PairedMatrices, opts: &AlignOptions) -> Result<Aligned> {
    let mut map = fit_map(opts.kind, train)?;
    let tuning = train.subsample(HYPERPARAMETER_MAX_PAIRS, opts.retrieval.seed);
    match opts.rank {
        RankChoice::Full => {}
        RankChoice::Fixed(k) => map = map.with_rank(k)?,
        RankChoice::Auto => {
            let beta = temperature(&map, &tuning, opts)?;
            let cfg = RetrievalConfig {
                beta: beta.map_or(opts.retrieval.beta, |b| b.beta),
                ..opts.retrieval
            };
            let k = select_rank_fitted(&map, &tuning, &cfg, &default_rank_grid(map.dim()))?;
            map = map.with_rank(k)?;
        }
    }
    let beta = temperature(&map, &tuning, opts)?;
    let retrieval = RetrievalConfig {
        beta: beta.map_or(opts.retrieval.beta, |b| b.beta),
        ..opts.retrieval
    };
    Ok(Aligned { map, beta, retrieval })
}
