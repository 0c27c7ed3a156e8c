pub mod alignment;
pub mod cli;
pub mod dictionary;
pub mod embeddings;
pub mod error;
pub mod evaluation;
pub mod numerics;
pub mod pipeline;
pub mod retrieval;
pub mod synthetic;

pub use error::{Error, ErrorClass, Result};
