//! Signed-graph transformer for link sign prediction with distance-based
//! explanations.

pub mod config;
pub mod encodings;
pub mod error;
pub mod explain;
pub mod expressivity;
pub mod graph;
pub mod model;
pub mod pipeline;
pub mod rng;
pub mod srwr;
pub mod training;
pub mod transformer;

pub use error::{Error, Result};
