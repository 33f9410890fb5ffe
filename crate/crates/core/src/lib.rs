pub mod bench;
pub mod cli;
pub mod counters;
pub mod error;
pub mod graph;
pub mod gwishart;
pub mod io;
pub mod linalg;
pub mod scoring;
pub mod search;
pub mod stochvol;

pub use error::{Error, Result};
