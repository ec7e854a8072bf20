pub mod dataset;
pub mod error;
pub mod labels;
pub mod metrics;
pub mod rtf;
pub mod cli;
pub mod simulate;
pub mod stft;
pub mod synthetic;

pub use error::{Error, Result};
