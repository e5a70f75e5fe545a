pub mod attribution;
pub mod cli;
pub mod control_set;
pub mod corpus_io;
pub mod error;
pub mod metrics;
pub mod text;
pub mod word_accuracy;
pub mod zeroshot;

pub use error::{Error, Result};
