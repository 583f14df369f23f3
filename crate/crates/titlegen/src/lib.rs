//! Pipeline, file formats and command-line front end for the question-title
//! generator in `titlegen-core`.

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod dataset;
pub mod error;
pub mod fixtures;
pub mod hash;
pub mod importer;
pub mod index_file;
pub mod jsonl;
pub mod manifest;
pub mod parallel;
pub mod pipeline;
pub mod report;
pub mod vocab_file;

pub use error::AppError;
