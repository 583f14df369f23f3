use std::io;
use std::path::PathBuf;

use titlegen_core::baselines::BaselineError;
use titlegen_core::corpus::CorpusError;
use titlegen_core::decode::DecodeError;
use titlegen_core::metrics::MetricError;
use titlegen_core::model::ModelError;
use titlegen_core::tensor::TensorError;
use titlegen_core::tokenizer::TokenizerError;

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}:{line}: {source}")]
    Json { path: PathBuf, line: usize, source: serde_json::Error },
    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },
    #[error("missing artifact {0}; run the stage that produces it first")]
    MissingArtifact(PathBuf),
    #[error("config: {0}")]
    Config(String),
    #[error("post {id}: {source}")]
    Post { id: u64, source: CorpusError },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Tokenizer(#[from] TokenizerError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error("gradient check failed: worst group {group} at relative error {error:.3e}")]
    GradCheck { group: String, error: f64 },
}

impl AppError {
    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> AppError {
        let path = path.into();
        move |source| {
            if source.kind() == io::ErrorKind::NotFound {
                AppError::MissingArtifact(path)
            } else {
                AppError::Io { path, source }
            }
        }
    }

    pub fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> AppError {
        AppError::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }

    /// Stable machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            AppError::Io { .. } => "io",
            AppError::Json { .. } => "json",
            AppError::Format { .. } => "format",
            AppError::MissingArtifact(_) => "missing_artifact",
            AppError::Config(_) => "config",
            AppError::Post { .. } | AppError::Corpus(_) => "corpus",
            AppError::Tokenizer(_) => "tokenizer",
            AppError::Tensor(_) => "tensor",
            AppError::Model(_) => "model",
            AppError::Decode(_) => "decode",
            AppError::Metric(_) => "metric",
            AppError::Baseline(_) => "baseline",
            AppError::GradCheck { .. } => "gradcheck",
        }
    }
}
