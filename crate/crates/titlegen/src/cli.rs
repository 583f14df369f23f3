//! Command-line front end. Each subcommand runs one pipeline stage and
//! prints a short summary on stdout. Failures print one JSON object,
//! `{"error": kind, "message": text}`, on stderr and exit nonzero.

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use crate::config::{Overrides, RunConfig};
use crate::error::AppError;
use crate::pipeline::{Pipeline, SplitName, System};

#[derive(Debug, Parser)]
#[command(name = "titlegen", version, about = "Generate Stack Overflow question titles from post bodies")]
pub struct Cli {
    /// Run configuration (TOML); defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed for sampling, initialization and training.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Keep 1/N of the training split.
    #[arg(long, global = true, value_parser = ["1", "2", "4", "8"])]
    pub fraction: Option<String>,
    /// Encode only the code segments of bodies.
    #[arg(long, global = true)]
    pub code_only: bool,
    /// Accept titles without an interrogative word.
    #[arg(long, global = true)]
    pub no_interrogative_filter: bool,
    /// Disable the copy mechanism.
    #[arg(long, global = true)]
    pub no_copy: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Read the raw corpus (JSON lines or a Posts.xml dump).
    Ingest,
    /// Per-year modality and overlap statistics of the corpus.
    Stats,
    /// Apply the quality filter.
    Filter,
    /// Chronological train/validation/test split.
    Split,
    /// Build the vocabulary from the training split.
    BuildVocab,
    /// Train the model.
    Train,
    /// Decode titles for a split.
    Generate {
        #[arg(long, default_value = "test")]
        split: SplitName,
    },
    /// Score a system's titles against the references.
    Evaluate {
        #[arg(long, default_value = "model")]
        system: System,
        #[arg(long, default_value = "test")]
        split: SplitName,
    },
    /// Nearest-neighbour title retrieval baseline.
    BaselineTfidf {
        #[arg(long, default_value = "test")]
        split: SplitName,
    },
    /// Title tokens that occur in the body.
    BaselineOracle {
        #[arg(long, default_value = "test")]
        split: SplitName,
    },
    /// Finite-difference gradient check of a small model.
    Gradcheck,
    /// Compare every evaluated system.
    Report {
        #[arg(long, default_value = "test")]
        split: SplitName,
    },
}

impl Cli {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            fraction: self.fraction.as_deref().map(|f| f.parse().expect("validated by clap")),
            code_only: self.code_only,
            no_interrogative_filter: self.no_interrogative_filter,
            no_copy: self.no_copy,
        }
    }
}

fn pretty<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("plain data serializes")
}

/// Runs one parsed command; returns the text for stdout.
pub fn execute(cli: &Cli, env: impl Fn(&str) -> Option<String>) -> Result<String, AppError> {
    let cfg = RunConfig::load(cli.config.as_deref(), env, &cli.overrides())?;
    let p = Pipeline::new(cfg);
    Ok(match &cli.command {
        Command::Ingest => {
            let r = p.ingest()?;
            format!("ingested {} questions ({} non-questions, {} invalid rows)", r.posts, r.non_questions, r.invalid_rows.len())
        }
        Command::Stats => p.stats()?,
        Command::Filter => {
            let r = p.filter()?;
            let counts: serde_json::Map<_, _> = r.rejected.iter().map(|c| (c.reason.as_str().to_string(), json!(c.count))).collect();
            pretty(&json!({"input_posts": r.input_posts, "retained": r.retained, "rejected": counts, "malformed": r.malformed.len()}))
        }
        Command::Split => {
            let r = p.split()?;
            pretty(&json!({
                "train": r.split.train.len(),
                "full_train": r.full_train,
                "validation": r.split.validation.len(),
                "test": r.split.test.len(),
            }))
        }
        Command::BuildVocab => format!("vocabulary of {} tokens", p.build_vocab()?.len()),
        Command::Train => {
            let m = p.train()?;
            match (m.best_epoch, m.best_val_loss) {
                (Some(e), Some(l)) => format!("trained {} steps; kept epoch {e} (validation loss {l:.4})", m.steps),
                _ => format!("trained {} steps", m.steps),
            }
        }
        Command::Generate { split } => format!("generated {} titles for {split}", p.generate(*split)?.len()),
        Command::Evaluate { system, split } => crate::report::metrics_table(&p.evaluate(*system, *split)?.report),
        Command::BaselineTfidf { split } => format!("retrieved {} titles for {split}", p.baseline_tfidf(*split)?.len()),
        Command::BaselineOracle { split } => format!("built {} oracle titles for {split}", p.baseline_oracle(*split)?.len()),
        Command::Gradcheck => {
            let s = p.gradcheck()?;
            format!("gradient check passed: {} parameters, max relative error {:.3e} (tolerance {:.0e})", s.parameters, s.max_rel_error, s.tolerance)
        }
        Command::Report { split } => p.report(*split)?,
    })
}

pub fn error_json(e: &AppError) -> String {
    json!({"error": e.kind(), "message": e.to_string()}).to_string()
}

/// Parses `args`, runs the command and reports the outcome.
pub fn run<I, T>(args: I, env: impl Fn(&str) -> Option<String>) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{}", json!({"error": "usage", "message": e.to_string().trim_end()}));
            return ExitCode::from(2);
        }
    };
    match execute(&cli, env) {
        Ok(out) => {
            println!("{}", out.trim_end());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", error_json(&e));
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn global_flags_parse_after_the_subcommand() {
        let cli = Cli::try_parse_from(["titlegen", "evaluate", "--system", "tfidf", "--split", "validation", "--fraction", "4", "--no-copy"]).unwrap();
        let o = cli.overrides();
        assert_eq!(o.fraction, Some(4));
        assert!(o.no_copy && !o.code_only);
        assert!(matches!(
            cli.command,
            Command::Evaluate {
                system: System::Tfidf,
                split: SplitName::Validation
            }
        ));
        assert!(Cli::try_parse_from(["titlegen", "split", "--fraction", "3"]).is_err());
        assert!(Cli::try_parse_from(["titlegen", "generate", "--split", "dev"]).is_err());
    }

    #[test]
    fn missing_artifacts_are_reported() {
        let dir = tempfile::tempdir().unwrap();
        let work = dir.path().to_str().unwrap().to_string();
        let cli = Cli::try_parse_from(["titlegen", "filter"]).unwrap();
        let env = |k: &str| (k == crate::config::WORKDIR_ENV).then(|| work.clone());
        let err = execute(&cli, env).unwrap_err();
        assert!(matches!(err, AppError::MissingArtifact(_)));
        let v: serde_json::Value = serde_json::from_str(&error_json(&err)).unwrap();
        assert_eq!(v["error"], "missing_artifact");
    }
}
