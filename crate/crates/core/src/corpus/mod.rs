//! Question posts, bi-modal body segmentation, quality filtering,
//! chronological partitioning and corpus statistics.

mod filter;
mod markup;
mod split;
mod stats;

use alloc::string::String;
use alloc::vec::Vec;

use chrono::{DateTime, Utc};

pub use filter::{filter_corpus, has_interrogative, passes_quality_filter, FilterConfig, FilterOutcome, RejectionReason, Verdict, INTERROGATIVES};
pub use markup::{parse_body, unescape_entities, Segment, SegmentKind, SegmentedBody, CODE_CLOSE, CODE_OPEN};
pub use split::{sample_fraction, split_chronological, DatasetSplit, SplitDates, SplitPlan};
pub use stats::{corpus_stats, overlap_ratio, OverlapMode, Quartiles, StatsAccumulator, StatsReport, YearStats};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CorpusError {
    #[error("malformed markup at byte {offset}: {reason}")]
    MalformedMarkup { offset: usize, reason: &'static str },
    #[error("requested {requested} posts but the corpus holds {available}")]
    InsufficientData { requested: usize, available: usize },
    #[error("duplicate post id {0}")]
    DuplicateId(u64),
    #[error("title has no tokens")]
    EmptyTitle,
    #[error("invalid filter config: {0}")]
    InvalidConfig(&'static str),
    #[error("invalid split plan: {0}")]
    InvalidSplit(&'static str),
}

/// One Stack Overflow question with the signals the filters read.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct QuestionPost {
    pub id: u64,
    pub creation_date: DateTime<Utc>,
    pub title: String,
    pub body_markup: String,
    pub tags: Vec<String>,
    pub score: i64,
    pub has_accepted_answer: bool,
    pub is_closed: bool,
}

impl QuestionPost {
    /// First tag from `languages` the post carries, in `languages` order.
    pub fn language<'a, I>(&self, languages: I) -> Option<&'a str>
    where
        I: IntoIterator<Item = &'a String>,
    {
        languages
            .into_iter()
            .find(|l| self.tags.iter().any(|t| t == *l))
            .map(String::as_str)
    }
}
