use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{parse_body, CorpusError, QuestionPost, SegmentedBody};
use crate::tokenizer::{body_tokens, SourceView, Tokenizer};

/// Title keywords required by the interrogative constraint.
pub const INTERROGATIVES: [&str; 5] = ["how", "what", "why", "which", "when"];

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct FilterConfig {
    pub min_score: i64,
    pub require_accepted: bool,
    pub require_open: bool,
    pub allowed_tags: BTreeSet<String>,
    pub excluded_tags: BTreeSet<String>,
    pub require_bimodal: bool,
    pub interrogative_constraint: bool,
    pub max_body_tokens: usize,
    pub max_title_tokens: usize,
    /// Feed only code segments to the encoder. Filtering is unaffected.
    pub code_only: bool,
}

impl Default for FilterConfig {
    fn default() -> Self {
        let set = |v: &[&str]| v.iter().map(|s| s.to_string()).collect();
        FilterConfig {
            min_score: 2,
            require_accepted: true,
            require_open: true,
            allowed_tags: set(&["java", "python", "javascript", "php"]),
            excluded_tags: set(&["c#", "html", "c++"]),
            require_bimodal: true,
            interrogative_constraint: true,
            max_body_tokens: 1000,
            max_title_tokens: 25,
            code_only: false,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.max_title_tokens == 0 {
            return Err(CorpusError::InvalidConfig("max_title_tokens must be positive"));
        }
        if self.max_body_tokens <= self.max_title_tokens {
            return Err(CorpusError::InvalidConfig("max_body_tokens must exceed max_title_tokens"));
        }
        Ok(())
    }

    pub fn source_view(&self) -> SourceView {
        if self.code_only {
            SourceView::CodeOnly
        } else {
            SourceView::BiModal
        }
    }
}

/// Constraints in evaluation order; a rejection names the first one failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum RejectionReason {
    Closed,
    NoAcceptedAnswer,
    Score,
    TagNotAllowed,
    ExcludedTag,
    NotBimodal,
    Interrogative,
    BodyTooLong,
    TitleTooLong,
}

impl RejectionReason {
    pub const ALL: [RejectionReason; 9] = [
        RejectionReason::Closed,
        RejectionReason::NoAcceptedAnswer,
        RejectionReason::Score,
        RejectionReason::TagNotAllowed,
        RejectionReason::ExcludedTag,
        RejectionReason::NotBimodal,
        RejectionReason::Interrogative,
        RejectionReason::BodyTooLong,
        RejectionReason::TitleTooLong,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RejectionReason::Closed => "closed",
            RejectionReason::NoAcceptedAnswer => "no_accepted_answer",
            RejectionReason::Score => "score",
            RejectionReason::TagNotAllowed => "tag_not_allowed",
            RejectionReason::ExcludedTag => "excluded_tag",
            RejectionReason::NotBimodal => "not_bimodal",
            RejectionReason::Interrogative => "interrogative",
            RejectionReason::BodyTooLong => "body_too_long",
            RejectionReason::TitleTooLong => "title_too_long",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Verdict {
    pub rejection: Option<RejectionReason>,
}

impl Verdict {
    pub fn passed(&self) -> bool {
        self.rejection.is_none()
    }
}

/// Whole-token, case-insensitive keyword match on the title.
pub fn has_interrogative(title: &str) -> bool {
    let tok = Tokenizer { lowercase: true };
    tok.tokenize(title).iter().any(|t| INTERROGATIVES.contains(&t.as_str()))
}

/// Applies every enabled constraint in order. Fails only when the body
/// markup cannot be segmented.
pub fn passes_quality_filter(post: &QuestionPost, cfg: &FilterConfig, tokenizer: &Tokenizer) -> Result<Verdict, CorpusError> {
    let body = parse_body(&post.body_markup)?;
    Ok(check_parsed(post, &body, cfg, tokenizer))
}

fn check_parsed(post: &QuestionPost, body: &SegmentedBody, cfg: &FilterConfig, tokenizer: &Tokenizer) -> Verdict {
    let reject = |r| Verdict { rejection: Some(r) };
    if cfg.require_open && post.is_closed {
        return reject(RejectionReason::Closed);
    }
    if cfg.require_accepted && !post.has_accepted_answer {
        return reject(RejectionReason::NoAcceptedAnswer);
    }
    if post.score < cfg.min_score {
        return reject(RejectionReason::Score);
    }
    if !cfg.allowed_tags.is_empty() && !post.tags.iter().any(|t| cfg.allowed_tags.contains(t)) {
        return reject(RejectionReason::TagNotAllowed);
    }
    if post.tags.iter().any(|t| cfg.excluded_tags.contains(t)) {
        return reject(RejectionReason::ExcludedTag);
    }
    if cfg.require_bimodal && !body.is_bimodal() {
        return reject(RejectionReason::NotBimodal);
    }
    if cfg.interrogative_constraint && !has_interrogative(&post.title) {
        return reject(RejectionReason::Interrogative);
    }
    if body_tokens(body, tokenizer, SourceView::BiModal).len() > cfg.max_body_tokens {
        return reject(RejectionReason::BodyTooLong);
    }
    if tokenizer.tokenize(&post.title).len() > cfg.max_title_tokens {
        return reject(RejectionReason::TitleTooLong);
    }
    Verdict { rejection: None }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FilterOutcome {
    pub retained: Vec<QuestionPost>,
    pub rejected: Vec<(u64, RejectionReason)>,
    /// Ids whose body markup could not be segmented.
    pub malformed: Vec<u64>,
}

impl FilterOutcome {
    /// Rejection count per reason, every reason present.
    pub fn histogram(&self) -> BTreeMap<RejectionReason, usize> {
        let mut h: BTreeMap<_, _> = RejectionReason::ALL.iter().map(|&r| (r, 0)).collect();
        for (_, r) in &self.rejected {
            *h.entry(*r).or_default() += 1;
        }
        h
    }
}

/// Partitions `posts` into retained, rejected and malformed, preserving input order.
pub fn filter_corpus(posts: &[QuestionPost], cfg: &FilterConfig, tokenizer: &Tokenizer) -> FilterOutcome {
    let mut out = FilterOutcome::default();
    for post in posts {
        match passes_quality_filter(post, cfg, tokenizer) {
            Ok(v) => match v.rejection {
                None => out.retained.push(post.clone()),
                Some(r) => out.rejected.push((post.id, r)),
            },
            Err(_) => out.malformed.push(post.id),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use chrono::{TimeZone, Utc};
    use proptest::prelude::*;

    fn post(title: &str, score: i64) -> QuestionPost {
        QuestionPost {
            id: 1,
            creation_date: Utc.with_ymd_and_hms(2019, 5, 1, 0, 0, 0).unwrap(),
            title: title.into(),
            body_markup: "<p>sorting fails</p><code>map.sort()</code>".into(),
            tags: vec!["java".into()],
            score,
            has_accepted_answer: true,
            is_closed: false,
        }
    }

    fn verdict(p: &QuestionPost, cfg: &FilterConfig) -> Option<RejectionReason> {
        passes_quality_filter(p, cfg, &Tokenizer::default()).unwrap().rejection
    }

    #[test]
    fn accepts_a_compliant_post() {
        assert_eq!(verdict(&post("how to sort a map", 2), &FilterConfig::default()), None);
    }

    #[test]
    fn rejects_low_score() {
        assert_eq!(verdict(&post("how to sort a map", 1), &FilterConfig::default()), Some(RejectionReason::Score));
    }

    #[test]
    fn keyword_titles_fail_interrogative_constraint() {
        let cfg = FilterConfig::default();
        assert_eq!(verdict(&post("java month enum", 5), &cfg), Some(RejectionReason::Interrogative));
        let relaxed = FilterConfig {
            interrogative_constraint: false,
            ..cfg
        };
        assert_eq!(verdict(&post("java month enum", 5), &relaxed), None);
    }

    #[test]
    fn interrogatives_match_whole_words_only() {
        assert!(has_interrogative("How do I"));
        assert!(has_interrogative("so... WHY?"));
        assert!(!has_interrogative("showcase whatever whenever"));
    }

    #[test]
    fn first_failed_constraint_is_reported() {
        let mut p = post("java month enum", 0);
        p.is_closed = true;
        p.has_accepted_answer = false;
        assert_eq!(verdict(&p, &FilterConfig::default()), Some(RejectionReason::Closed));
        p.is_closed = false;
        assert_eq!(verdict(&p, &FilterConfig::default()), Some(RejectionReason::NoAcceptedAnswer));
    }

    #[test]
    fn tag_rules() {
        let cfg = FilterConfig::default();
        let mut p = post("how to sort a map", 3);
        p.tags = vec!["rust".into()];
        assert_eq!(verdict(&p, &cfg), Some(RejectionReason::TagNotAllowed));
        p.tags = vec!["python".into(), "c++".into()];
        assert_eq!(verdict(&p, &cfg), Some(RejectionReason::ExcludedTag));
    }

    #[test]
    fn bimodal_and_length_rules() {
        let cfg = FilterConfig::default();
        let mut p = post("how to sort a map", 3);
        p.body_markup = "only prose".into();
        assert_eq!(verdict(&p, &cfg), Some(RejectionReason::NotBimodal));
        p.body_markup = alloc::format!("text <code>{}</code>", "x ".repeat(1000));
        assert_eq!(verdict(&p, &cfg), Some(RejectionReason::BodyTooLong));
        let mut p = post(&"how ".repeat(26), 3);
        p.id = 2;
        assert_eq!(verdict(&p, &cfg), Some(RejectionReason::TitleTooLong));
    }

    #[test]
    fn config_validation() {
        assert!(FilterConfig::default().validate().is_ok());
        let bad = FilterConfig {
            max_body_tokens: 25,
            ..FilterConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn malformed_bodies_are_set_aside() {
        let mut p = post("how to sort a map", 3);
        p.body_markup = "<code>x".into();
        let out = filter_corpus(&[p], &FilterConfig::default(), &Tokenizer::default());
        assert_eq!(out.malformed, vec![1]);
        assert!(out.retained.is_empty());
    }

    fn arb_post() -> impl Strategy<Value = QuestionPost> {
        (
            any::<u32>(),
            -1i64..5,
            any::<bool>(),
            any::<bool>(),
            prop::sample::select(vec!["java", "python", "rust", "c++", "php"]),
            prop::sample::select(vec!["how to x", "why does y fail", "z enum", "which is faster when"]),
            prop::sample::select(vec!["text <code>a=b</code>", "text only", "<code>only()</code>"]),
        )
            .prop_map(|(id, score, acc, closed, tag, title, body)| QuestionPost {
                id: id as u64,
                creation_date: Utc.timestamp_opt(1_300_000_000 + id as i64, 0).unwrap(),
                title: title.into(),
                body_markup: body.into(),
                tags: vec![tag.into()],
                score,
                has_accepted_answer: acc,
                is_closed: closed,
            })
    }

    proptest! {
        #[test]
        fn filtering_is_idempotent(posts in proptest::collection::vec(arb_post(), 0..30)) {
            let cfg = FilterConfig::default();
            let tok = Tokenizer::default();
            let once = filter_corpus(&posts, &cfg, &tok);
            let twice = filter_corpus(&once.retained, &cfg, &tok);
            prop_assert_eq!(&twice.retained, &once.retained);
            for p in &once.retained {
                let body = parse_body(&p.body_markup).unwrap();
                prop_assert!(body.is_bimodal() && p.score >= 2 && p.has_accepted_answer && !p.is_closed);
            }
            prop_assert_eq!(once.retained.len() + once.rejected.len() + once.malformed.len(), posts.len());
        }
    }
}
