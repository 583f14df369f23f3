use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use chrono::Datelike;

use super::{parse_body, CorpusError, QuestionPost, SegmentKind, SegmentedBody};
use crate::tokenizer::Tokenizer;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum OverlapMode {
    /// `|set(title) ∩ set(body)| / |set(title)|`.
    #[default]
    Unique,
    /// `Σ_t min(title_count(t), body_count(t)) / len(title)`.
    Multiset,
}

/// Share of title tokens that also occur in `body`.
pub fn overlap_ratio(title: &[String], body: &[String], mode: OverlapMode) -> Result<f64, CorpusError> {
    if title.is_empty() {
        return Err(CorpusError::EmptyTitle);
    }
    match mode {
        OverlapMode::Unique => {
            let t: BTreeSet<&str> = title.iter().map(String::as_str).collect();
            let b: BTreeSet<&str> = body.iter().map(String::as_str).collect();
            Ok(t.intersection(&b).count() as f64 / t.len() as f64)
        }
        OverlapMode::Multiset => {
            let mut b: BTreeMap<&str, usize> = BTreeMap::new();
            for tok in body {
                *b.entry(tok).or_default() += 1;
            }
            let mut hits = 0usize;
            for tok in title {
                if let Some(c) = b.get_mut(tok.as_str()).filter(|c| **c > 0) {
                    *c -= 1;
                    hits += 1;
                }
            }
            Ok(hits as f64 / title.len() as f64)
        }
    }
}

/// Five-number summary with linearly interpolated quartiles.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Quartiles {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl Quartiles {
    /// `None` for an empty sample.
    pub fn of(values: &[usize]) -> Option<Quartiles> {
        if values.is_empty() {
            return None;
        }
        let mut v: Vec<f64> = values.iter().map(|&x| x as f64).collect();
        v.sort_by(f64::total_cmp);
        let at = |q: f64| {
            let pos = q * (v.len() - 1) as f64;
            let lo = pos as usize;
            let hi = (lo + 1).min(v.len() - 1);
            v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
        };
        Some(Quartiles {
            min: v[0],
            q1: at(0.25),
            median: at(0.5),
            q3: at(0.75),
            max: v[v.len() - 1],
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct YearStats {
    pub year: i32,
    pub posts: usize,
    pub with_text: usize,
    pub with_code: usize,
    pub text_proportion: f64,
    pub code_proportion: f64,
    /// Mean over posts that have text; `None` when none do.
    pub mean_text_overlap: Option<f64>,
    pub mean_code_overlap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StatsReport {
    pub posts: usize,
    pub malformed: usize,
    pub years: Vec<YearStats>,
    pub body_length: Option<Quartiles>,
    /// Over posts with a code segment.
    pub code_length: Option<Quartiles>,
    /// Over posts with a text segment.
    pub text_length: Option<Quartiles>,
    pub fraction_body_over_200: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
struct YearAcc {
    posts: usize,
    with_text: usize,
    with_code: usize,
    text_overlaps: Vec<f64>,
    code_overlaps: Vec<f64>,
}

/// Mergeable fold behind [`corpus_stats`]. Every field is a count or a
/// multiset of samples, so the finished report does not depend on the order
/// in which posts were added or partial accumulators merged.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StatsAccumulator {
    mode: OverlapMode,
    malformed: usize,
    years: BTreeMap<i32, YearAcc>,
    body_lengths: Vec<usize>,
    code_lengths: Vec<usize>,
    text_lengths: Vec<usize>,
}

impl StatsAccumulator {
    pub fn new(mode: OverlapMode) -> Self {
        StatsAccumulator {
            mode,
            ..Self::default()
        }
    }

    pub fn add(&mut self, post: &QuestionPost, tokenizer: &Tokenizer) {
        match parse_body(&post.body_markup) {
            Ok(body) => self.add_parsed(post, &body, tokenizer),
            Err(_) => self.malformed += 1,
        }
    }

    pub fn add_parsed(&mut self, post: &QuestionPost, body: &SegmentedBody, tokenizer: &Tokenizer) {
        let kind_tokens = |k: SegmentKind| -> Vec<String> { body.of_kind(k).flat_map(|s| tokenizer.tokenize(&s.plain_text())).collect() };
        let text = kind_tokens(SegmentKind::Text);
        let code = kind_tokens(SegmentKind::Code);
        let title = tokenizer.tokenize(&post.title);
        let has_text = body.has_content(SegmentKind::Text);
        let has_code = body.has_content(SegmentKind::Code);

        let year = self.years.entry(post.creation_date.year()).or_default();
        year.posts += 1;
        if has_text {
            year.with_text += 1;
            self.text_lengths.push(text.len());
            if let Ok(r) = overlap_ratio(&title, &text, self.mode) {
                year.text_overlaps.push(r);
            }
        }
        if has_code {
            year.with_code += 1;
            self.code_lengths.push(code.len());
            if let Ok(r) = overlap_ratio(&title, &code, self.mode) {
                year.code_overlaps.push(r);
            }
        }
        self.body_lengths.push(text.len() + code.len());
    }

    pub fn merge(&mut self, other: StatsAccumulator) {
        self.malformed += other.malformed;
        for (y, acc) in other.years {
            let mine = self.years.entry(y).or_default();
            mine.posts += acc.posts;
            mine.with_text += acc.with_text;
            mine.with_code += acc.with_code;
            mine.text_overlaps.extend(acc.text_overlaps);
            mine.code_overlaps.extend(acc.code_overlaps);
        }
        self.body_lengths.extend(other.body_lengths);
        self.code_lengths.extend(other.code_lengths);
        self.text_lengths.extend(other.text_lengths);
    }

    pub fn finish(self) -> StatsReport {
        let posts = self.body_lengths.len();
        let years = self
            .years
            .into_iter()
            .map(|(year, acc)| YearStats {
                year,
                posts: acc.posts,
                with_text: acc.with_text,
                with_code: acc.with_code,
                text_proportion: acc.with_text as f64 / acc.posts as f64,
                code_proportion: acc.with_code as f64 / acc.posts as f64,
                mean_text_overlap: sorted_mean(acc.text_overlaps),
                mean_code_overlap: sorted_mean(acc.code_overlaps),
            })
            .collect();
        let over = self.body_lengths.iter().filter(|&&l| l > 200).count();
        StatsReport {
            posts,
            malformed: self.malformed,
            years,
            body_length: Quartiles::of(&self.body_lengths),
            code_length: Quartiles::of(&self.code_lengths),
            text_length: Quartiles::of(&self.text_lengths),
            fraction_body_over_200: if posts == 0 { 0.0 } else { over as f64 / posts as f64 },
        }
    }
}

/// Summation in sorted order makes the mean independent of arrival order.
fn sorted_mean(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    Some(v.iter().sum::<f64>() / v.len() as f64)
}

/// Per-year modality proportions and overlap means, token-length
/// quartiles, and the share of bodies longer than 200 tokens.
pub fn corpus_stats(posts: &[QuestionPost], tokenizer: &Tokenizer, mode: OverlapMode) -> StatsReport {
    let mut acc = StatsAccumulator::new(mode);
    for p in posts {
        acc.add(p, tokenizer);
    }
    acc.finish()
}
