//! Sentence-level BLEUS-4, ROUGE-N and ROUGE-L over token sequences, and
//! their unweighted corpus means.
//!
//! Every metric scores an empty candidate as 0.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricError {
    #[error("reference has no tokens")]
    EmptyReference,
    #[error("{candidates} candidates for {references} references")]
    LengthMismatch { candidates: usize, references: usize },
}

/// Multiset of the `n`-grams of one sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NgramProfile<'a> {
    pub n: usize,
    pub counts: BTreeMap<&'a [String], usize>,
}

impl<'a> NgramProfile<'a> {
    pub fn new(tokens: &'a [String], n: usize) -> Self {
        let mut counts = BTreeMap::new();
        if n > 0 && tokens.len() >= n {
            for w in tokens.windows(n) {
                *counts.entry(w).or_default() += 1;
            }
        }
        NgramProfile { n, counts }
    }

    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    /// `Σ_g min(self[g], other[g])`.
    pub fn clipped_matches(&self, other: &NgramProfile<'_>) -> usize {
        self.counts
            .iter()
            .map(|(g, &c)| c.min(other.counts.get(g).copied().unwrap_or(0)))
            .sum()
    }
}

/// Smoothed BLEU-4: `p_1` is the plain clipped precision and `p_n` for
/// `n ≥ 2` is `(hits + 1) / (total + 1)`. The geometric mean is scaled by the
/// brevity penalty `exp(1 - l_r / l_c)` when the candidate is not longer
/// than the reference.
pub fn bleus4(candidate: &[String], reference: &[String]) -> f64 {
    if candidate.is_empty() {
        return 0.0;
    }
    let mut log_sum = 0.0;
    for n in 1..=4 {
        let c = NgramProfile::new(candidate, n);
        let r = NgramProfile::new(reference, n);
        let hits = c.clipped_matches(&r) as f64;
        let total = c.total() as f64;
        let p = if n == 1 {
            if hits == 0.0 {
                return 0.0;
            }
            hits / total
        } else {
            (hits + 1.0) / (total + 1.0)
        };
        log_sum += libm::log(p);
    }
    let (lc, lr) = (candidate.len() as f64, reference.len() as f64);
    let bp = if lc > lr { 1.0 } else { libm::exp(1.0 - lr / lc) };
    bp * libm::exp(log_sum / 4.0)
}

/// Clipped `n`-gram recall against the reference. A reference shorter than
/// `n` has no `n`-grams and scores 0.
pub fn rouge_n(candidate: &[String], reference: &[String], n: usize) -> Result<f64, MetricError> {
    if reference.is_empty() {
        return Err(MetricError::EmptyReference);
    }
    let r = NgramProfile::new(reference, n);
    let total = r.total();
    if total == 0 || candidate.is_empty() {
        return Ok(0.0);
    }
    let c = NgramProfile::new(candidate, n);
    Ok(r.clipped_matches(&c) as f64 / total as f64)
}

/// Length of the longest common subsequence.
pub fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut row = alloc::vec![0usize; b.len() + 1];
    for x in a {
        let mut diag = 0;
        for (j, y) in b.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if x == y { diag + 1 } else { up.max(row[j]) };
            diag = up;
        }
    }
    row[b.len()]
}

/// Combination of LCS recall and precision used for ROUGE-L.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum RougeLForm {
    /// `2RP / (R + P)`.
    #[default]
    F1,
    /// `RP / (R + P)`, which scores identical sequences 0.5.
    HalfF1,
}

pub fn rouge_l(candidate: &[String], reference: &[String], form: RougeLForm) -> Result<f64, MetricError> {
    if reference.is_empty() {
        return Err(MetricError::EmptyReference);
    }
    if candidate.is_empty() {
        return Ok(0.0);
    }
    let lcs = lcs_len(reference, candidate) as f64;
    if lcs == 0.0 {
        return Ok(0.0);
    }
    let r = lcs / reference.len() as f64;
    let p = lcs / candidate.len() as f64;
    let half = r * p / (r + p);
    Ok(match form {
        RougeLForm::F1 => 2.0 * half,
        RougeLForm::HalfF1 => half,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricScores {
    pub bleus4: f64,
    pub rouge1: f64,
    pub rouge2: f64,
    pub rouge_l: f64,
}

impl MetricScores {
    pub fn score(candidate: &[String], reference: &[String], form: RougeLForm) -> Result<Self, MetricError> {
        Ok(MetricScores {
            bleus4: bleus4(candidate, reference),
            rouge1: rouge_n(candidate, reference, 1)?,
            rouge2: rouge_n(candidate, reference, 2)?,
            rouge_l: rouge_l(candidate, reference, form)?,
        })
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.bleus4, self.rouge1, self.rouge2, self.rouge_l]
    }

    fn add(&mut self, o: &MetricScores) {
        self.bleus4 += o.bleus4;
        self.rouge1 += o.rouge1;
        self.rouge2 += o.rouge2;
        self.rouge_l += o.rouge_l;
    }

    fn divided(mut self, n: usize) -> Self {
        let d = n.max(1) as f64;
        self.bleus4 /= d;
        self.rouge1 /= d;
        self.rouge2 /= d;
        self.rouge_l /= d;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GroupScores {
    pub count: usize,
    pub mean: MetricScores,
}

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricReport {
    pub overall: GroupScores,
    pub by_language: BTreeMap<String, GroupScores>,
    pub per_example: Vec<MetricScores>,
}

/// Scores aligned candidate/reference lists. When `languages` is given it
/// labels each pair for the per-language means.
pub fn evaluate_corpus(
    candidates: &[Vec<String>],
    references: &[Vec<String>],
    languages: Option<&[String]>,
    form: RougeLForm,
) -> Result<MetricReport, MetricError> {
    let mismatch = |other: usize| MetricError::LengthMismatch {
        candidates: candidates.len(),
        references: other,
    };
    if candidates.len() != references.len() {
        return Err(mismatch(references.len()));
    }
    if let Some(l) = languages {
        if l.len() != candidates.len() {
            return Err(mismatch(l.len()));
        }
    }
    let per_example = candidates
        .iter()
        .zip(references)
        .map(|(c, r)| MetricScores::score(c, r, form))
        .collect::<Result<Vec<_>, _>>()?;

    let mut total = MetricScores::default();
    let mut groups: BTreeMap<String, (usize, MetricScores)> = BTreeMap::new();
    for (i, s) in per_example.iter().enumerate() {
        total.add(s);
        if let Some(lang) = languages.map(|l| &l[i]) {
            let g = groups.entry(lang.clone()).or_default();
            g.0 += 1;
            g.1.add(s);
        }
    }
    Ok(MetricReport {
        overall: GroupScores {
            count: per_example.len(),
            mean: total.divided(per_example.len()),
        },
        by_language: groups
            .into_iter()
            .map(|(k, (n, s))| (k, GroupScores { count: n, mean: s.divided(n) }))
            .collect(),
        per_example,
    })
}
