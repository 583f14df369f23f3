//! Independent oracles and helpers shared by the integration and acceptance
//! tests. Nothing here calls the scoring, retrieval or filtering code under
//! test.
#![allow(dead_code)]

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use titlegen_core::corpus::{parse_body, FilterConfig, QuestionPost, SegmentKind};
use titlegen_core::tokenizer::Tokenizer;

pub fn toks(s: &str) -> Vec<String> {
    s.split_whitespace().map(String::from).collect()
}

// ---------------------------------------------------------------------------
// Reference scorer: string-keyed hash counts, a full LCS table and a direct
// product of precisions.

fn grams(t: &[String], n: usize) -> HashMap<String, usize> {
    let mut m = HashMap::new();
    if t.len() >= n {
        for i in 0..=t.len() - n {
            *m.entry(t[i..i + n].join("\u{1}")).or_insert(0) += 1;
        }
    }
    m
}

fn overlap(a: &HashMap<String, usize>, b: &HashMap<String, usize>) -> usize {
    a.iter().map(|(g, c)| *c.min(b.get(g).unwrap_or(&0))).sum()
}

pub fn ref_bleus4(c: &[String], r: &[String]) -> f64 {
    if c.is_empty() {
        return 0.0;
    }
    let mut prod = 1.0;
    for n in 1..=4 {
        let cg = grams(c, n);
        let hits = overlap(&cg, &grams(r, n)) as f64;
        let total = c.len().saturating_sub(n - 1) as f64;
        prod *= if n == 1 { hits / total } else { (hits + 1.0) / (total + 1.0) };
    }
    let bp = if c.len() > r.len() { 1.0 } else { (1.0 - r.len() as f64 / c.len() as f64).exp() };
    bp * prod.powf(0.25)
}

pub fn ref_rouge_n(c: &[String], r: &[String], n: usize) -> f64 {
    let rg = grams(r, n);
    let total: usize = rg.values().sum();
    if total == 0 {
        return 0.0;
    }
    overlap(&rg, &grams(c, n)) as f64 / total as f64
}

pub fn ref_lcs(a: &[String], b: &[String]) -> usize {
    let mut t = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            t[i][j] = if a[i - 1] == b[j - 1] { t[i - 1][j - 1] + 1 } else { t[i - 1][j].max(t[i][j - 1]) };
        }
    }
    t[a.len()][b.len()]
}

pub fn ref_rouge_l(c: &[String], r: &[String]) -> f64 {
    let l = ref_lcs(c, r) as f64;
    if l == 0.0 {
        return 0.0;
    }
    let (rec, prec) = (l / r.len() as f64, l / c.len() as f64);
    2.0 * rec * prec / (rec + prec)
}

pub fn ref_scores(c: &[String], r: &[String]) -> [f64; 4] {
    [ref_bleus4(c, r), ref_rouge_n(c, r, 1), ref_rouge_n(c, r, 2), ref_rouge_l(c, r)]
}

/// `(candidate, reference, [bleus4, rouge1, rouge2, rouge_l])`, each value
/// worked out by hand.
pub fn hand_cases() -> Vec<(&'static str, &'static str, [f64; 4])> {
    vec![
        ("a b c d", "a b c d", [1.0, 1.0, 1.0, 1.0]),
        ("", "a b", [0.0, 0.0, 0.0, 0.0]),
        // p = 1, 1, 1, 1; bp = e^(1 - 3)
        ("a", "a b c", [(-2.0f64).exp(), 1.0 / 3.0, 0.0, 0.5]),
        ("x y", "a b", [0.0, 0.0, 0.0, 0.0]),
        // p = 1/4, 1/4, 1/3, 1/2; longer than the reference
        ("the the the the", "the cat", [(1.0f64 / 96.0).powf(0.25), 0.5, 0.0, 1.0 / 3.0]),
        // p = 1, 1, 1, 1; bp = e^(1 - 2)
        ("a b c", "a b c d e f", [(-1.0f64).exp(), 0.5, 0.4, 2.0 / 3.0]),
        // p = 1, 1/2, 1, 1
        ("b a", "a b", [0.5f64.powf(0.25), 1.0, 0.0, 0.5]),
        ("a", "a", [1.0, 1.0, 0.0, 1.0]),
        // p = 4/5, 3/5, 1/2, 1/3; bp = e^(1 - 6/5)
        ("how to sort a list", "how to sort list in java", [(-0.2f64).exp() * 0.08f64.powf(0.25), 4.0 / 6.0, 0.4, 8.0 / 11.0]),
        // p = 2/3, 2/3, 1/2, 1
        ("a a b", "a b b", [(2.0f64 / 9.0).powf(0.25), 2.0 / 3.0, 0.5, 2.0 / 3.0]),
    ]
}

// ---------------------------------------------------------------------------
// Brute-force TF-IDF: dense vectors over every term, cosine against each
// document in turn.

pub struct BruteForce {
    idf: HashMap<String, f64>,
    docs: Vec<(u64, String, HashMap<String, f64>)>,
}

fn tfidf_vec(tokens: &[String], idf: &HashMap<String, f64>) -> HashMap<String, f64> {
    let mut v: HashMap<String, f64> = HashMap::new();
    for t in tokens {
        if let Some(w) = idf.get(t) {
            *v.entry(t.clone()).or_insert(0.0) += w;
        }
    }
    v
}

fn cosine(a: &HashMap<String, f64>, b: &HashMap<String, f64>) -> f64 {
    let dot: f64 = a.iter().map(|(k, x)| x * b.get(k).unwrap_or(&0.0)).sum();
    let na = a.values().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.values().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

impl BruteForce {
    pub fn new(docs: &[(u64, String, Vec<String>)]) -> Self {
        let mut df: HashMap<String, usize> = HashMap::new();
        for (_, _, t) in docs {
            let mut seen: Vec<&String> = t.iter().collect();
            seen.sort();
            seen.dedup();
            for s in seen {
                *df.entry(s.clone()).or_insert(0) += 1;
            }
        }
        let n = docs.len() as f64;
        let idf: HashMap<String, f64> = df.into_iter().map(|(k, d)| (k, (n / d as f64).ln())).collect();
        let docs = docs.iter().map(|(id, title, t)| (*id, title.clone(), tfidf_vec(t, &idf))).collect();
        BruteForce { idf, docs }
    }

    /// Best `(id, title, cosine)`; ties to the lower id.
    pub fn best(&self, query: &[String]) -> (u64, String, f64) {
        let q = tfidf_vec(query, &self.idf);
        let mut best: Option<(u64, String, f64)> = None;
        for (id, title, v) in &self.docs {
            let s = cosine(&q, v);
            let better = match &best {
                None => true,
                Some((bid, _, bs)) => s > *bs + 1e-12 || ((s - bs).abs() <= 1e-12 && id < bid),
            };
            if better {
                best = Some((*id, title.clone(), s));
            }
        }
        best.expect("index is nonempty")
    }
}

// ---------------------------------------------------------------------------
// Filter constraints, each checked on its own.

/// Names of the constraints `post` violates under `cfg`.
pub fn violations(post: &QuestionPost, cfg: &FilterConfig) -> Vec<&'static str> {
    let tok = Tokenizer::default();
    let mut v = Vec::new();
    if cfg.require_open && post.is_closed {
        v.push("closed");
    }
    if cfg.require_accepted && !post.has_accepted_answer {
        v.push("no_accepted_answer");
    }
    if post.score < cfg.min_score {
        v.push("score");
    }
    if !post.tags.iter().any(|t| cfg.allowed_tags.contains(t)) {
        v.push("tag_not_allowed");
    }
    if post.tags.iter().any(|t| cfg.excluded_tags.contains(t)) {
        v.push("excluded_tag");
    }
    let Ok(body) = parse_body(&post.body_markup) else {
        v.push("malformed");
        return v;
    };
    let text = body.segments.iter().filter(|s| s.kind == SegmentKind::Text).any(|s| !s.plain_text().trim().is_empty());
    let code = body.segments.iter().filter(|s| s.kind == SegmentKind::Code).any(|s| !s.plain_text().trim().is_empty());
    if cfg.require_bimodal && !(text && code) {
        v.push("not_bimodal");
    }
    let title = tok.tokenize(&post.title);
    if cfg.interrogative_constraint && !title.iter().any(|w| ["how", "what", "why", "which", "when"].contains(&w.as_str())) {
        v.push("interrogative");
    }
    let body_len: usize = body.segments.iter().map(|s| tok.tokenize(&s.plain_text()).len()).sum();
    if body_len > cfg.max_body_tokens {
        v.push("body_too_long");
    }
    if title.len() > cfg.max_title_tokens {
        v.push("title_too_long");
    }
    v
}

// ---------------------------------------------------------------------------
// Command-line helpers.

pub fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").canonicalize().unwrap()
}

pub fn fixture(name: &str) -> PathBuf {
    repo_root().join("fixtures").join(name)
}

/// Runs the binary with `corpus` and `workdir` supplied through the
/// environment.
pub fn titlegen(args: &[&str], corpus: &Path, workdir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_titlegen"))
        .args(args)
        .env("TITLEGEN_CORPUS", corpus)
        .env("TITLEGEN_WORKDIR", workdir)
        .output()
        .expect("binary runs")
}

pub fn ok(args: &[&str], corpus: &Path, workdir: &Path) -> String {
    let out = titlegen(args, corpus, workdir);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}
