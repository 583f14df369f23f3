//! Retrieval and extractive reference systems: a TF-IDF nearest-title
//! retriever and the oracle that keeps the title tokens found in the body.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BaselineError {
    #[error("cannot index an empty corpus")]
    EmptyCorpus,
    #[error("query has no tokens")]
    EmptyQuery,
    #[error("duplicate document id {0}")]
    DuplicateId(u64),
    #[error("inconsistent index: {0}")]
    Corrupt(&'static str),
}

/// A training post as the retriever sees it.
#[derive(Debug, Clone, PartialEq)]
pub struct TfIdfDocument {
    pub id: u64,
    pub title: String,
    pub tokens: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexedDoc {
    pub id: u64,
    pub title: String,
    /// `(term, weight)` sorted by term index, unit L2 norm unless all zero.
    pub weights: Vec<(u32, f64)>,
}

/// Classic TF-IDF with `weight(t, d) = tf(t, d) · ln(N / df(t))`, each
/// document vector L2-normalized. Documents are held in ascending id order.
#[derive(Debug, Clone, PartialEq)]
pub struct TfIdfIndex {
    terms: Vec<String>,
    term_ids: BTreeMap<String, u32>,
    df: Vec<usize>,
    docs: Vec<IndexedDoc>,
    postings: Vec<Vec<(u32, f64)>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Retrieval {
    pub id: u64,
    pub title: String,
    pub similarity: f64,
    /// Set when no document shares a weighted term with the query; the
    /// lowest-id document is returned.
    pub zero_similarity: bool,
}

impl TfIdfIndex {
    pub fn build(docs: &[TfIdfDocument]) -> Result<Self, BaselineError> {
        if docs.is_empty() {
            return Err(BaselineError::EmptyCorpus);
        }
        let mut order: Vec<&TfIdfDocument> = docs.iter().collect();
        order.sort_by_key(|d| d.id);
        if let Some(w) = order.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(BaselineError::DuplicateId(w[0].id));
        }

        let vocab: BTreeSet<&str> = docs.iter().flat_map(|d| d.tokens.iter().map(String::as_str)).collect();
        let terms: Vec<String> = vocab.into_iter().map(String::from).collect();
        let term_ids: BTreeMap<String, u32> = terms.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();

        let tfs: Vec<BTreeMap<u32, usize>> = order.iter().map(|d| term_counts(&d.tokens, &term_ids)).collect();
        let mut df = vec![0usize; terms.len()];
        for tf in &tfs {
            for &t in tf.keys() {
                df[t as usize] += 1;
            }
        }
        let n = order.len() as f64;
        let idf: Vec<f64> = df.iter().map(|&d| libm::log(n / d as f64)).collect();
        let indexed = order
            .iter()
            .zip(tfs)
            .map(|(d, tf)| IndexedDoc {
                id: d.id,
                title: d.title.clone(),
                weights: normalized(tf.into_iter().map(|(t, c)| (t, c as f64 * idf[t as usize])).collect()),
            })
            .collect();
        Self::assemble(terms, term_ids, df, indexed)
    }

    /// Reassembles a persisted index. `terms` must be strictly ascending and
    /// `docs` strictly ascending by id.
    pub fn from_parts(terms: Vec<String>, df: Vec<usize>, docs: Vec<IndexedDoc>) -> Result<Self, BaselineError> {
        if docs.is_empty() {
            return Err(BaselineError::EmptyCorpus);
        }
        if terms.len() != df.len() || terms.windows(2).any(|w| w[0] >= w[1]) {
            return Err(BaselineError::Corrupt("term dictionary unsorted or misaligned"));
        }
        if docs.windows(2).any(|w| w[0].id >= w[1].id) {
            return Err(BaselineError::Corrupt("documents not in ascending id order"));
        }
        if df.iter().any(|&d| d == 0 || d > docs.len()) {
            return Err(BaselineError::Corrupt("document frequency out of range"));
        }
        for d in &docs {
            if d.weights.windows(2).any(|w| w[0].0 >= w[1].0) || d.weights.iter().any(|&(t, _)| t as usize >= terms.len()) {
                return Err(BaselineError::Corrupt("document vector references unknown terms"));
            }
        }
        let term_ids = terms.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        Self::assemble(terms, term_ids, df, docs)
    }

    fn assemble(terms: Vec<String>, term_ids: BTreeMap<String, u32>, df: Vec<usize>, docs: Vec<IndexedDoc>) -> Result<Self, BaselineError> {
        let mut postings = vec![Vec::new(); terms.len()];
        for (i, d) in docs.iter().enumerate() {
            for &(t, w) in &d.weights {
                if w != 0.0 {
                    postings[t as usize].push((i as u32, w));
                }
            }
        }
        Ok(TfIdfIndex {
            terms,
            term_ids,
            df,
            docs,
            postings,
        })
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn df(&self) -> &[usize] {
        &self.df
    }

    pub fn docs(&self) -> &[IndexedDoc] {
        &self.docs
    }

    pub fn idf(&self, term: &str) -> Option<f64> {
        let t = *self.term_ids.get(term)?;
        Some(libm::log(self.docs.len() as f64 / self.df[t as usize] as f64))
    }

    /// Stored weight of `term` in document `id`, 0 when absent.
    pub fn weight(&self, id: u64, term: &str) -> Option<f64> {
        let d = self.docs.binary_search_by_key(&id, |d| d.id).ok()?;
        let t = self.term_ids.get(term).copied();
        Some(
            t.and_then(|t| self.docs[d].weights.iter().find(|w| w.0 == t))
                .map_or(0.0, |w| w.1),
        )
    }

    /// Query vector under the index's idf, L2-normalized.
    pub fn query_vector(&self, tokens: &[String]) -> Vec<(u32, f64)> {
        let n = self.docs.len() as f64;
        normalized(
            term_counts(tokens, &self.term_ids)
                .into_iter()
                .map(|(t, c)| (t, c as f64 * libm::log(n / self.df[t as usize] as f64)))
                .collect(),
        )
    }

    /// Document with the highest cosine similarity to `query`; ties go to
    /// the lower id.
    pub fn retrieve(&self, query: &[String]) -> Result<Retrieval, BaselineError> {
        if query.is_empty() {
            return Err(BaselineError::EmptyQuery);
        }
        let q = self.query_vector(query);
        let mut scores = vec![0.0f64; self.docs.len()];
        for &(t, qw) in &q {
            for &(d, dw) in &self.postings[t as usize] {
                scores[d as usize] += qw * dw;
            }
        }
        let mut best = 0usize;
        for (i, &s) in scores.iter().enumerate() {
            if s > scores[best] {
                best = i;
            }
        }
        let doc = &self.docs[best];
        Ok(Retrieval {
            id: doc.id,
            title: doc.title.clone(),
            similarity: scores[best],
            zero_similarity: scores[best] <= 0.0,
        })
    }
}

fn term_counts(tokens: &[String], term_ids: &BTreeMap<String, u32>) -> BTreeMap<u32, usize> {
    let mut tf = BTreeMap::new();
    for tok in tokens {
        if let Some(&t) = term_ids.get(tok) {
            *tf.entry(t).or_default() += 1;
        }
    }
    tf
}

fn normalized(mut v: Vec<(u32, f64)>) -> Vec<(u32, f64)> {
    let norm = libm::sqrt(v.iter().map(|(_, w)| w * w).sum());
    if norm > 0.0 {
        for (_, w) in &mut v {
            *w /= norm;
        }
    }
    v
}

/// Title tokens that occur anywhere in the body, in title order.
pub fn oracle_title(title: &[String], body: &[String]) -> Vec<String> {
    let present: BTreeSet<&str> = body.iter().map(String::as_str).collect();
    title.iter().filter(|t| present.contains(t.as_str())).cloned().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tokenizer::tokenize;
    use alloc::format;
    use alloc::string::ToString;
    use proptest::prelude::*;

    fn doc(id: u64, body: &str) -> TfIdfDocument {
        TfIdfDocument {
            id,
            title: format!("title {id}"),
            tokens: tokenize(body),
        }
    }

    #[test]
    fn single_document_has_zero_weights() {
        let idx = TfIdfIndex::build(&[doc(1, "a b c")]).unwrap();
        assert!(idx.docs()[0].weights.iter().all(|w| w.1 == 0.0));
        let r = idx.retrieve(&tokenize("a")).unwrap();
        assert!(r.zero_similarity);
        assert_eq!(r.id, 1);
    }

    #[test]
    fn ubiquitous_terms_have_zero_idf() {
        let idx = TfIdfIndex::build(&[doc(1, "x a"), doc(2, "x b")]).unwrap();
        assert_eq!(idx.idf("x"), Some(0.0));
        assert!((idx.idf("a").unwrap() - core::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(idx.weight(1, "a"), Some(1.0));
        assert_eq!(idx.weight(1, "zzz"), Some(0.0));
        assert_eq!(idx.weight(9, "a"), None);
    }

    #[test]
    fn retrieval_and_degenerate_cases() {
        let idx = TfIdfIndex::build(&[doc(5, "sort a list"), doc(3, "parse json string"), doc(8, "open a file")]).unwrap();
        assert_eq!(idx.retrieve(&tokenize("parse json string")).unwrap().id, 3);
        let r = idx.retrieve(&tokenize("unrelated words")).unwrap();
        assert!(r.zero_similarity);
        assert_eq!(r.id, 3);
        assert_eq!(idx.retrieve(&[]), Err(BaselineError::EmptyQuery));
        assert_eq!(TfIdfIndex::build(&[]), Err(BaselineError::EmptyCorpus));
        assert_eq!(TfIdfIndex::build(&[doc(1, "a"), doc(1, "b")]), Err(BaselineError::DuplicateId(1)));
    }

    #[test]
    fn ties_go_to_the_lower_id() {
        let idx = TfIdfIndex::build(&[doc(9, "same words"), doc(4, "same words"), doc(6, "other")]).unwrap();
        assert_eq!(idx.retrieve(&tokenize("same words")).unwrap().id, 4);
    }

    #[test]
    fn parts_roundtrip() {
        let idx = TfIdfIndex::build(&[doc(2, "a b b"), doc(7, "b c")]).unwrap();
        let back = TfIdfIndex::from_parts(idx.terms().to_vec(), idx.df().to_vec(), idx.docs().to_vec()).unwrap();
        assert_eq!(back, idx);
        assert!(TfIdfIndex::from_parts(vec!["b".into(), "a".into()], vec![1, 1], idx.docs().to_vec()).is_err());
    }

    #[test]
    fn oracle_keeps_body_tokens() {
        let title = tokenize("how to create such shape using javafx trianglemesh");
        let body = tokenize("how to create such a shape with a trianglemesh");
        assert_eq!(oracle_title(&title, &body).join(" "), "how to create such shape trianglemesh");
        assert_eq!(oracle_title(&title, &title), title);
        assert!(oracle_title(&title, &tokenize("nothing here")).is_empty());
    }

    proptest! {
        #[test]
        fn oracle_is_an_idempotent_subsequence(
            title in proptest::collection::vec("[a-f]", 0..10),
            body in proptest::collection::vec("[a-f]", 0..10),
        ) {
            let out = oracle_title(&title, &body);
            prop_assert!(out.iter().all(|t| body.contains(t)));
            let mut it = title.iter();
            prop_assert!(out.iter().all(|t| it.any(|x| x == t)));
            prop_assert_eq!(oracle_title(&out, &body), out.clone());
        }

        #[test]
        fn vectors_are_unit_or_zero(bodies in proptest::collection::vec(proptest::collection::vec("[a-g]", 1..8), 1..12)) {
            let docs: Vec<_> = bodies
                .iter()
                .enumerate()
                .map(|(i, b)| TfIdfDocument { id: i as u64, title: i.to_string(), tokens: b.clone() })
                .collect();
            let idx = TfIdfIndex::build(&docs).unwrap();
            for d in idx.docs() {
                let norm: f64 = d.weights.iter().map(|w| w.1 * w.1).sum();
                prop_assert!(norm == 0.0 || (norm - 1.0).abs() < 1e-12);
            }
            prop_assert!(idx.df().iter().all(|&c| c >= 1));
        }
    }
}
