//! Punctuation-splitting tokenizer and a frequency-ranked word vocabulary.
//!
//! Letters and digits (by Unicode category) form runs; whitespace separates
//! runs; every other character stands alone as a token. So
//! `mesh.getPoints()` becomes `mesh . getpoints ( )`.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::corpus::{SegmentKind, SegmentedBody};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TokenizerError {
    #[error("sequence of {len} tokens exceeds the limit of {max}")]
    SequenceTooLong { len: usize, max: usize },
    #[error("vocabulary size {max_size} leaves no room beyond the {specials} reserved tokens")]
    VocabTooSmall { max_size: usize, specials: usize },
    #[error("vocabulary file line {line}: {reason}")]
    BadVocabulary { line: usize, reason: &'static str },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Tokenizer {
    pub lowercase: bool,
}

impl Default for Tokenizer {
    fn default() -> Self {
        Tokenizer { lowercase: true }
    }
}

impl Tokenizer {
    pub fn tokenize(&self, s: &str) -> Vec<String> {
        let mut out = Vec::new();
        let mut word = String::new();
        let push_char = |c: char, word: &mut String, out: &mut Vec<String>| {
            if c.is_alphanumeric() {
                word.push(c);
            } else {
                if !word.is_empty() {
                    out.push(core::mem::take(word));
                }
                if !c.is_whitespace() {
                    out.push(c.to_string());
                }
            }
        };
        for c in s.chars() {
            if self.lowercase {
                for lc in c.to_lowercase() {
                    push_char(lc, &mut word, &mut out);
                }
            } else {
                push_char(c, &mut word, &mut out);
            }
        }
        if !word.is_empty() {
            out.push(word);
        }
        out
    }
}

/// Lowercasing tokenizer.
pub fn tokenize(s: &str) -> Vec<String> {
    Tokenizer::default().tokenize(s)
}

/// Reserved tokens, in id order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Special {
    Pad,
    Unk,
    Cls,
    Sep,
    Sos,
    Eos,
}

impl Special {
    pub const ALL: [Special; 6] = [
        Special::Pad,
        Special::Unk,
        Special::Cls,
        Special::Sep,
        Special::Sos,
        Special::Eos,
    ];

    pub const fn id(self) -> u32 {
        self as u32
    }

    pub const fn surface(self) -> &'static str {
        match self {
            Special::Pad => "[PAD]",
            Special::Unk => "[UNK]",
            Special::Cls => "[CLS]",
            Special::Sep => "[SEP]",
            Special::Sos => "[SOS]",
            Special::Eos => "[EOS]",
        }
    }
}

pub const PAD: u32 = Special::Pad.id();
pub const UNK: u32 = Special::Unk.id();
pub const CLS: u32 = Special::Cls.id();
pub const SEP: u32 = Special::Sep.id();
pub const SOS: u32 = Special::Sos.id();
pub const EOS: u32 = Special::Eos.id();
pub const NUM_SPECIALS: usize = Special::ALL.len();

/// Bijective token/id map with the specials at ids `0..6`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    id_to_token: Vec<String>,
    token_to_id: BTreeMap<String, u32>,
}

impl Vocabulary {
    /// Counts tokens across `streams` and keeps the most frequent ones,
    /// ranked by count (descending) then token (ascending). Tokens seen
    /// fewer than `min_count` times are dropped.
    pub fn build<I, S>(streams: I, max_size: usize, min_count: usize) -> Result<Self, TokenizerError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[String]>,
    {
        if max_size <= NUM_SPECIALS {
            return Err(TokenizerError::VocabTooSmall {
                max_size,
                specials: NUM_SPECIALS,
            });
        }
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        let streams: Vec<S> = streams.into_iter().collect();
        for stream in &streams {
            for tok in stream.as_ref() {
                *counts.entry(tok.as_str()).or_default() += 1;
            }
        }
        let mut ranked: Vec<(&str, usize)> = counts
            .into_iter()
            .filter(|&(t, c)| c >= min_count.max(1) && !is_special_surface(t))
            .collect();
        // BTreeMap iteration is already token-ascending; a stable sort on
        // count keeps that as the tie-break.
        ranked.sort_by_key(|e| core::cmp::Reverse(e.1));
        ranked.truncate(max_size - NUM_SPECIALS);
        Ok(Self::from_ordered(ranked.into_iter().map(|(t, _)| t.to_string())))
    }

    fn from_ordered(tokens: impl IntoIterator<Item = String>) -> Self {
        let mut id_to_token: Vec<String> = Special::ALL.iter().map(|s| s.surface().to_string()).collect();
        id_to_token.extend(tokens);
        let token_to_id = id_to_token
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Vocabulary {
            id_to_token,
            token_to_id,
        }
    }

    /// Rebuilds a vocabulary from its id-ordered token list.
    pub fn from_tokens(tokens: Vec<String>) -> Result<Self, TokenizerError> {
        for (i, special) in Special::ALL.iter().enumerate() {
            if tokens.get(i).map(String::as_str) != Some(special.surface()) {
                return Err(TokenizerError::BadVocabulary {
                    line: i + 1,
                    reason: "reserved tokens must come first, in order",
                });
            }
        }
        let mut seen = BTreeMap::new();
        for (i, t) in tokens.iter().enumerate() {
            if t.is_empty() || t.chars().any(char::is_whitespace) {
                return Err(TokenizerError::BadVocabulary {
                    line: i + 1,
                    reason: "token is empty or contains whitespace",
                });
            }
            if seen.insert(t.as_str(), i).is_some() {
                return Err(TokenizerError::BadVocabulary {
                    line: i + 1,
                    reason: "duplicate token",
                });
            }
        }
        Ok(Self::from_ordered(tokens.into_iter().skip(NUM_SPECIALS)))
    }

    pub fn len(&self) -> usize {
        self.id_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        self.id_to_token.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.token_to_id.get(token).copied()
    }

    /// Id of `token`, or `UNK` when it is out of vocabulary.
    pub fn id_or_unk(&self, token: &str) -> u32 {
        self.id(token).unwrap_or(UNK)
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.id_to_token.get(id as usize).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.id_to_token
    }

    pub fn is_special(id: u32) -> bool {
        (id as usize) < NUM_SPECIALS
    }

    pub fn decode(&self, ids: &[u32]) -> Vec<String> {
        ids.iter()
            .map(|&i| self.token(i).unwrap_or(Special::Unk.surface()).to_string())
            .collect()
    }
}

fn is_special_surface(t: &str) -> bool {
    Special::ALL.iter().any(|s| s.surface() == t)
}

/// Parallel surface tokens and vocabulary ids. Out-of-vocabulary tokens keep
/// their surface form with id `UNK`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSequence {
    pub tokens: Vec<String>,
    pub ids: Vec<u32>,
}

impl TokenSequence {
    fn wrap(open: Special, body: Vec<String>, close: Special, vocab: &Vocabulary, max_len: usize) -> Result<Self, TokenizerError> {
        let len = body.len() + 2;
        if len > max_len {
            return Err(TokenizerError::SequenceTooLong { len, max: max_len });
        }
        let mut tokens = Vec::with_capacity(len);
        let mut ids = Vec::with_capacity(len);
        tokens.push(open.surface().to_string());
        ids.push(open.id());
        for t in body {
            ids.push(vocab.id_or_unk(&t));
            tokens.push(t);
        }
        tokens.push(close.surface().to_string());
        ids.push(close.id());
        Ok(TokenSequence { tokens, ids })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Tokens between the two framing specials.
    pub fn inner_tokens(&self) -> &[String] {
        let n = self.tokens.len();
        if n < 2 {
            return &[];
        }
        &self.tokens[1..n - 1]
    }
}

/// Which body segments feed the encoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SourceView {
    #[default]
    BiModal,
    CodeOnly,
}

/// Token stream of a body: every segment's plain text, tokenized in order.
pub fn body_tokens(body: &SegmentedBody, tokenizer: &Tokenizer, view: SourceView) -> Vec<String> {
    body.segments
        .iter()
        .filter(|s| view == SourceView::BiModal || s.kind == SegmentKind::Code)
        .flat_map(|s| tokenizer.tokenize(&s.plain_text()))
        .collect()
}

/// `[CLS] body [SEP]`; fails when the framed length exceeds `max_len`.
pub fn encode_source(
    body: &SegmentedBody,
    vocab: &Vocabulary,
    tokenizer: &Tokenizer,
    view: SourceView,
    max_len: usize,
) -> Result<TokenSequence, TokenizerError> {
    encode_source_tokens(body_tokens(body, tokenizer, view), vocab, max_len)
}

pub fn encode_source_tokens(tokens: Vec<String>, vocab: &Vocabulary, max_len: usize) -> Result<TokenSequence, TokenizerError> {
    TokenSequence::wrap(Special::Cls, tokens, Special::Sep, vocab, max_len)
}

/// Like [`encode_source`] but keeps only the first `max_len - 2` body tokens.
pub fn encode_source_truncated(
    body: &SegmentedBody,
    vocab: &Vocabulary,
    tokenizer: &Tokenizer,
    view: SourceView,
    max_len: usize,
) -> Result<TokenSequence, TokenizerError> {
    let mut tokens = body_tokens(body, tokenizer, view);
    tokens.truncate(max_len.saturating_sub(2));
    encode_source_tokens(tokens, vocab, max_len)
}

/// `[SOS] title [EOS]`.
pub fn encode_target(title: &str, vocab: &Vocabulary, tokenizer: &Tokenizer, max_len: usize) -> Result<TokenSequence, TokenizerError> {
    encode_target_tokens(tokenizer.tokenize(title), vocab, max_len)
}

pub fn encode_target_tokens(tokens: Vec<String>, vocab: &Vocabulary, max_len: usize) -> Result<TokenSequence, TokenizerError> {
    TokenSequence::wrap(Special::Sos, tokens, Special::Eos, vocab, max_len)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::parse_body;
    use alloc::vec;
    use proptest::prelude::*;

    fn strs(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn splits_punctuation_and_lowercases() {
        assert_eq!(
            tokenize("mesh.getPoints().addAll"),
            strs(&["mesh", ".", "getpoints", "(", ")", ".", "addall"])
        );
        assert_eq!(tokenize("x=1"), strs(&["x", "=", "1"]));
        assert_eq!(
            tokenize("How to create such shape?"),
            strs(&["how", "to", "create", "such", "shape", "?"])
        );
    }

    #[test]
    fn keeps_digit_runs_and_unicode_letters() {
        assert_eq!(tokenize("utf8 décodé 2020-01"), strs(&["utf8", "décodé", "2020", "-", "01"]));
        assert_eq!(tokenize("  \t\n "), Vec::<String>::new());
        assert_eq!(tokenize("a_b"), strs(&["a", "_", "b"]));
    }

    #[test]
    fn case_can_be_preserved() {
        let t = Tokenizer { lowercase: false };
        assert_eq!(t.tokenize("TriangleMesh()"), strs(&["TriangleMesh", "(", ")"]));
    }

    #[test]
    fn vocab_orders_by_frequency() {
        let v = Vocabulary::build([strs(&["b", "a", "a"])], 8, 1).unwrap();
        assert_eq!(v.len(), 8);
        assert_eq!(v.id("a"), Some(6));
        assert_eq!(v.id("b"), Some(7));
        assert_eq!(v.token(PAD), Some("[PAD]"));
        assert_eq!(v.token(EOS), Some("[EOS]"));
    }

    #[test]
    fn vocab_respects_max_size_and_min_count() {
        let v = Vocabulary::build([strs(&["a", "a", "b", "c", "c", "c"])], 8, 1).unwrap();
        assert_eq!(v.len(), 8);
        assert_eq!(v.id("c"), Some(6));
        assert_eq!(v.id("a"), Some(7));
        assert_eq!(v.id("b"), None);
        let v = Vocabulary::build([strs(&["a", "a", "b"])], 100, 2).unwrap();
        assert_eq!(v.len(), 7);
        assert!(matches!(
            Vocabulary::build([strs(&["a"])], 6, 1),
            Err(TokenizerError::VocabTooSmall { .. })
        ));
    }

    /// Seven slots with six reserved leave room for exactly one word, so the
    /// size cap drops `b`.
    #[test]
    fn size_cap_counts_reserved_tokens() {
        let v = Vocabulary::build([strs(&["a", "a", "b"])], 7, 1).unwrap();
        assert_eq!(&v.tokens()[NUM_SPECIALS..], strs(&["a"]).as_slice());
    }

    #[test]
    fn tied_counts_break_lexicographically() {
        let v = Vocabulary::build([strs(&["b", "a"])], 100, 1).unwrap();
        assert!(v.id("a").unwrap() < v.id("b").unwrap());
    }

    /// Hash-count plus stable sort, written without the BTreeMap ordering
    /// trick the implementation relies on.
    #[test]
    fn vocab_matches_count_sort_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let alphabet: Vec<String> = (0..300).map(|i| alloc::format!("w{i}")).collect();
        let stream: Vec<String> = (0..10_000)
            .map(|_| {
                // skewed draw so counts differ
                let r: f64 = rng.random();
                alphabet[(r * r * 300.0) as usize].clone()
            })
            .collect();
        let mut table: Vec<(String, usize)> = Vec::new();
        for t in &stream {
            match table.iter_mut().find(|(k, _)| k == t) {
                Some(e) => e.1 += 1,
                None => table.push((t.clone(), 1)),
            }
        }
        table.sort_by(|a, b| a.0.cmp(&b.0));
        table.sort_by_key(|e| std::cmp::Reverse(e.1));
        let expected: Vec<String> = table.into_iter().filter(|e| e.1 >= 3).take(120).map(|e| e.0).collect();

        let v = Vocabulary::build([stream], 126, 3).unwrap();
        assert_eq!(&v.tokens()[NUM_SPECIALS..], expected.as_slice());
    }

    #[test]
    fn source_and_target_framing() {
        let v = Vocabulary::build([strs(&["how", "to"])], 50, 1).unwrap();
        let empty = parse_body("").unwrap();
        let s = encode_source(&empty, &v, &Tokenizer::default(), SourceView::BiModal, 10).unwrap();
        assert_eq!(s.ids, vec![CLS, SEP]);

        let t = encode_target_tokens(strs(&["how", "to", "x"]), &v, 10).unwrap();
        assert_eq!(t.ids, vec![SOS, v.id("how").unwrap(), v.id("to").unwrap(), UNK, EOS]);
        assert_eq!(t.tokens[3], "x");
        assert_eq!(t.inner_tokens(), strs(&["how", "to", "x"]).as_slice());
        assert_eq!(v.decode(&t.ids[1..3]), strs(&["how", "to"]));

        assert!(matches!(
            encode_target_tokens(strs(&["a"; 9]), &v, 10),
            Err(TokenizerError::SequenceTooLong { len: 11, max: 10 })
        ));
    }

    #[test]
    fn code_only_view_drops_text() {
        let v = Vocabulary::build([strs(&["fix", "x"])], 50, 1).unwrap();
        let body = parse_body("fix <code>x=1</code> please").unwrap();
        let s = encode_source(&body, &v, &Tokenizer::default(), SourceView::CodeOnly, 20).unwrap();
        assert_eq!(s.inner_tokens(), strs(&["x", "=", "1"]).as_slice());
        let s = encode_source_truncated(&body, &v, &Tokenizer::default(), SourceView::BiModal, 4).unwrap();
        assert_eq!(s.inner_tokens(), strs(&["fix", "x"]).as_slice());
    }

    #[test]
    fn vocab_file_roundtrip_validates() {
        let v = Vocabulary::build([strs(&["q", "r"])], 50, 1).unwrap();
        let back = Vocabulary::from_tokens(v.tokens().to_vec()).unwrap();
        assert_eq!(back, v);
        let mut bad = v.tokens().to_vec();
        bad.push("q".into());
        assert!(Vocabulary::from_tokens(bad).is_err());
        assert!(Vocabulary::from_tokens(strs(&["q"])).is_err());
    }

    proptest! {
        #[test]
        fn retokenizing_is_a_fixpoint(s in "\\PC{0,60}") {
            let once = tokenize(&s);
            let twice = tokenize(&once.join(" "));
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn tokens_never_mix_classes(s in "\\PC{0,60}") {
            for t in tokenize(&s) {
                prop_assert!(!t.is_empty());
                let alnum = t.chars().filter(|c| c.is_alphanumeric()).count();
                prop_assert!(alnum == 0 || alnum == t.chars().count());
                prop_assert!(alnum > 0 || t.chars().count() == 1);
            }
        }

        #[test]
        fn vocab_is_a_bijection(words in proptest::collection::vec("[a-e]{1,3}", 0..80)) {
            let v = Vocabulary::build([words.clone()], 30, 1).unwrap();
            for id in 0..v.len() as u32 {
                prop_assert_eq!(v.id(v.token(id).unwrap()), Some(id));
            }
            let in_vocab: Vec<String> = words.into_iter().filter(|w| v.id(w).is_some()).collect();
            let seq = encode_target_tokens(in_vocab.clone(), &v, 200).unwrap();
            prop_assert_eq!(v.decode(&seq.ids[1..seq.len() - 1]), in_vocab);
        }
    }
}
