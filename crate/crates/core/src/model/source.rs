use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::ModelError;
use crate::tensor::Tensor;
use crate::tokenizer::{Special, TokenSequence, Vocabulary, PAD, SOS, UNK};

/// A framed source plus its extended-vocabulary view: out-of-vocabulary
/// surface tokens get ids `vocab_size + j` in order of first occurrence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceContext {
    pub ids: Vec<u32>,
    pub tokens: Vec<String>,
    /// Extended id a position can be copied as; `None` for framing and
    /// padding tokens.
    pub copy_ids: Vec<Option<u32>>,
    pub oov: Vec<String>,
    pub vocab_size: usize,
}

impl SourceContext {
    pub fn new(seq: &TokenSequence, vocab_size: usize) -> Self {
        let mut oov: Vec<String> = Vec::new();
        let copy_ids = seq
            .ids
            .iter()
            .zip(&seq.tokens)
            .map(|(&id, tok)| {
                if id == UNK {
                    let j = match oov.iter().position(|o| o == tok) {
                        Some(j) => j,
                        None => {
                            oov.push(tok.clone());
                            oov.len() - 1
                        }
                    };
                    Some((vocab_size + j) as u32)
                } else if Vocabulary::is_special(id) {
                    None
                } else {
                    Some(id)
                }
            })
            .collect();
        SourceContext {
            ids: seq.ids.clone(),
            tokens: seq.tokens.clone(),
            copy_ids,
            oov,
            vocab_size,
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn extended_size(&self) -> usize {
        self.vocab_size + self.oov.len()
    }

    pub fn has_copyable(&self) -> bool {
        self.copy_ids.iter().any(Option::is_some)
    }

    /// Extended id of a surface token: its vocabulary id, else its source
    /// OOV slot, else `UNK`.
    pub fn extended_id(&self, token: &str, vocab: &Vocabulary) -> u32 {
        if let Some(id) = vocab.id(token) {
            return id;
        }
        match self.oov.iter().position(|o| o == token) {
            Some(j) => (self.vocab_size + j) as u32,
            None => UNK,
        }
    }

    pub fn surface<'a>(&'a self, id: u32, vocab: &'a Vocabulary) -> &'a str {
        let i = id as usize;
        if i >= self.vocab_size {
            return self.oov.get(i - self.vocab_size).map_or(Special::Unk.surface(), String::as_str);
        }
        vocab.token(id).unwrap_or(Special::Unk.surface())
    }

    /// Appends padding up to `len` positions.
    pub(crate) fn padded(&self, len: usize) -> SourceContext {
        let mut s = self.clone();
        while s.ids.len() < len {
            s.ids.push(PAD);
            s.tokens.push(Special::Pad.surface().to_string());
            s.copy_ids.push(None);
        }
        s
    }

    pub(crate) fn pad_mask(&self) -> Vec<bool> {
        self.ids.iter().map(|&i| i == PAD).collect()
    }
}

/// One teacher-forced training pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Example {
    pub source: SourceContext,
    /// Framed target in extended ids. A target token that is out of
    /// vocabulary but present in the source points at its copy slot when
    /// copying is enabled, and is `UNK` otherwise.
    pub target: Vec<u32>,
}

impl Example {
    pub fn new(source: &TokenSequence, target: &TokenSequence, vocab_size: usize, copy_enabled: bool) -> Result<Self, ModelError> {
        if target.ids.len() < 2 || target.ids[0] != SOS {
            return Err(ModelError::BadTarget);
        }
        let source = SourceContext::new(source, vocab_size);
        let target = target
            .ids
            .iter()
            .zip(&target.tokens)
            .map(|(&id, tok)| {
                if id != UNK || !copy_enabled {
                    return id;
                }
                match source.oov.iter().position(|o| o == tok) {
                    Some(j) => (vocab_size + j) as u32,
                    None => UNK,
                }
            })
            .collect();
        Ok(Example { source, target })
    }

    pub(crate) fn decoder_input(&self) -> Vec<u32> {
        self.target[..self.target.len() - 1].to_vec()
    }

    pub(crate) fn predictions(&self) -> &[u32] {
        &self.target[1..]
    }
}

/// Encoder states for one source.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderOutput {
    /// `len x d_model`, one row per source position including padding.
    pub h: Tensor,
    pub source: SourceContext,
    pub pad_mask: Vec<bool>,
}
