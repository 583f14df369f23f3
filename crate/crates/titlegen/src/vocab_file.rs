//! Vocabulary text files: one token per line, line index = id.

use std::fs;
use std::path::Path;

use titlegen_core::tokenizer::Vocabulary;

use crate::error::AppError;

pub fn to_bytes(vocab: &Vocabulary) -> Vec<u8> {
    let mut s = String::new();
    for t in vocab.tokens() {
        s.push_str(t);
        s.push('\n');
    }
    s.into_bytes()
}

pub fn read(path: &Path) -> Result<Vocabulary, AppError> {
    let text = fs::read_to_string(path).map_err(AppError::io(path))?;
    let tokens = text.lines().map(str::to_string).collect();
    Ok(Vocabulary::from_tokens(tokens)?)
}
