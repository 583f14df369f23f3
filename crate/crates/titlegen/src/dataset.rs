//! Turning filtered posts into model inputs.

use titlegen_core::corpus::{parse_body, QuestionPost};
use titlegen_core::model::{Example, ModelConfig};
use titlegen_core::tokenizer::{body_tokens, encode_source_tokens, encode_target_tokens, SourceView, Tokenizer, Vocabulary};

use crate::error::AppError;

/// Language label for posts carrying none of the configured languages.
pub const OTHER_LANGUAGE: &str = "other";

/// A post tokenized and framed for one vocabulary.
#[derive(Debug, Clone)]
pub struct PreparedPost {
    pub id: u64,
    pub language: String,
    /// Body tokens in the configured view, before truncation.
    pub body_tokens: Vec<String>,
    pub title_tokens: Vec<String>,
    pub example: Example,
}

pub fn tokenize_post(post: &QuestionPost, tokenizer: &Tokenizer, view: SourceView) -> Result<(Vec<String>, Vec<String>), AppError> {
    let body = parse_body(&post.body_markup).map_err(|e| AppError::Post { id: post.id, source: e })?;
    Ok((body_tokens(&body, tokenizer, view), tokenizer.tokenize(&post.title)))
}

/// Vocabulary over the bodies and titles of `posts`.
pub fn build_vocabulary(
    posts: &[QuestionPost],
    tokenizer: &Tokenizer,
    view: SourceView,
    max_size: usize,
    min_count: usize,
) -> Result<Vocabulary, AppError> {
    let mut streams = Vec::with_capacity(2 * posts.len());
    for post in posts {
        let (body, title) = tokenize_post(post, tokenizer, view)?;
        streams.push(body);
        streams.push(title);
    }
    Ok(Vocabulary::build(streams, max_size, min_count)?)
}

/// Frames `post` for `config`: bodies are cut to fit the encoder and
/// titles to fit the decoder.
pub fn prepare_post(
    post: &QuestionPost,
    languages: &[String],
    vocab: &Vocabulary,
    tokenizer: &Tokenizer,
    view: SourceView,
    config: &ModelConfig,
) -> Result<PreparedPost, AppError> {
    let (body, title) = tokenize_post(post, tokenizer, view)?;
    let mut src = body.clone();
    src.truncate(config.max_source_len.saturating_sub(2));
    let mut tgt = title.clone();
    tgt.truncate(config.max_target_len.saturating_sub(2));
    let src = encode_source_tokens(src, vocab, config.max_source_len)?;
    let tgt = encode_target_tokens(tgt, vocab, config.max_target_len)?;
    let example = Example::new(&src, &tgt, vocab.len(), config.copy_enabled)?;
    Ok(PreparedPost {
        id: post.id,
        language: post.language(languages).unwrap_or(OTHER_LANGUAGE).to_string(),
        body_tokens: body,
        title_tokens: title,
        example,
    })
}

pub fn prepare_posts(
    posts: &[QuestionPost],
    languages: &[String],
    vocab: &Vocabulary,
    tokenizer: &Tokenizer,
    view: SourceView,
    config: &ModelConfig,
) -> Result<Vec<PreparedPost>, AppError> {
    posts.iter().map(|p| prepare_post(p, languages, vocab, tokenizer, view, config)).collect()
}
