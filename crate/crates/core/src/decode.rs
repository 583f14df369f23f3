//! Greedy and beam-search generation over the copy-extended distribution.
//!
//! Decoding starts from `[SOS]` and stops on EOS or after `max_len` title
//! tokens. PAD, CLS, SEP and SOS are never emitted; UNK is also banned when
//! the model can copy. Every ordering breaks ties toward the lower
//! extended-vocabulary id, so results do not depend on the platform.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::model::{EncoderOutput, Model, ModelError, SourceContext};
use crate::tokenizer::{Vocabulary, CLS, EOS, PAD, SEP, SOS, UNK};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DecodeError {
    #[error("beam width must be at least 1")]
    ZeroBeam,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// How finished hypotheses are ranked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum LengthNorm {
    /// `log_prob / emitted`, where `emitted` counts EOS when present.
    #[default]
    Average,
    None,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct DecodeConfig {
    pub beam: usize,
    /// Cap on title tokens, EOS excluded.
    pub max_len: usize,
    pub length_norm: LengthNorm,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        DecodeConfig {
            beam: 10,
            max_len: 25,
            length_norm: LengthNorm::Average,
        }
    }
}

/// Supplies next-token probabilities over an extended vocabulary.
pub trait StepScorer {
    /// `prefix` starts with SOS; the result has one entry per extended id.
    fn next_probs(&self, prefix: &[u32]) -> Result<Vec<f64>, ModelError>;
    /// Whether UNK may be emitted.
    fn allows_unk(&self) -> bool;
}

/// A model bound to one encoded source.
pub struct ModelScorer<'a> {
    pub model: &'a Model,
    pub encoded: EncoderOutput,
}

impl<'a> ModelScorer<'a> {
    pub fn new(model: &'a Model, source: &SourceContext) -> Result<Self, ModelError> {
        Ok(ModelScorer {
            model,
            encoded: model.encode(source)?,
        })
    }
}

impl StepScorer for ModelScorer<'_> {
    fn next_probs(&self, prefix: &[u32]) -> Result<Vec<f64>, ModelError> {
        let step = self.model.decode_step(&self.encoded, prefix)?;
        Ok(step.distribution(&self.encoded.source))
    }

    fn allows_unk(&self) -> bool {
        !self.model.config().copy_enabled
    }
}

/// A generated title in extended ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    /// Title tokens, SOS and EOS excluded.
    pub ids: Vec<u32>,
    /// Log probability of every emitted token, EOS included.
    pub step_log_probs: Vec<f64>,
    pub log_prob: f64,
    /// EOS was emitted, as opposed to hitting the length cap.
    pub ended: bool,
    pub finished: bool,
}

impl Hypothesis {
    fn start() -> Self {
        Hypothesis {
            ids: Vec::new(),
            step_log_probs: Vec::new(),
            log_prob: 0.0,
            ended: false,
            finished: false,
        }
    }

    fn prefix(&self) -> Vec<u32> {
        let mut p = Vec::with_capacity(self.ids.len() + 1);
        p.push(SOS);
        p.extend_from_slice(&self.ids);
        p
    }

    fn extend(&self, id: u32, lp: f64) -> Self {
        let mut h = self.clone();
        h.step_log_probs.push(lp);
        h.log_prob += lp;
        if id == EOS {
            h.ended = true;
            h.finished = true;
        } else {
            h.ids.push(id);
        }
        h
    }

    /// Tokens emitted, EOS included.
    pub fn emitted(&self) -> usize {
        self.step_log_probs.len()
    }

    pub fn score(&self, norm: LengthNorm) -> f64 {
        match norm {
            LengthNorm::None => self.log_prob,
            LengthNorm::Average => self.log_prob / self.emitted().max(1) as f64,
        }
    }

    pub fn tokens(&self, source: &SourceContext, vocab: &Vocabulary) -> Vec<String> {
        self.ids.iter().map(|&id| source.surface(id, vocab).into()).collect()
    }

    pub fn title(&self, source: &SourceContext, vocab: &Vocabulary) -> String {
        self.tokens(source, vocab).join(" ")
    }

    /// Positions in the title holding source tokens outside the vocabulary,
    /// which only the copy path can produce.
    pub fn copied_token_positions(&self, vocab_size: usize) -> Vec<usize> {
        self.ids.iter().enumerate().filter(|(_, &id)| id as usize >= vocab_size).map(|(k, _)| k).collect()
    }
}

fn banned(id: u32, allow_unk: bool) -> bool {
    matches!(id, PAD | CLS | SEP | SOS) || (id == UNK && !allow_unk)
}

fn candidates<S: StepScorer>(scorer: &S, hyp: &Hypothesis) -> Result<Vec<(u32, f64)>, ModelError> {
    let probs = scorer.next_probs(&hyp.prefix())?;
    let allow_unk = scorer.allows_unk();
    Ok(probs
        .iter()
        .enumerate()
        .filter(|&(id, &p)| p > 0.0 && !banned(id as u32, allow_unk))
        .map(|(id, &p)| (id as u32, libm::log(p)))
        .collect())
}

/// Argmax decoding.
pub fn greedy_decode<S: StepScorer>(scorer: &S, max_len: usize) -> Result<Hypothesis, ModelError> {
    let mut hyp = Hypothesis::start();
    while hyp.ids.len() < max_len {
        let mut best: Option<(u32, f64)> = None;
        for (id, lp) in candidates(scorer, &hyp)? {
            if best.is_none_or(|(_, b)| lp > b) {
                best = Some((id, lp));
            }
        }
        let Some((id, lp)) = best else { break };
        hyp = hyp.extend(id, lp);
        if hyp.ended {
            break;
        }
    }
    hyp.finished = true;
    Ok(hyp)
}

fn rank(norm: LengthNorm) -> impl Fn(&Hypothesis, &Hypothesis) -> Ordering {
    move |a, b| b.score(norm).total_cmp(&a.score(norm)).then_with(|| a.ids.cmp(&b.ids)).then_with(|| a.ended.cmp(&b.ended))
}

/// Best score any completion of `h` can reach. Log probabilities only
/// fall, but an average can rise as tokens are added, up to the cap.
fn optimistic(h: &Hypothesis, cfg: &DecodeConfig) -> f64 {
    match cfg.length_norm {
        LengthNorm::None => h.log_prob,
        LengthNorm::Average => h.log_prob / (cfg.max_len + 1) as f64,
    }
}

fn settled(finished: &[Hypothesis], live: &[Hypothesis], cfg: &DecodeConfig) -> bool {
    if finished.len() < cfg.beam {
        return false;
    }
    let mut scores: Vec<f64> = finished.iter().map(|h| h.score(cfg.length_norm)).collect();
    scores.sort_by(|a, b| b.total_cmp(a));
    let bar = scores[cfg.beam - 1];
    live.iter().all(|h| optimistic(h, cfg) <= bar)
}

/// Beam search returning at most `cfg.beam` finished hypotheses, best
/// first under `cfg.length_norm`.
///
/// Each step expands every live hypothesis and keeps the `beam` best
/// candidates by cumulative log probability (ties: earlier beam, then lower
/// id). Candidates ending in EOS and hypotheses reaching the cap move to the
/// finished set. Search stops when nothing is live, or when `beam`
/// hypotheses have finished and no live one can still outscore the
/// `beam`-th of them.
pub fn beam_decode<S: StepScorer>(scorer: &S, cfg: &DecodeConfig) -> Result<Vec<Hypothesis>, DecodeError> {
    if cfg.beam == 0 {
        return Err(DecodeError::ZeroBeam);
    }
    let mut finished: Vec<Hypothesis> = Vec::new();
    let mut live = vec![Hypothesis::start()];
    while !live.is_empty() && !settled(&finished, &live, cfg) {
        let mut pool: Vec<(f64, usize, u32, f64)> = Vec::new();
        for (b, hyp) in live.iter().enumerate() {
            if hyp.ids.len() >= cfg.max_len {
                continue;
            }
            let cands = candidates(scorer, hyp)?;
            if cands.is_empty() {
                continue;
            }
            pool.extend(cands.into_iter().map(|(id, lp)| (hyp.log_prob + lp, b, id, lp)));
        }
        // live hypotheses that cannot grow are done as they stand
        let growing: Vec<bool> = (0..live.len()).map(|b| pool.iter().any(|c| c.1 == b)).collect();
        for (hyp, grows) in live.iter().zip(&growing) {
            if !grows {
                let mut h = hyp.clone();
                h.finished = true;
                finished.push(h);
            }
        }
        pool.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
        pool.truncate(cfg.beam);
        let mut next = Vec::with_capacity(pool.len());
        for (_, b, id, lp) in pool {
            let h = live[b].extend(id, lp);
            if h.finished {
                finished.push(h);
            } else {
                next.push(h);
            }
        }
        live = next;
    }
    finished.sort_by(rank(cfg.length_norm));
    finished.truncate(cfg.beam);
    Ok(finished)
}
