use alloc::vec::Vec;

use super::{Attention, Dropout, FeedForward, Linear, Model, ModelError, Norm};
use crate::tensor::{Tape, TensorError, Var};
use crate::tokenizer::UNK;

/// Score given to masked attention logits; `exp` of it underflows to 0.
pub(crate) const MASKED: f64 = -1e9;

impl Linear {
    pub(crate) fn apply(&self, t: &mut Tape<'_>, x: Var) -> Result<Var, TensorError> {
        let w = t.param(self.w);
        let b = t.param(self.b);
        let y = t.matmul(x, w)?;
        t.add_bias(y, b)
    }
}

impl Norm {
    fn apply(&self, t: &mut Tape<'_>, x: Var, eps: f64) -> Result<Var, TensorError> {
        let g = t.param(self.gamma);
        let b = t.param(self.beta);
        t.layer_norm(x, g, b, eps)
    }
}

impl FeedForward {
    fn apply(&self, t: &mut Tape<'_>, x: Var) -> Result<Var, TensorError> {
        let h = self.up.apply(t, x)?;
        let h = t.gelu(h);
        self.down.apply(t, h)
    }
}

/// `n x m` mask hiding padded keys from every query.
pub(crate) fn key_mask(n: usize, key_pad: &[bool]) -> Vec<bool> {
    (0..n).flat_map(|_| key_pad.iter().copied()).collect()
}

/// `n x n` mask hiding later positions.
fn causal_mask(n: usize) -> Vec<bool> {
    (0..n * n).map(|i| i % n > i / n).collect()
}

impl Attention {
    /// Multi-head scaled dot-product attention of `xq` (`n x d`) over `xkv`
    /// (`m x d`). `mask` is `n x m`, set where attention is forbidden.
    fn apply(&self, t: &mut Tape<'_>, xq: Var, xkv: Var, mask: &[bool], heads: usize) -> Result<Var, TensorError> {
        let q = self.q.apply(t, xq)?;
        let k = self.k.apply(t, xkv)?;
        let v = self.v.apply(t, xkv)?;
        let d = t.dims(q)[1];
        let dh = d / heads;
        let scale = 1.0 / libm::sqrt(dh as f64);
        let any_masked = mask.iter().any(|&m| m);
        let mut outs = Vec::with_capacity(heads);
        for h in 0..heads {
            let qh = t.slice(q, 1, h * dh, dh)?;
            let kh = t.slice(k, 1, h * dh, dh)?;
            let vh = t.slice(v, 1, h * dh, dh)?;
            let kt = t.transpose(kh)?;
            let s = t.matmul(qh, kt)?;
            let mut s = t.scale(s, scale);
            if any_masked {
                s = t.masked_fill(s, mask, MASKED)?;
            }
            let a = t.softmax(s, 1)?;
            outs.push(t.matmul(a, vh)?);
        }
        let o = if heads == 1 { outs[0] } else { t.concat(&outs, 1)? };
        self.o.apply(t, o)
    }
}

impl Model {
    /// Token plus position embedding, layer-normalized. Extended ids beyond
    /// the vocabulary read the `UNK` row.
    pub(crate) fn embed(&self, t: &mut Tape<'_>, ids: &[u32]) -> Result<Var, ModelError> {
        let max = self.config.max_positions();
        if ids.len() > max {
            return Err(ModelError::SequenceTooLong { len: ids.len(), max });
        }
        let v = self.config.vocab_size;
        let rows: Vec<usize> = ids.iter().map(|&i| if (i as usize) < v { i as usize } else { UNK as usize }).collect();
        let positions: Vec<usize> = (0..ids.len()).collect();
        let tok_table = t.param(self.layout.token_embedding);
        let pos_table = t.param(self.layout.position_embedding);
        let tok = t.embedding(tok_table, &rows)?;
        let pos = t.embedding(pos_table, &positions)?;
        let x = t.add(tok, pos)?;
        Ok(self.layout.embedding_norm.apply(t, x, self.config.layer_norm_eps)?)
    }

    /// Encoder states `H` for `ids`, with padded positions hidden as keys.
    pub(crate) fn encoder_forward(&self, t: &mut Tape<'_>, ids: &[u32], pad: &[bool], drop: &mut Dropout) -> Result<Var, ModelError> {
        if ids.len() > self.config.max_source_len {
            return Err(ModelError::SequenceTooLong {
                len: ids.len(),
                max: self.config.max_source_len,
            });
        }
        let eps = self.config.layer_norm_eps;
        let heads = self.config.n_heads;
        let mask = key_mask(ids.len(), pad);
        let mut x = self.embed(t, ids)?;
        for layer in &self.layout.encoder {
            let a = layer.attn.apply(t, x, x, &mask, heads)?;
            let a = drop.apply(t, a)?;
            let r = t.add(x, a)?;
            let h = layer.ln1.apply(t, r, eps)?;
            let f = layer.ffn.apply(t, h)?;
            let f = drop.apply(t, f)?;
            let r = t.add(h, f)?;
            x = layer.ln2.apply(t, r, eps)?;
        }
        Ok(x)
    }

    /// Decoder states `V` and input embeddings `E` for a target prefix.
    pub(crate) fn decoder_forward(
        &self,
        t: &mut Tape<'_>,
        h: Var,
        src_pad: &[bool],
        input: &[u32],
        drop: &mut Dropout,
    ) -> Result<(Var, Var), ModelError> {
        if input.len() > self.config.max_target_len {
            return Err(ModelError::SequenceTooLong {
                len: input.len(),
                max: self.config.max_target_len,
            });
        }
        let eps = self.config.layer_norm_eps;
        let heads = self.config.n_heads;
        let n = input.len();
        let causal = causal_mask(n);
        let cross_mask = key_mask(n, src_pad);
        let e = self.embed(t, input)?;
        let mut y = e;
        for layer in &self.layout.decoder {
            let a = layer.self_attn.apply(t, y, y, &causal, heads)?;
            let a = drop.apply(t, a)?;
            let r = t.add(y, a)?;
            let h1 = layer.ln1.apply(t, r, eps)?;
            let c = layer.cross.apply(t, h1, h, &cross_mask, heads)?;
            let c = drop.apply(t, c)?;
            let r = t.add(h1, c)?;
            let h2 = layer.ln2.apply(t, r, eps)?;
            let f = layer.ffn.apply(t, h2)?;
            let f = drop.apply(t, f)?;
            let r = t.add(h2, f)?;
            y = layer.ln3.apply(t, r, eps)?;
        }
        Ok((y, e))
    }
}
