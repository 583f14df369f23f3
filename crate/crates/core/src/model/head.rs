use alloc::vec;
use alloc::vec::Vec;

use super::layers::{key_mask, MASKED};
use super::{Dropout, EncoderOutput, Example, Model, ModelError, SourceContext};
use crate::tensor::{ParamGrads, Tape, Var};
use crate::tokenizer::UNK;

struct HeadVars {
    a: Var,
    context: Var,
    logits: Var,
    p_copy: Option<Var>,
}

/// Everything the copy head produces for one decoding step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    /// Decoder state of the new position.
    pub v: Vec<f64>,
    /// Copy attention over every source position; 0 on padding.
    pub a: Vec<f64>,
    /// `aᵀ H`.
    pub context: Vec<f64>,
    pub p_vocab: Vec<f64>,
    /// Copy gate; 0 when copying is disabled.
    pub p_copy: f64,
}

impl StepOutput {
    /// Next-token distribution over the extended vocabulary of `source`.
    pub fn distribution(&self, source: &SourceContext) -> Vec<f64> {
        mixture_distribution(&self.a, &self.p_vocab, self.p_copy, &source.copy_ids, source.extended_size())
    }
}

/// `P(t) = (1 - p_copy) · P_vocab(t) + p_copy · Σ_{i: x_i = t} â_i`, where
/// `â` is `a` restricted to copyable positions and renormalized. With no
/// copyable position the result is `P_vocab`. Ids at or beyond
/// `p_vocab.len()` receive copy mass only.
pub fn mixture_distribution(a: &[f64], p_vocab: &[f64], p_copy: f64, copy_ids: &[Option<u32>], extended_size: usize) -> Vec<f64> {
    let mut p = vec![0.0; extended_size.max(p_vocab.len())];
    let den: f64 = a.iter().zip(copy_ids).filter(|(_, c)| c.is_some()).map(|(w, _)| w).sum();
    if den <= 0.0 {
        p[..p_vocab.len()].copy_from_slice(p_vocab);
        return p;
    }
    for (slot, &pv) in p.iter_mut().zip(p_vocab) {
        *slot = (1.0 - p_copy) * pv;
    }
    for (&w, c) in a.iter().zip(copy_ids) {
        if let Some(id) = c {
            p[*id as usize] += p_copy * (w / den);
        }
    }
    p
}

impl Model {
    fn head_forward(&self, t: &mut Tape<'_>, h: Var, src_pad: &[bool], v: Var, e: Var) -> Result<HeadVars, ModelError> {
        let head = &self.layout.head;
        let k = t.dims(v)[0];
        let ve = t.concat(&[v, e], 1)?;
        let q = head.query.apply(t, ve)?;
        let keys = head.key.apply(t, h)?;
        let kt = t.transpose(keys)?;
        let s = t.matmul(q, kt)?;
        let mut s = t.scale(s, 1.0 / libm::sqrt(self.config.d_model as f64));
        if src_pad.iter().any(|&p| p) {
            s = t.masked_fill(s, &key_mask(k, src_pad), MASKED)?;
        }
        let a = t.softmax(s, 1)?;
        let context = t.matmul(a, h)?;
        let cv = t.concat(&[context, v], 1)?;
        let logits = head.out.apply(t, cv)?;
        let p_copy = match head.gate {
            Some(gate) => {
                let cve = t.concat(&[context, v, e], 1)?;
                let g = gate.apply(t, cve)?;
                Some(t.sigmoid(g))
            }
            None => None,
        };
        Ok(HeadVars { a, context, logits, p_copy })
    }

    /// Teacher-forced mean negative log-likelihood of `ex.target` under the
    /// mixture distribution, recorded on `t`.
    pub fn example_loss(&self, t: &mut Tape<'_>, ex: &Example, drop: &mut Dropout, label_smoothing: f64) -> Result<Var, ModelError> {
        let src = &ex.source;
        let pad = src.pad_mask();
        let h = self.encoder_forward(t, &src.ids, &pad, drop)?;
        let input = ex.decoder_input();
        let (v, e) = self.decoder_forward(t, h, &pad, &input, drop)?;
        let hv = self.head_forward(t, h, &pad, v, e)?;

        let preds = ex.predictions();
        let k = preds.len();
        let vsz = self.config.vocab_size;
        let logp = t.log_softmax(hv.logits, 1)?;
        let copying = hv.p_copy.filter(|_| src.has_copyable());

        let log_likelihood = match copying {
            None => {
                let idx: Vec<usize> = preds.iter().map(|&p| if (p as usize) < vsz { p as usize } else { UNK as usize }).collect();
                let g = t.gather(logp, &idx)?;
                t.sum_all(g)
            }
            Some(p_copy) => {
                let m = src.len();
                let idx: Vec<usize> = preds.iter().map(|&p| if (p as usize) < vsz { p as usize } else { 0 }).collect();
                let in_vocab: Vec<f64> = preds.iter().map(|&p| if (p as usize) < vsz { 1.0 } else { 0.0 }).collect();
                let mut matches = Vec::with_capacity(k * m);
                let mut copyable = Vec::with_capacity(k * m);
                for &p in preds {
                    for c in &src.copy_ids {
                        matches.push(if *c == Some(p) { 1.0 } else { 0.0 });
                        copyable.push(if c.is_some() { 1.0 } else { 0.0 });
                    }
                }
                let g = t.gather(logp, &idx)?;
                let pv = t.exp(g);
                let pv = t.mul_const(pv, in_vocab)?;
                let num = t.mul_const(hv.a, matches)?;
                let num = t.sum(num, 1)?;
                let den = t.mul_const(hv.a, copyable)?;
                let den = t.sum(den, 1)?;
                let frac = t.div(num, den)?;
                let p = t.reshape(p_copy, [k])?;
                let neg = t.scale(p, -1.0);
                let keep = t.add_scalar(neg, 1.0);
                let gen = t.mul(keep, pv)?;
                let cp = t.mul(p, frac)?;
                let prob = t.add(gen, cp)?;
                let lp = t.log(prob);
                t.sum_all(lp)
            }
        };
        let nll = t.scale(log_likelihood, -1.0 / k as f64);
        if label_smoothing <= 0.0 {
            return Ok(nll);
        }
        let all = t.sum_all(logp);
        let uniform = t.scale(all, -label_smoothing / (k * vsz) as f64);
        let sharp = t.scale(nll, 1.0 - label_smoothing);
        Ok(t.add(sharp, uniform)?)
    }

    /// Loss without dropout or gradients.
    pub fn loss(&self, ex: &Example) -> Result<f64, ModelError> {
        let mut t = Tape::with_params(&self.params).no_grad();
        let l = self.example_loss(&mut t, ex, &mut Dropout::off(), 0.0)?;
        Ok(t.scalar(l))
    }

    /// Loss and dense parameter gradients for one example.
    pub fn loss_and_grads(&self, ex: &Example, drop: &mut Dropout, label_smoothing: f64) -> Result<(f64, ParamGrads), ModelError> {
        let mut t = Tape::with_params(&self.params);
        let l = self.example_loss(&mut t, ex, drop, label_smoothing)?;
        let value = t.scalar(l);
        let grads = t.backward(l)?.into_param_grads(&self.params);
        Ok((value, grads))
    }

    pub fn encode(&self, source: &SourceContext) -> Result<EncoderOutput, ModelError> {
        let mut t = Tape::with_params(&self.params).no_grad();
        let pad = source.pad_mask();
        let h = self.encoder_forward(&mut t, &source.ids, &pad, &mut Dropout::off())?;
        Ok(EncoderOutput {
            h: t.tensor(h),
            source: source.clone(),
            pad_mask: pad,
        })
    }

    /// Encodes every source padded to the longest one.
    pub fn encode_batch(&self, sources: &[SourceContext]) -> Result<Vec<EncoderOutput>, ModelError> {
        let len = sources.iter().map(SourceContext::len).max().unwrap_or(0);
        sources.iter().map(|s| self.encode(&s.padded(len))).collect()
    }

    /// Runs the decoder over `prefix` (extended ids, starting with the start
    /// token) and the copy head on its last position.
    pub fn decode_step(&self, enc: &EncoderOutput, prefix: &[u32]) -> Result<StepOutput, ModelError> {
        if prefix.is_empty() {
            return Err(ModelError::BadTarget);
        }
        let mut t = Tape::with_params(&self.params).no_grad();
        let h = t.constant(enc.h.clone());
        let (v, e) = self.decoder_forward(&mut t, h, &enc.pad_mask, prefix, &mut Dropout::off())?;
        let last = prefix.len() - 1;
        let v = t.slice(v, 0, last, 1)?;
        let e = t.slice(e, 0, last, 1)?;
        let hv = self.head_forward(&mut t, h, &enc.pad_mask, v, e)?;
        let probs = t.softmax(hv.logits, 1)?;
        Ok(StepOutput {
            v: t.value(v).to_vec(),
            a: t.value(hv.a).to_vec(),
            context: t.value(hv.context).to_vec(),
            p_vocab: t.value(probs).to_vec(),
            p_copy: hv.p_copy.map_or(0.0, |p| t.scalar(p)),
        })
    }

    /// Per-position decoder states for a full prefix, used to test causality.
    pub fn decoder_states(&self, enc: &EncoderOutput, prefix: &[u32]) -> Result<Vec<f64>, ModelError> {
        let mut t = Tape::with_params(&self.params).no_grad();
        let h = t.constant(enc.h.clone());
        let (v, _) = self.decoder_forward(&mut t, h, &enc.pad_mask, prefix, &mut Dropout::off())?;
        Ok(t.value(v).to_vec())
    }
}
