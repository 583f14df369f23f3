use super::ModelError;
use crate::tokenizer::NUM_SPECIALS;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct ModelConfig {
    pub vocab_size: usize,
    pub d_model: usize,
    pub n_heads: usize,
    pub n_encoder_layers: usize,
    pub n_decoder_layers: usize,
    pub feedforward_dim: usize,
    pub dropout_prob: f64,
    /// Framed source length limit, `[CLS]` and `[SEP]` included.
    pub max_source_len: usize,
    /// Framed target length limit, `[SOS]` and `[EOS]` included.
    pub max_target_len: usize,
    pub copy_enabled: bool,
    pub seed: u64,
    pub init_std: f64,
    pub layer_norm_eps: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            vocab_size: 5000,
            d_model: 64,
            n_heads: 4,
            n_encoder_layers: 2,
            n_decoder_layers: 2,
            feedforward_dim: 256,
            dropout_prob: 0.1,
            max_source_len: 256,
            max_target_len: 27,
            copy_enabled: true,
            seed: 0,
            init_std: 0.02,
            layer_norm_eps: 1e-5,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let fail = |m| Err(ModelError::InvalidConfig(m));
        if self.vocab_size <= NUM_SPECIALS {
            return fail("vocab_size must exceed the reserved tokens");
        }
        if self.d_model == 0 || self.n_heads == 0 || self.feedforward_dim == 0 {
            return fail("d_model, n_heads and feedforward_dim must be positive");
        }
        if !self.d_model.is_multiple_of(self.n_heads) {
            return fail("d_model must be divisible by n_heads");
        }
        if !(0.0..1.0).contains(&self.dropout_prob) {
            return fail("dropout_prob must lie in [0, 1)");
        }
        if self.max_source_len < 2 || self.max_target_len < 2 {
            return fail("sequence limits must admit the framing tokens");
        }
        if !(self.init_std.is_finite() && self.init_std >= 0.0) {
            return fail("init_std must be finite and nonnegative");
        }
        if self.layer_norm_eps.is_nan() || self.layer_norm_eps <= 0.0 {
            return fail("layer_norm_eps must be positive");
        }
        Ok(())
    }

    /// Rows of the shared position table.
    pub fn max_positions(&self) -> usize {
        self.max_source_len.max(self.max_target_len)
    }

    pub fn head_dim(&self) -> usize {
        self.d_model / self.n_heads
    }
}
