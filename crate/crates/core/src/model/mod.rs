//! Copy-augmented Transformer encoder-decoder for title generation.
//!
//! The encoder is a post-LN bidirectional Transformer over `[CLS] body [SEP]`;
//! the decoder is a post-LN causal Transformer over `[SOS] title`. Both read
//! the same token-plus-position embedding layer. Above them a copy head
//! attends over encoder states once more and mixes a vocabulary softmax with
//! a pointing distribution over source tokens, so tokens absent from the
//! vocabulary can still be emitted by copying them.

mod config;
mod head;
mod layers;
mod optim;
mod source;
mod train;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::tensor::{ParamId, ParamStore, Shape, Tape, Tensor, TensorError, Var};

pub use config::ModelConfig;
pub use head::{mixture_distribution, StepOutput};
pub use optim::{Adam, AdamConfig};
pub use source::{EncoderOutput, Example, SourceContext};
pub use train::{mean_loss, train, Executor, LogRow, Sequential, TrainConfig, TrainOutcome};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("sequence of {len} tokens exceeds the limit of {max}")]
    SequenceTooLong { len: usize, max: usize },
    #[error("invalid model config: {0}")]
    InvalidConfig(&'static str),
    #[error("invalid training config: {0}")]
    InvalidTraining(&'static str),
    #[error("parameter {name}: {reason}")]
    Checkpoint { name: String, reason: &'static str },
    #[error("target must start with the start token and hold at least two tokens")]
    BadTarget,
    #[error("training set is empty")]
    EmptyDataset,
}

#[derive(Debug, Clone, Copy)]
struct Linear {
    w: ParamId,
    b: ParamId,
}

#[derive(Debug, Clone, Copy)]
struct Norm {
    gamma: ParamId,
    beta: ParamId,
}

#[derive(Debug, Clone, Copy)]
struct Attention {
    q: Linear,
    k: Linear,
    v: Linear,
    o: Linear,
}

#[derive(Debug, Clone, Copy)]
struct FeedForward {
    up: Linear,
    down: Linear,
}

#[derive(Debug, Clone, Copy)]
struct EncoderLayer {
    attn: Attention,
    ln1: Norm,
    ffn: FeedForward,
    ln2: Norm,
}

#[derive(Debug, Clone, Copy)]
struct DecoderLayer {
    self_attn: Attention,
    ln1: Norm,
    cross: Attention,
    ln2: Norm,
    ffn: FeedForward,
    ln3: Norm,
}

/// Copy attention, output projection and copy gate.
#[derive(Debug, Clone, Copy)]
struct CopyHead {
    /// `[v; e] -> d`.
    query: Linear,
    key: Linear,
    /// `[context; v] -> vocab`.
    out: Linear,
    /// `[context; v; e] -> 1`; absent without copying.
    gate: Option<Linear>,
}

#[derive(Debug, Clone)]
struct Layout {
    token_embedding: ParamId,
    position_embedding: ParamId,
    embedding_norm: Norm,
    encoder: Vec<EncoderLayer>,
    decoder: Vec<DecoderLayer>,
    head: CopyHead,
}

/// A configured model and its parameters.
#[derive(Debug, Clone)]
pub struct Model {
    config: ModelConfig,
    params: ParamStore,
    layout: Layout,
}

struct Init<'a> {
    store: &'a mut ParamStore,
    rng: ChaCha8Rng,
    normal: Normal<f64>,
}

impl Init<'_> {
    fn weight(&mut self, name: String, shape: impl Into<Shape>) -> ParamId {
        let shape = shape.into();
        let data = (0..shape.numel()).map(|_| self.normal.sample(&mut self.rng)).collect();
        self.store.insert(name, Tensor::new(shape, data).expect("length matches shape"))
    }

    fn filled(&mut self, name: String, len: usize, value: f64) -> ParamId {
        self.store.insert(name, Tensor::filled([len], value))
    }

    fn linear(&mut self, name: &str, input: usize, output: usize) -> Linear {
        Linear {
            w: self.weight(format!("{name}.weight"), [input, output]),
            b: self.filled(format!("{name}.bias"), output, 0.0),
        }
    }

    fn norm(&mut self, name: &str, d: usize) -> Norm {
        Norm {
            gamma: self.filled(format!("{name}.gamma"), d, 1.0),
            beta: self.filled(format!("{name}.beta"), d, 0.0),
        }
    }

    fn attention(&mut self, name: &str, d: usize) -> Attention {
        Attention {
            q: self.linear(&format!("{name}.query"), d, d),
            k: self.linear(&format!("{name}.key"), d, d),
            v: self.linear(&format!("{name}.value"), d, d),
            o: self.linear(&format!("{name}.output"), d, d),
        }
    }

    fn ffn(&mut self, name: &str, d: usize, hidden: usize) -> FeedForward {
        FeedForward {
            up: self.linear(&format!("{name}.up"), d, hidden),
            down: self.linear(&format!("{name}.down"), hidden, d),
        }
    }
}

impl Model {
    /// Fresh parameters: weights from `N(0, init_std²)` seeded by
    /// `config.seed`, biases 0, layer-norm gains 1.
    pub fn new(config: ModelConfig) -> Result<Self, ModelError> {
        config.validate()?;
        let normal = Normal::new(0.0, config.init_std).map_err(|_| ModelError::InvalidConfig("init_std must be finite and nonnegative"))?;
        let mut params = ParamStore::new();
        let mut init = Init {
            store: &mut params,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            normal,
        };
        let (d, v, ff) = (config.d_model, config.vocab_size, config.feedforward_dim);
        let token_embedding = init.weight("embedding.token".into(), [v, d]);
        let position_embedding = init.weight("embedding.position".into(), [config.max_positions(), d]);
        let embedding_norm = init.norm("embedding.norm", d);
        let encoder = (0..config.n_encoder_layers)
            .map(|l| EncoderLayer {
                attn: init.attention(&format!("encoder.{l}.attention"), d),
                ln1: init.norm(&format!("encoder.{l}.norm1"), d),
                ffn: init.ffn(&format!("encoder.{l}.ffn"), d, ff),
                ln2: init.norm(&format!("encoder.{l}.norm2"), d),
            })
            .collect();
        let decoder = (0..config.n_decoder_layers)
            .map(|l| DecoderLayer {
                self_attn: init.attention(&format!("decoder.{l}.self_attention"), d),
                ln1: init.norm(&format!("decoder.{l}.norm1"), d),
                cross: init.attention(&format!("decoder.{l}.cross_attention"), d),
                ln2: init.norm(&format!("decoder.{l}.norm2"), d),
                ffn: init.ffn(&format!("decoder.{l}.ffn"), d, ff),
                ln3: init.norm(&format!("decoder.{l}.norm3"), d),
            })
            .collect();
        let head = CopyHead {
            query: init.linear("copy.query", 2 * d, d),
            key: init.linear("copy.key", d, d),
            out: init.linear("output", 2 * d, v),
            gate: config.copy_enabled.then(|| init.linear("copy.gate", 3 * d, 1)),
        };
        Ok(Model {
            config,
            params,
            layout: Layout {
                token_embedding,
                position_embedding,
                embedding_norm,
                encoder,
                decoder,
                head,
            },
        })
    }

    /// A model of this `config` carrying externally supplied parameters.
    /// Every parameter must be present exactly once with its registered
    /// shape.
    pub fn from_named_tensors(config: ModelConfig, tensors: Vec<(String, Tensor)>) -> Result<Self, ModelError> {
        let mut model = Model::new(config)?;
        if tensors.len() != model.params.len() {
            return Err(ModelError::Checkpoint {
                name: format!("{} tensors", tensors.len()),
                reason: "parameter count differs from the configured architecture",
            });
        }
        let mut seen = alloc::vec![false; model.params.len()];
        for (name, t) in tensors {
            let Some(id) = model.params.find(&name) else {
                return Err(ModelError::Checkpoint {
                    name,
                    reason: "not part of the configured architecture",
                });
            };
            if core::mem::replace(&mut seen[id.index()], true) {
                return Err(ModelError::Checkpoint { name, reason: "appears twice" });
            }
            if model.params.assign(&name, t).is_err() {
                return Err(ModelError::Checkpoint { name, reason: "shape differs" });
            }
        }
        Ok(model)
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    pub fn set_params(&mut self, params: ParamStore) {
        debug_assert_eq!(params.len(), self.params.len());
        self.params = params;
    }

    pub fn num_parameters(&self) -> usize {
        self.params.numel()
    }
}

/// Dropout state for one forward pass. Inference uses [`Dropout::off`].
pub struct Dropout {
    p: f64,
    rng: Option<ChaCha8Rng>,
}

impl Dropout {
    pub fn off() -> Self {
        Dropout { p: 0.0, rng: None }
    }

    pub fn new(p: f64, seed: u64) -> Self {
        Dropout {
            p,
            rng: (p > 0.0).then(|| ChaCha8Rng::seed_from_u64(seed)),
        }
    }

    fn apply(&mut self, tape: &mut Tape<'_>, x: Var) -> Result<Var, TensorError> {
        let Some(rng) = self.rng.as_mut() else {
            return Ok(x);
        };
        use rand::Rng;
        let keep = 1.0 - self.p;
        let n = tape.value(x).len();
        let mask = (0..n).map(|_| if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 }).collect();
        tape.mul_const(x, mask)
    }
}
