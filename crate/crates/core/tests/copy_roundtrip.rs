//! Train, decode and score through the core API alone.

use titlegen_core::decode::{beam_decode, greedy_decode, DecodeConfig, ModelScorer};
use titlegen_core::metrics::{evaluate_corpus, RougeLForm};
use titlegen_core::model::{train, AdamConfig, Example, Model, ModelConfig, Sequential, SourceContext, TrainConfig};
use titlegen_core::tokenizer::{encode_source_tokens, encode_target_tokens, tokenize, Vocabulary};

const PAIRS: &[(&str, &str)] = &[
    ("i call frobnicate on a list and want to sort it", "how to sort frobnicate"),
    ("i call quuxify on a map and want to parse it", "how to parse quuxify"),
    ("i call zorble on a file and want to read it", "how to read zorble"),
    ("i call blargh on a string and want to split it", "how to split blargh"),
];

#[test]
fn unseen_identifiers_are_copied_from_the_source() {
    // identifiers stay out of the vocabulary, so only the copy path can emit them
    let common = "i call on a and want to it how list map file string sort parse read split";
    let vocab = Vocabulary::build([tokenize(common)], 64, 1).unwrap();
    let cfg = ModelConfig {
        vocab_size: vocab.len(),
        d_model: 16,
        n_heads: 2,
        n_encoder_layers: 1,
        n_decoder_layers: 1,
        feedforward_dim: 32,
        dropout_prob: 0.0,
        max_source_len: 16,
        max_target_len: 8,
        ..ModelConfig::default()
    };
    let examples: Vec<(SourceContext, Example)> = PAIRS
        .iter()
        .map(|(s, t)| {
            let src = encode_source_tokens(tokenize(s), &vocab, 16).unwrap();
            let tgt = encode_target_tokens(tokenize(t), &vocab, 8).unwrap();
            (SourceContext::new(&src, vocab.len()), Example::new(&src, &tgt, vocab.len(), true).unwrap())
        })
        .collect();
    let set: Vec<Example> = examples.iter().map(|(_, e)| e.clone()).collect();
    let mut model = Model::new(cfg).unwrap();
    let tc = TrainConfig {
        epochs: 150,
        batch_size: 4,
        adam: AdamConfig {
            lr: 1e-2,
            warmup_fraction: 0.05,
            ..AdamConfig::default()
        },
        grad_clip: Some(1.0),
        ..TrainConfig::default()
    };
    train(&mut model, &set, &[], &tc, &Sequential).unwrap();

    let mut cands = Vec::new();
    for (ctx, _) in &examples {
        let s = ModelScorer::new(&model, ctx).unwrap();
        let g = greedy_decode(&s, 6).unwrap();
        let b = beam_decode(&s, &DecodeConfig { beam: 3, max_len: 6, ..DecodeConfig::default() }).unwrap();
        assert!(b.len() <= 3 && !b.is_empty());
        for pos in g.copied_token_positions(vocab.len()) {
            assert!(ctx.tokens.contains(&g.tokens(ctx, &vocab)[pos]));
        }
        cands.push(g.tokens(ctx, &vocab));
    }
    let refs: Vec<Vec<String>> = PAIRS.iter().map(|(_, t)| tokenize(t)).collect();
    let r = evaluate_corpus(&cands, &refs, None, RougeLForm::F1).unwrap();
    assert!(r.overall.mean.rouge_l > 0.9, "{cands:?}");
}
