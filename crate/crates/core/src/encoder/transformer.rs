//! The bidirectional transformer encoder: parameter registration, the tape
//! forward pass, and inference helpers.

use ndarray::Array2;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::encoder::pack::PackedSequence;
use crate::encoder::vocab::Vocabulary;
use crate::error::{Error, Result};
use crate::nn::{dropout_mask, NodeId, ParamStore, Tape};
use crate::seeding;

/// Layer-normalization epsilon used throughout the encoder.
pub const LAYER_NORM_EPS: f64 = 1e-12;

/// Standard deviation for random weight initialization.
const INIT_STD: f64 = 0.02;

/// Architecture description, serialized into checkpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderSpec {
    pub layers: usize,
    pub hidden_size: usize,
    pub attention_heads: usize,
    pub ffn_size: usize,
    pub max_sequence_length: usize,
    /// Filled from the bound vocabulary when the encoder is built.
    pub vocab_size: usize,
    pub dropout: f64,
    pub pretrained: bool,
}

impl EncoderSpec {
    /// The full-size pretrained configuration.
    pub fn pretrained_default() -> EncoderSpec {
        EncoderSpec {
            layers: 12,
            hidden_size: 768,
            attention_heads: 12,
            ffn_size: 3072,
            max_sequence_length: 512,
            vocab_size: 30522,
            dropout: 0.1,
            pretrained: true,
        }
    }

    /// A small randomly initialized encoder for tests and CI.
    pub fn toy() -> EncoderSpec {
        EncoderSpec {
            layers: 2,
            hidden_size: 32,
            attention_heads: 2,
            ffn_size: 128,
            max_sequence_length: 64,
            vocab_size: 0,
            dropout: 0.0,
            pretrained: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.layers == 0 {
            problems.push("encoder.layers must be at least 1".to_string());
        }
        if self.hidden_size == 0 {
            problems.push("encoder.hidden_size must be positive".to_string());
        }
        if self.attention_heads == 0 || !self.hidden_size.is_multiple_of(self.attention_heads.max(1)) {
            problems.push(format!(
                "attention_heads ({}) must divide hidden_size ({})",
                self.attention_heads, self.hidden_size
            ));
        }
        if self.ffn_size == 0 {
            problems.push("encoder.ffn_size must be positive".to_string());
        }
        if self.max_sequence_length < 3 {
            problems.push("max_sequence_length must be at least 3".to_string());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            problems.push(format!("dropout {} outside [0, 1)", self.dropout));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::ConfigValidation(problems))
        }
    }
}

/// The pooled sequence representation: the final hidden state at the
/// classification position. Entries are checked finite on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledRepresentation {
    values: Vec<f64>,
}

impl PooledRepresentation {
    pub fn new(values: Vec<f64>) -> Result<PooledRepresentation> {
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Degenerate(format!(
                "non-finite entry {bad} in pooled representation"
            )));
        }
        Ok(PooledRepresentation { values })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Whether a forward pass applies dropout (training) or not (inference).
pub enum Pass<'a> {
    Inference,
    Train { dropout_rng: &'a mut ChaCha20Rng },
}

/// A tokenizing transformer encoder bound to one vocabulary. Parameters
/// live in an external [`ParamStore`] so the classifier head and optimizer
/// can share them.
pub struct Encoder {
    pub spec: EncoderSpec,
    pub vocab: Vocabulary,
}

impl Encoder {
    pub fn new(mut spec: EncoderSpec, vocab: Vocabulary) -> Result<Encoder> {
        spec.vocab_size = vocab.len();
        spec.validate()?;
        Ok(Encoder { spec, vocab })
    }

    /// Parameter names and shapes in registration order. This order is the
    /// checkpoint layout contract.
    pub fn param_shapes(spec: &EncoderSpec) -> Vec<(String, (usize, usize))> {
        let h = spec.hidden_size;
        let f = spec.ffn_size;
        let mut out = vec![
            ("encoder.embeddings.word_embeddings.weight".to_string(), (spec.vocab_size, h)),
            ("encoder.embeddings.position_embeddings.weight".to_string(), (spec.max_sequence_length, h)),
            ("encoder.embeddings.token_type_embeddings.weight".to_string(), (2, h)),
            ("encoder.embeddings.layer_norm.weight".to_string(), (1, h)),
            ("encoder.embeddings.layer_norm.bias".to_string(), (1, h)),
        ];
        for i in 0..spec.layers {
            let p = format!("encoder.layer.{i}");
            for part in ["query", "key", "value", "output"] {
                out.push((format!("{p}.attention.{part}.weight"), (h, h)));
                out.push((format!("{p}.attention.{part}.bias"), (1, h)));
            }
            out.push((format!("{p}.attention.layer_norm.weight"), (1, h)));
            out.push((format!("{p}.attention.layer_norm.bias"), (1, h)));
            out.push((format!("{p}.ffn.intermediate.weight"), (f, h)));
            out.push((format!("{p}.ffn.intermediate.bias"), (1, f)));
            out.push((format!("{p}.ffn.output.weight"), (h, f)));
            out.push((format!("{p}.ffn.output.bias"), (1, h)));
            out.push((format!("{p}.ffn.layer_norm.weight"), (1, h)));
            out.push((format!("{p}.ffn.layer_norm.bias"), (1, h)));
        }
        out
    }

    /// Register randomly initialized encoder parameters: normalization
    /// gains start at one, biases at zero, everything else at N(0, 0.02).
    pub fn init_params(&self, store: &mut ParamStore, seed: u64) {
        let mut rng = seeding::rng_for(seed, "encoder-init");
        for (name, (rows, cols)) in Self::param_shapes(&self.spec) {
            let value = if name.ends_with("layer_norm.weight") {
                Array2::ones((rows, cols))
            } else if name.ends_with(".bias") {
                Array2::zeros((rows, cols))
            } else {
                seeding::normal_matrix(rows, cols, INIT_STD, &mut rng)
            };
            store.def(&name, value);
        }
    }

    /// Full forward pass: `[n]` token ids to `[n, H]` final hidden states.
    pub fn forward(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        seq: &PackedSequence,
        pass: &mut Pass,
    ) -> Result<NodeId> {
        let spec = &self.spec;
        let n = seq.len();
        if n == 0 {
            return Err(Error::Contract("cannot encode an empty sequence".into()));
        }
        if n > spec.max_sequence_length {
            return Err(Error::Contract(format!(
                "sequence length {n} exceeds the maximum {}; packing must prevent this",
                spec.max_sequence_length
            )));
        }
        if let Some(&bad) = seq.token_ids.iter().find(|&&t| t >= spec.vocab_size) {
            return Err(Error::Contract(format!(
                "token id {bad} outside vocabulary of size {}",
                spec.vocab_size
            )));
        }

        let pid = |name: &str| -> Result<usize> {
            store
                .id(name)
                .ok_or_else(|| Error::Contract(format!("parameter {name} not registered")))
        };

        // Embeddings: word + position + segment, then normalize.
        let word_table = tape.param(store, pid("encoder.embeddings.word_embeddings.weight")?);
        let pos_table = tape.param(store, pid("encoder.embeddings.position_embeddings.weight")?);
        let type_table = tape.param(store, pid("encoder.embeddings.token_type_embeddings.weight")?);
        let tok = tape.gather(word_table, &seq.token_ids);
        let positions: Vec<usize> = (0..n).collect();
        let pos = tape.gather(pos_table, &positions);
        let types: Vec<usize> = seq.segment_ids.iter().map(|&s| s as usize).collect();
        let typ = tape.gather(type_table, &types);
        let sum = tape.add(tok, pos);
        let sum = tape.add(sum, typ);
        let g = tape.param(store, pid("encoder.embeddings.layer_norm.weight")?);
        let b = tape.param(store, pid("encoder.embeddings.layer_norm.bias")?);
        let mut x = tape.layer_norm(sum, g, b, LAYER_NORM_EPS);
        x = maybe_dropout(tape, x, spec.dropout, pass);

        let heads = spec.attention_heads;
        let dh = spec.hidden_size / heads;
        let scale = 1.0 / (dh as f64).sqrt();

        for i in 0..spec.layers {
            let name = |part: &str| format!("encoder.layer.{i}.{part}");

            // Multi-head self-attention.
            let q = self.linear(tape, store, x, &name("attention.query"))?;
            let k = self.linear(tape, store, x, &name("attention.key"))?;
            let v = self.linear(tape, store, x, &name("attention.value"))?;
            let mut head_outputs = Vec::with_capacity(heads);
            for hx in 0..heads {
                let qh = tape.slice_cols(q, hx * dh, dh);
                let kh = tape.slice_cols(k, hx * dh, dh);
                let vh = tape.slice_cols(v, hx * dh, dh);
                let scores = tape.matmul_tb(qh, kh);
                let scores = tape.scale(scores, scale);
                let mut probs = tape.softmax_rows(scores);
                probs = maybe_dropout(tape, probs, spec.dropout, pass);
                head_outputs.push(tape.matmul(probs, vh));
            }
            let ctx = tape.concat_cols(&head_outputs);
            let mut attn = self.linear(tape, store, ctx, &name("attention.output"))?;
            attn = maybe_dropout(tape, attn, spec.dropout, pass);
            let res = tape.add(x, attn);
            let g = tape.param(store, pid(&name("attention.layer_norm.weight"))?);
            let b = tape.param(store, pid(&name("attention.layer_norm.bias"))?);
            x = tape.layer_norm(res, g, b, LAYER_NORM_EPS);

            // Position-wise feed-forward.
            let inter = self.linear(tape, store, x, &name("ffn.intermediate"))?;
            let inter = tape.gelu(inter);
            let mut ffn = self.linear(tape, store, inter, &name("ffn.output"))?;
            ffn = maybe_dropout(tape, ffn, spec.dropout, pass);
            let res = tape.add(x, ffn);
            let g = tape.param(store, pid(&name("ffn.layer_norm.weight"))?);
            let b = tape.param(store, pid(&name("ffn.layer_norm.bias"))?);
            x = tape.layer_norm(res, g, b, LAYER_NORM_EPS);
        }
        Ok(x)
    }

    /// Forward pass pooled to the classification position: `[1, H]`.
    pub fn encode_node(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        seq: &PackedSequence,
        pass: &mut Pass,
    ) -> Result<NodeId> {
        let hidden = self.forward(tape, store, seq, pass)?;
        Ok(tape.slice_rows(hidden, 0, 1))
    }

    /// Inference-mode encoding to a checked vector.
    pub fn encode(&self, store: &ParamStore, seq: &PackedSequence) -> Result<PooledRepresentation> {
        let mut tape = Tape::new();
        let pooled = self.encode_node(&mut tape, store, seq, &mut Pass::Inference)?;
        PooledRepresentation::new(tape.value(pooled).row(0).to_vec())
    }

    fn linear(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        x: NodeId,
        name: &str,
    ) -> Result<NodeId> {
        let w = store
            .id(&format!("{name}.weight"))
            .ok_or_else(|| Error::Contract(format!("parameter {name}.weight not registered")))?;
        let b = store
            .id(&format!("{name}.bias"))
            .ok_or_else(|| Error::Contract(format!("parameter {name}.bias not registered")))?;
        let w = tape.param(store, w);
        let b = tape.param(store, b);
        let y = tape.matmul_tb(x, w);
        Ok(tape.add_row(y, b))
    }
}

fn maybe_dropout(tape: &mut Tape, x: NodeId, p: f64, pass: &mut Pass) -> NodeId {
    match pass {
        Pass::Train { dropout_rng } if p > 0.0 => {
            let (rows, cols) = tape.value(x).dim();
            let mask = dropout_mask(rows, cols, p, dropout_rng);
            tape.mul_mask(x, mask)
        }
        _ => x,
    }
}
