//! Recurrent baseline: frozen word embeddings feed one BiLSTM whose weights
//! are shared between the claim and the perspective; the four concatenated
//! final states pass through a dense layer into the two-way head.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::data::StancePair;
use crate::encoder::{Pass, Vocabulary, WordLevelVocab};
use crate::error::{Error, Result};
use crate::model::{
    save_checkpoint, BatchLossNodes, LoadedCheckpoint, ModelKind, Prediction, NUM_CLASSES,
};
use crate::nn::{NodeId, ParamStore, Tape};
use crate::seeding;

use super::{TrainConfig, TrainableModel};

const EMBEDDINGS: &str = "lstm.embeddings.weight";

fn default_hidden_size() -> usize {
    128
}
fn default_dense_size() -> usize {
    256
}

/// Recurrent baseline dimensions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LstmConfig {
    #[serde(default = "default_hidden_size")]
    pub hidden_size: usize,
    #[serde(default = "default_dense_size")]
    pub dense_size: usize,
}

impl Default for LstmConfig {
    fn default() -> Self {
        LstmConfig {
            hidden_size: default_hidden_size(),
            dense_size: default_dense_size(),
        }
    }
}

/// Parse a text embedding table: one `word v1 .. vD` line per word, the
/// dimension fixed by the first line.
pub fn load_word_embeddings(path: &Path) -> Result<(usize, HashMap<String, Vec<f64>>)> {
    if !path.is_file() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let reader = BufReader::new(File::open(path)?);
    let mut dim = 0usize;
    let mut table = HashMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let word = fields.next().expect("non-blank line has a first field");
        let values = fields
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|e| parse_err(lineno, format!("bad number {f:?}: {e}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if values.is_empty() {
            return Err(parse_err(lineno, format!("word {word:?} has no vector")));
        }
        if dim == 0 {
            dim = values.len();
        } else if values.len() != dim {
            return Err(parse_err(
                lineno,
                format!("vector has {} entries, expected {dim}", values.len()),
            ));
        }
        table.insert(word.to_string(), values);
    }
    if table.is_empty() {
        return Err(parse_err(0, "embedding file holds no vectors".into()));
    }
    Ok((dim, table))
}

/// The baseline model. Parameters live in a [`ParamStore`]; this struct
/// carries only the dimensions and the vocabulary.
pub struct LstmModel {
    pub config: LstmConfig,
    pub vocab: Vocabulary,
    pub embedding_dim: usize,
}

struct Direction<'a> {
    name: &'a str,
    reversed: bool,
}

const DIRECTIONS: [Direction<'static>; 2] = [
    Direction {
        name: "lstm.forward",
        reversed: false,
    },
    Direction {
        name: "lstm.backward",
        reversed: true,
    },
];

impl LstmModel {
    /// Build the model for a corpus: the vocabulary covers every training
    /// and dev text, the embedding row of a word absent from the table is
    /// zero, and the table itself stays frozen.
    pub fn from_corpus(
        config: LstmConfig,
        embeddings_path: &Path,
        train_pairs: &[StancePair],
        dev_pairs: &[StancePair],
        seed: u64,
    ) -> Result<(LstmModel, ParamStore)> {
        let (dim, table) = load_word_embeddings(embeddings_path)?;
        let texts = train_pairs
            .iter()
            .chain(dev_pairs)
            .flat_map(|p| [p.claim_text.as_str(), p.perspective_text.as_str()]);
        let vocab = Vocabulary::WordLevel(WordLevelVocab::build(texts));

        let mut matrix = Array2::zeros((vocab.len(), dim));
        for id in 0..vocab.len() {
            if let Some(vector) = table.get(vocab.token(id)) {
                for (j, &v) in vector.iter().enumerate() {
                    matrix[[id, j]] = v;
                }
            }
        }

        let mut store = ParamStore::new();
        store.def_frozen(EMBEDDINGS, matrix);
        let model = LstmModel {
            config,
            vocab,
            embedding_dim: dim,
        };
        model.init_trainable(&mut store, seed);
        Ok((model, store))
    }

    /// Rebuild from a loaded checkpoint; the parameter store arrives intact,
    /// so only dimensions and the vocabulary need recovering.
    pub fn from_checkpoint(loaded: LoadedCheckpoint) -> Result<(LstmModel, ParamStore)> {
        if loaded.kind != ModelKind::LstmBaseline {
            return Err(Error::Checkpoint(format!(
                "expected an lstm_baseline checkpoint, found {}",
                loaded.kind
            )));
        }
        let config: LstmConfig = serde_json::from_value(
            loaded
                .metadata
                .get("lstm")
                .cloned()
                .ok_or_else(|| Error::Checkpoint("checkpoint metadata lacks an lstm entry".into()))?,
        )
        .map_err(|e| Error::Checkpoint(format!("bad lstm metadata: {e}")))?;
        let emb = loaded
            .store
            .id(EMBEDDINGS)
            .ok_or_else(|| Error::Checkpoint(format!("checkpoint lacks {EMBEDDINGS}")))?;
        let embedding_dim = loaded.store.value(emb).ncols();
        Ok((
            LstmModel {
                config,
                vocab: loaded.vocab,
                embedding_dim,
            },
            loaded.store,
        ))
    }

    fn init_trainable(&self, store: &mut ParamStore, seed: u64) {
        let mut rng = seeding::rng_for(seed, "lstm-init");
        let h = self.config.hidden_size;
        let d = self.embedding_dim;
        let dense = self.config.dense_size;
        let mut weight = |store: &mut ParamStore, name: &str, rows: usize, cols: usize| {
            let std = 1.0 / (cols as f64).sqrt();
            store.def(name, seeding::normal_matrix(rows, cols, std, &mut rng));
        };
        for dir in ["lstm.forward", "lstm.backward"] {
            weight(store, &format!("{dir}.input.weight"), 4 * h, d);
            weight(store, &format!("{dir}.hidden.weight"), 4 * h, h);
            store.def(&format!("{dir}.bias"), Array2::zeros((1, 4 * h)));
        }
        weight(store, "lstm.dense.weight", dense, 4 * h);
        store.def("lstm.dense.bias", Array2::zeros((1, dense)));
        weight(store, "lstm.output.weight", NUM_CLASSES, dense);
        store.def("lstm.output.bias", Array2::zeros((1, NUM_CLASSES)));
    }

    fn param(&self, tape: &mut Tape, store: &ParamStore, name: &str) -> Result<NodeId> {
        let id = store
            .id(name)
            .ok_or_else(|| Error::Contract(format!("parameter {name} not registered")))?;
        Ok(tape.param(store, id))
    }

    /// Run one direction of the shared BiLSTM over a token-id sequence and
    /// return the final hidden state, shape `[1, hidden]`.
    fn direction_final_state(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        embedded: NodeId,
        len: usize,
        dir: &Direction,
    ) -> Result<NodeId> {
        let h = self.config.hidden_size;
        let wx = self.param(tape, store, &format!("{}.input.weight", dir.name))?;
        let wh = self.param(tape, store, &format!("{}.hidden.weight", dir.name))?;
        let bias = self.param(tape, store, &format!("{}.bias", dir.name))?;
        let mut hidden = tape.constant(Array2::zeros((1, h)));
        let mut cell = tape.constant(Array2::zeros((1, h)));
        let steps: Vec<usize> = if dir.reversed {
            (0..len).rev().collect()
        } else {
            (0..len).collect()
        };
        for t in steps {
            let xt = tape.slice_rows(embedded, t, 1);
            let from_input = tape.matmul_tb(xt, wx);
            let from_hidden = tape.matmul_tb(hidden, wh);
            let sum = tape.add(from_input, from_hidden);
            let gates = tape.add_row(sum, bias);
            let input_slice = tape.slice_cols(gates, 0, h);
            let input_gate = tape.sigmoid(input_slice);
            let forget_slice = tape.slice_cols(gates, h, h);
            let forget_gate = tape.sigmoid(forget_slice);
            let candidate_slice = tape.slice_cols(gates, 2 * h, h);
            let candidate = tape.tanh(candidate_slice);
            let output_slice = tape.slice_cols(gates, 3 * h, h);
            let output_gate = tape.sigmoid(output_slice);
            let kept = tape.mul(forget_gate, cell);
            let written = tape.mul(input_gate, candidate);
            cell = tape.add(kept, written);
            let squashed = tape.tanh(cell);
            hidden = tape.mul(output_gate, squashed);
        }
        Ok(hidden)
    }

    /// Encode one text to `[1, 2*hidden]`: forward and backward final
    /// states, concatenated.
    fn text_feature(&self, tape: &mut Tape, store: &ParamStore, text: &str) -> Result<NodeId> {
        let ids = self.vocab.tokenize(text);
        if ids.is_empty() {
            return Err(Error::InvalidInput(format!(
                "text tokenizes to nothing: {text:?}"
            )));
        }
        let table = self.param(tape, store, EMBEDDINGS)?;
        let embedded = tape.gather(table, &ids);
        let mut parts = Vec::with_capacity(2);
        for dir in &DIRECTIONS {
            parts.push(self.direction_final_state(tape, store, embedded, ids.len(), dir)?);
        }
        Ok(tape.concat_cols(&parts))
    }

    /// Score one claim/perspective pair.
    pub fn predict(&self, store: &ParamStore, claim: &str, perspective: &str) -> Result<Prediction> {
        let mut tape = Tape::new();
        let logits = self.logits(&mut tape, store, claim, perspective)?;
        let probs = tape.softmax_rows(logits);
        Prediction::from_probs(tape.value(probs).row(0).to_vec(), None)
    }

    /// Class logits for a pair, shape `[1, 2]`.
    fn logits(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        claim: &str,
        perspective: &str,
    ) -> Result<NodeId> {
        let claim = self.text_feature(tape, store, claim)?;
        let perspective = self.text_feature(tape, store, perspective)?;
        let feature = tape.concat_cols(&[claim, perspective]);
        let dense_w = self.param(tape, store, "lstm.dense.weight")?;
        let dense_b = self.param(tape, store, "lstm.dense.bias")?;
        let projected = tape.matmul_tb(feature, dense_w);
        let shifted = tape.add_row(projected, dense_b);
        let activated = tape.relu(shifted);
        let out_w = self.param(tape, store, "lstm.output.weight")?;
        let out_b = self.param(tape, store, "lstm.output.bias")?;
        let scores = tape.matmul_tb(activated, out_w);
        Ok(tape.add_row(scores, out_b))
    }
}

impl TrainableModel for LstmModel {
    fn batch_loss(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        batch: &[StancePair],
        _cos_weight: f64,
        _pass: &mut Pass,
    ) -> Result<BatchLossNodes> {
        if batch.is_empty() {
            return Err(Error::Contract("batch loss over an empty batch".into()));
        }
        let mut ce_terms = Vec::with_capacity(batch.len());
        for pair in batch {
            let logits = self.logits(tape, store, &pair.claim_text, &pair.perspective_text)?;
            let log_probs = tape.log_softmax_rows(logits);
            let gold = tape.pick_col(log_probs, pair.label.index());
            ce_terms.push(tape.scale(gold, -1.0));
        }
        let ce_mean = tape.mean_scalars(&ce_terms);
        Ok(BatchLossNodes {
            joint: ce_mean,
            ce_mean,
            cos_mean: None,
        })
    }

    fn predict_pair(&self, store: &ParamStore, pair: &StancePair) -> Result<Prediction> {
        self.predict(store, &pair.claim_text, &pair.perspective_text)
    }

    fn save(&self, dir: &Path, store: &ParamStore, train_config: &TrainConfig) -> Result<()> {
        save_checkpoint(
            dir,
            ModelKind::LstmBaseline,
            None,
            &self.vocab,
            store,
            false,
            serde_json::json!({ "train_config": train_config, "lstm": self.config }),
        )
    }
}
