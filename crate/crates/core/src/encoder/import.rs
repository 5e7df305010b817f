//! Pretrained weight import: a minimal reader for the single-file tensor
//! format (8-byte little-endian header length, JSON tensor table, raw
//! buffer) plus the name mapping from published encoder checkpoints onto
//! this crate's parameter names.

use std::collections::HashMap;
use std::path::Path;

use ndarray::Array2;
use serde::Deserialize;

use crate::encoder::transformer::{Encoder, EncoderSpec};
use crate::encoder::vocab::{VocabKind, Vocabulary};
use crate::error::{Error, Result};
use crate::nn::ParamStore;

#[derive(Deserialize)]
struct TensorEntry {
    dtype: String,
    shape: Vec<usize>,
    data_offsets: [usize; 2],
}

/// Read every tensor from a `.safetensors` file into `f64` matrices.
/// 1-D tensors come back as single-row matrices; ranks above 2 are
/// rejected (the encoder has none).
pub fn read_safetensors(path: &Path) -> Result<HashMap<String, Array2<f64>>> {
    let bytes = std::fs::read(path).map_err(|_| Error::MissingFile(path.to_path_buf()))?;
    let fail = |message: String| Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        message,
    };
    if bytes.len() < 8 {
        return Err(fail("file shorter than its header length field".into()));
    }
    let header_len = u64::from_le_bytes(bytes[..8].try_into().unwrap()) as usize;
    let body_start = 8 + header_len;
    if bytes.len() < body_start {
        return Err(fail("header length exceeds file size".into()));
    }
    let header: HashMap<String, serde_json::Value> =
        serde_json::from_slice(&bytes[8..body_start]).map_err(|e| fail(e.to_string()))?;
    let data = &bytes[body_start..];

    let mut tensors = HashMap::new();
    for (name, value) in header {
        if name == "__metadata__" {
            continue;
        }
        let entry: TensorEntry =
            serde_json::from_value(value).map_err(|e| fail(format!("tensor {name}: {e}")))?;
        let [start, end] = entry.data_offsets;
        if end < start || end > data.len() {
            return Err(fail(format!("tensor {name}: offsets out of range")));
        }
        let raw = &data[start..end];
        let values: Vec<f64> = match entry.dtype.as_str() {
            "F32" => raw
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
                .collect(),
            "F64" => raw
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect(),
            other => {
                return Err(fail(format!(
                    "tensor {name}: unsupported dtype {other} (expected F32 or F64)"
                )))
            }
        };
        let (rows, cols) = match entry.shape.as_slice() {
            [] => (1, 1),
            [d] => (1, *d),
            [r, c] => (*r, *c),
            more => {
                return Err(fail(format!(
                    "tensor {name}: rank {} unsupported",
                    more.len()
                )))
            }
        };
        if rows * cols != values.len() {
            return Err(fail(format!(
                "tensor {name}: shape {rows}x{cols} does not match {} values",
                values.len()
            )));
        }
        let arr = Array2::from_shape_vec((rows, cols), values)
            .map_err(|e| fail(format!("tensor {name}: {e}")))?;
        tensors.insert(name, arr);
    }
    Ok(tensors)
}

#[derive(Deserialize)]
struct PublishedConfig {
    num_hidden_layers: usize,
    hidden_size: usize,
    num_attention_heads: usize,
    intermediate_size: usize,
    max_position_embeddings: usize,
    vocab_size: usize,
    #[serde(default)]
    hidden_dropout_prob: Option<f64>,
}

/// Map a published checkpoint tensor name to this crate's parameter name.
/// Returns None for tensors we deliberately ignore (the pooler head and
/// any pretraining heads).
fn map_name(raw: &str) -> Option<String> {
    let name = raw.strip_prefix("bert.").unwrap_or(raw);
    if name.starts_with("pooler.") || name.starts_with("cls.") {
        return None;
    }
    let name = name
        .replace("LayerNorm.gamma", "LayerNorm.weight")
        .replace("LayerNorm.beta", "LayerNorm.bias");
    if let Some(rest) = name.strip_prefix("embeddings.") {
        let rest = rest.replace("LayerNorm", "layer_norm");
        return Some(format!("encoder.embeddings.{rest}"));
    }
    let layer_rest = name.strip_prefix("encoder.layer.").or_else(|| name.strip_prefix("layer."))?;
    let (index, rest) = layer_rest.split_once('.')?;
    let mapped = match rest {
        "attention.self.query.weight" => "attention.query.weight",
        "attention.self.query.bias" => "attention.query.bias",
        "attention.self.key.weight" => "attention.key.weight",
        "attention.self.key.bias" => "attention.key.bias",
        "attention.self.value.weight" => "attention.value.weight",
        "attention.self.value.bias" => "attention.value.bias",
        "attention.output.dense.weight" => "attention.output.weight",
        "attention.output.dense.bias" => "attention.output.bias",
        "attention.output.layer_norm.weight" => "attention.layer_norm.weight",
        "attention.output.layer_norm.bias" => "attention.layer_norm.bias",
        "attention.output.LayerNorm.weight" => "attention.layer_norm.weight",
        "attention.output.LayerNorm.bias" => "attention.layer_norm.bias",
        "intermediate.dense.weight" => "ffn.intermediate.weight",
        "intermediate.dense.bias" => "ffn.intermediate.bias",
        "output.dense.weight" => "ffn.output.weight",
        "output.dense.bias" => "ffn.output.bias",
        "output.layer_norm.weight" => "ffn.layer_norm.weight",
        "output.layer_norm.bias" => "ffn.layer_norm.bias",
        "output.LayerNorm.weight" => "ffn.layer_norm.weight",
        "output.LayerNorm.bias" => "ffn.layer_norm.bias",
        _ => return None,
    };
    Some(format!("encoder.layer.{index}.{mapped}"))
}

/// Load a pretrained encoder from a directory holding `config.json`,
/// `vocab.txt`, and a `.safetensors` weight file. Every parameter the
/// architecture requires must be present with the right shape; extra
/// tensors (pooler, pretraining heads) are ignored.
pub fn load_pretrained(dir: &Path) -> Result<(Encoder, ParamStore)> {
    let config_path = dir.join("config.json");
    if !config_path.is_file() {
        return Err(Error::MissingFile(config_path));
    }
    let config: PublishedConfig = serde_json::from_str(&std::fs::read_to_string(&config_path)?)
        .map_err(|e| Error::Parse {
            path: config_path.clone(),
            line: 0,
            message: e.to_string(),
        })?;

    let vocab = Vocabulary::load(&dir.join("vocab.txt"), VocabKind::WordPiece)?;

    let weights_path = find_safetensors(dir)?;
    let tensors = read_safetensors(&weights_path)?;
    let mut mapped: HashMap<String, Array2<f64>> = HashMap::new();
    for (raw, tensor) in tensors {
        match map_name(&raw) {
            Some(name) => {
                mapped.insert(name, tensor);
            }
            None => log::debug!("ignoring checkpoint tensor {raw}"),
        }
    }

    let spec = EncoderSpec {
        layers: config.num_hidden_layers,
        hidden_size: config.hidden_size,
        attention_heads: config.num_attention_heads,
        ffn_size: config.intermediate_size,
        max_sequence_length: config.max_position_embeddings,
        vocab_size: config.vocab_size,
        dropout: config.hidden_dropout_prob.unwrap_or(0.1),
        pretrained: true,
    };
    let encoder = Encoder::new(spec, vocab)?;
    if encoder.spec.vocab_size != config.vocab_size {
        return Err(Error::InvalidInput(format!(
            "vocab.txt has {} tokens but config.json declares {}",
            encoder.spec.vocab_size, config.vocab_size
        )));
    }

    let mut store = ParamStore::new();
    let mut missing = Vec::new();
    for (name, (rows, cols)) in Encoder::param_shapes(&encoder.spec) {
        match mapped.remove(&name) {
            Some(tensor) => {
                if tensor.dim() != (rows, cols) {
                    return Err(Error::Checkpoint(format!(
                        "{name}: expected shape {rows}x{cols}, found {}x{}",
                        tensor.nrows(),
                        tensor.ncols()
                    )));
                }
                store.def(&name, tensor);
            }
            None => missing.push(name),
        }
    }
    if !missing.is_empty() {
        return Err(Error::Checkpoint(format!(
            "pretrained checkpoint lacks {} required tensors, first: {}",
            missing.len(),
            missing[0]
        )));
    }
    Ok((encoder, store))
}

fn find_safetensors(dir: &Path) -> Result<std::path::PathBuf> {
    let preferred = dir.join("model.safetensors");
    if preferred.is_file() {
        return Ok(preferred);
    }
    let mut candidates: Vec<_> = std::fs::read_dir(dir)
        .map_err(|_| Error::MissingFile(preferred.clone()))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "safetensors"))
        .collect();
    candidates.sort();
    candidates.into_iter().next().ok_or(Error::MissingFile(preferred))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    /// Hand-build a tiny tensor file in the single-file format.
    fn write_safetensors(path: &Path, tensors: &[(&str, Vec<usize>, Vec<f32>)]) {
        let mut header = serde_json::Map::new();
        let mut offset = 0usize;
        let mut body = Vec::new();
        for (name, shape, values) in tensors {
            let nbytes = values.len() * 4;
            header.insert(
                name.to_string(),
                serde_json::json!({
                    "dtype": "F32",
                    "shape": shape,
                    "data_offsets": [offset, offset + nbytes],
                }),
            );
            for v in values {
                body.extend_from_slice(&v.to_le_bytes());
            }
            offset += nbytes;
        }
        let header_bytes = serde_json::to_vec(&serde_json::Value::Object(header)).unwrap();
        let mut f = std::fs::File::create(path).unwrap();
        f.write_all(&(header_bytes.len() as u64).to_le_bytes()).unwrap();
        f.write_all(&header_bytes).unwrap();
        f.write_all(&body).unwrap();
    }

    #[test]
    fn reads_f32_tensors_with_shapes() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.safetensors");
        write_safetensors(
            &path,
            &[
                ("mat", vec![2, 3], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]),
                ("vec", vec![4], vec![0.5, -0.5, 1.5, -1.5]),
            ],
        );
        let tensors = read_safetensors(&path).unwrap();
        assert_eq!(tensors["mat"].dim(), (2, 3));
        assert_eq!(tensors["mat"][[1, 2]], 6.0);
        assert_eq!(tensors["vec"].dim(), (1, 4));
        assert_eq!(tensors["vec"][[0, 3]], -1.5);
    }

    #[test]
    fn rejects_unsupported_dtype() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.safetensors");
        let header = br#"{"x":{"dtype":"I64","shape":[1],"data_offsets":[0,8]}}"#;
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(&(header.len() as u64).to_le_bytes()).unwrap();
        f.write_all(header).unwrap();
        f.write_all(&[0u8; 8]).unwrap();
        assert!(matches!(read_safetensors(&path), Err(Error::Parse { .. })));
    }

    #[test]
    fn name_mapping_covers_published_layout() {
        assert_eq!(
            map_name("bert.embeddings.word_embeddings.weight").as_deref(),
            Some("encoder.embeddings.word_embeddings.weight")
        );
        assert_eq!(
            map_name("bert.embeddings.LayerNorm.gamma").as_deref(),
            Some("encoder.embeddings.layer_norm.weight")
        );
        assert_eq!(
            map_name("encoder.layer.3.attention.self.query.weight").as_deref(),
            Some("encoder.layer.3.attention.query.weight")
        );
        assert_eq!(
            map_name("bert.encoder.layer.11.output.LayerNorm.bias").as_deref(),
            Some("encoder.layer.11.ffn.layer_norm.bias")
        );
        assert_eq!(map_name("bert.pooler.dense.weight"), None);
        assert_eq!(map_name("cls.predictions.bias"), None);
    }

    /// Build a complete miniature checkpoint directory and load it.
    #[test]
    fn loads_complete_miniature_checkpoint() {
        let dir = tempfile::tempdir().unwrap();
        let spec = EncoderSpec {
            layers: 1,
            hidden_size: 4,
            attention_heads: 2,
            ffn_size: 8,
            max_sequence_length: 16,
            vocab_size: 6,
            dropout: 0.0,
            pretrained: true,
        };
        std::fs::write(
            dir.path().join("config.json"),
            serde_json::json!({
                "num_hidden_layers": spec.layers,
                "hidden_size": spec.hidden_size,
                "num_attention_heads": spec.attention_heads,
                "intermediate_size": spec.ffn_size,
                "max_position_embeddings": spec.max_sequence_length,
                "vocab_size": spec.vocab_size,
                "hidden_dropout_prob": 0.0,
            })
            .to_string(),
        )
        .unwrap();
        std::fs::write(
            dir.path().join("vocab.txt"),
            "[PAD]\n[UNK]\n[CLS]\n[SEP]\nhello\nworld\n",
        )
        .unwrap();

        // Published names for every required tensor, plus a pooler to ignore.
        let mut tensors: Vec<(String, Vec<usize>, Vec<f32>)> = Vec::new();
        for (ours, (r, c)) in Encoder::param_shapes(&spec) {
            let published = published_name(&ours);
            let values: Vec<f32> = (0..r * c).map(|i| i as f32 * 0.01).collect();
            tensors.push((published, vec![r, c], values));
        }
        tensors.push(("bert.pooler.dense.weight".into(), vec![4, 4], vec![0.0; 16]));
        let as_refs: Vec<(&str, Vec<usize>, Vec<f32>)> = tensors
            .iter()
            .map(|(n, s, v)| (n.as_str(), s.clone(), v.clone()))
            .collect();
        write_safetensors(&dir.path().join("model.safetensors"), &as_refs);

        let (encoder, store) = load_pretrained(dir.path()).unwrap();
        assert_eq!(encoder.spec.hidden_size, 4);
        assert_eq!(store.len(), Encoder::param_shapes(&encoder.spec).len());
        let id = store.id("encoder.layer.0.ffn.output.weight").unwrap();
        assert_eq!(store.value(id).dim(), (4, 8));
    }

    /// Invert map_name for test fixture construction.
    fn published_name(ours: &str) -> String {
        let rest = ours.strip_prefix("encoder.").unwrap();
        if let Some(e) = rest.strip_prefix("embeddings.") {
            return format!("bert.embeddings.{}", e.replace("layer_norm", "LayerNorm"));
        }
        let rest = rest.strip_prefix("layer.").unwrap();
        let (i, tail) = rest.split_once('.').unwrap();
        let mapped = match tail {
            "attention.query.weight" => "attention.self.query.weight",
            "attention.query.bias" => "attention.self.query.bias",
            "attention.key.weight" => "attention.self.key.weight",
            "attention.key.bias" => "attention.self.key.bias",
            "attention.value.weight" => "attention.self.value.weight",
            "attention.value.bias" => "attention.self.value.bias",
            "attention.output.weight" => "attention.output.dense.weight",
            "attention.output.bias" => "attention.output.dense.bias",
            "attention.layer_norm.weight" => "attention.output.LayerNorm.weight",
            "attention.layer_norm.bias" => "attention.output.LayerNorm.bias",
            "ffn.intermediate.weight" => "intermediate.dense.weight",
            "ffn.intermediate.bias" => "intermediate.dense.bias",
            "ffn.output.weight" => "output.dense.weight",
            "ffn.output.bias" => "output.dense.bias",
            "ffn.layer_norm.weight" => "output.LayerNorm.weight",
            "ffn.layer_norm.bias" => "output.LayerNorm.bias",
            other => panic!("unmapped {other}"),
        };
        format!("bert.encoder.layer.{i}.{mapped}")
    }

    #[test]
    fn missing_required_tensor_is_a_checkpoint_error() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("config.json"),
            serde_json::json!({
                "num_hidden_layers": 1, "hidden_size": 4, "num_attention_heads": 2,
                "intermediate_size": 8, "max_position_embeddings": 16, "vocab_size": 6,
            })
            .to_string(),
        )
        .unwrap();
        std::fs::write(dir.path().join("vocab.txt"), "[PAD]\n[UNK]\n[CLS]\n[SEP]\na\nb\n").unwrap();
        write_safetensors(
            &dir.path().join("model.safetensors"),
            &[("bert.embeddings.word_embeddings.weight", vec![6, 4], vec![0.0; 24])],
        );
        assert!(matches!(
            load_pretrained(dir.path()),
            Err(Error::Checkpoint(_))
        ));
    }
}
