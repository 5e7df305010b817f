//! Checkpoint directories: a JSON manifest describing the architecture and
//! tensor layout, raw little-endian parameter bytes, and the vocabulary.
//! Writes go to a temporary sibling directory first and are renamed into
//! place, so readers never observe a half-written checkpoint.

use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::encoder::{Encoder, EncoderSpec, VocabKind, Vocabulary};
use crate::error::{Error, Result};
use crate::model::{StancyModel, Variant, HEAD_WEIGHT};
use crate::nn::ParamStore;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const PARAMS_FILE: &str = "params.bin";
pub const VOCAB_FILE: &str = "vocab.txt";

const FORMAT_VERSION: u32 = 1;

/// Which classifier a checkpoint holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Base,
    Cons,
    LstmBaseline,
}

impl ModelKind {
    pub fn variant(self) -> Option<Variant> {
        match self {
            ModelKind::Base => Some(Variant::Base),
            ModelKind::Cons => Some(Variant::Cons),
            ModelKind::LstmBaseline => None,
        }
    }

    pub fn from_variant(v: Variant) -> ModelKind {
        match v {
            Variant::Base => ModelKind::Base,
            Variant::Cons => ModelKind::Cons,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Base => "base",
            ModelKind::Cons => "cons",
            ModelKind::LstmBaseline => "lstm_baseline",
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    rows: usize,
    cols: usize,
    /// Byte offset into the parameter file.
    offset: u64,
    trainable: bool,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format_version: u32,
    kind: ModelKind,
    /// Present for the transformer variants, absent for other kinds.
    encoder: Option<EncoderSpec>,
    vocab_kind: VocabKind,
    #[serde(default)]
    detach_cosine_feature: bool,
    /// Kind-specific extras (for example recurrent baseline dimensions).
    #[serde(default)]
    metadata: serde_json::Value,
    tensors: Vec<TensorEntry>,
}

/// A checkpoint read back into memory. For the transformer kinds,
/// [`LoadedCheckpoint::into_model`] rebuilds the classifier.
pub struct LoadedCheckpoint {
    pub kind: ModelKind,
    pub encoder_spec: Option<EncoderSpec>,
    pub vocab: Vocabulary,
    pub store: ParamStore,
    pub detach_cosine_feature: bool,
    pub metadata: serde_json::Value,
}

impl LoadedCheckpoint {
    /// Rebuild the transformer classifier this checkpoint came from.
    pub fn into_model(self) -> Result<(StancyModel, ParamStore)> {
        let variant = self.kind.variant().ok_or_else(|| {
            Error::Checkpoint(format!(
                "checkpoint holds a {} model, not a transformer classifier",
                self.kind
            ))
        })?;
        let spec = self.encoder_spec.ok_or_else(|| {
            Error::Checkpoint("manifest is missing the encoder description".into())
        })?;
        let encoder = Encoder::new(spec, self.vocab)?;
        let mut model = StancyModel::new(variant, encoder);
        model.detach_cosine_feature = self.detach_cosine_feature;

        let head = model.head();
        let id = self.store.id(HEAD_WEIGHT).ok_or_else(|| {
            Error::Checkpoint(format!("checkpoint has no {HEAD_WEIGHT} tensor"))
        })?;
        let got = self.store.value(id).dim();
        if got != (head.classes, head.input_dim) {
            return Err(Error::Checkpoint(format!(
                "{HEAD_WEIGHT} is {}x{}, but a {} model needs {}x{}",
                got.0, got.1, model.variant_name(), head.classes, head.input_dim
            )));
        }
        Ok((model, self.store))
    }
}

impl StancyModel {
    fn variant_name(&self) -> &'static str {
        ModelKind::from_variant(self.variant).as_str()
    }

    /// Write this classifier's checkpoint directory.
    pub fn save_checkpoint(&self, dir: &Path, store: &ParamStore) -> Result<()> {
        save_checkpoint(
            dir,
            ModelKind::from_variant(self.variant),
            Some(&self.encoder.spec),
            &self.encoder.vocab,
            store,
            self.detach_cosine_feature,
            serde_json::Value::Null,
        )
    }
}

/// Write a checkpoint directory atomically: manifest, parameters, vocabulary.
#[allow(clippy::too_many_arguments)]
pub fn save_checkpoint(
    dir: &Path,
    kind: ModelKind,
    encoder: Option<&EncoderSpec>,
    vocab: &Vocabulary,
    store: &ParamStore,
    detach_cosine_feature: bool,
    metadata: serde_json::Value,
) -> Result<()> {
    if store.is_empty() {
        return Err(Error::Checkpoint("refusing to save an empty parameter store".into()));
    }
    let parent = match dir.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => std::path::PathBuf::from("."),
    };
    fs::create_dir_all(&parent)?;
    let name = dir
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| Error::Checkpoint(format!("bad checkpoint path {}", dir.display())))?;
    let tmp = parent.join(format!(".{name}.tmp-{}", std::process::id()));
    if tmp.exists() {
        fs::remove_dir_all(&tmp)?;
    }
    fs::create_dir_all(&tmp)?;

    let mut tensors = Vec::with_capacity(store.len());
    let params_path = tmp.join(PARAMS_FILE);
    let mut out = std::io::BufWriter::new(fs::File::create(&params_path)?);
    let mut offset = 0u64;
    for (id, name, value) in store.iter() {
        let (rows, cols) = value.dim();
        tensors.push(TensorEntry {
            name: name.to_string(),
            rows,
            cols,
            offset,
            trainable: store.is_trainable(id),
        });
        for &v in value.iter() {
            out.write_all(&v.to_le_bytes())?;
        }
        offset += (rows * cols * 8) as u64;
    }
    out.flush()?;
    drop(out);

    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        kind,
        encoder: encoder.cloned(),
        vocab_kind: vocab.kind(),
        detach_cosine_feature,
        metadata,
        tensors,
    };
    fs::write(
        tmp.join(MANIFEST_FILE),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    vocab.save(&tmp.join(VOCAB_FILE))?;

    if dir.exists() {
        fs::remove_dir_all(dir)?;
    }
    fs::rename(&tmp, dir)?;
    Ok(())
}

/// Read a checkpoint directory back. Tensor bytes are validated against the
/// manifest layout and must all be finite.
pub fn load_checkpoint(dir: &Path) -> Result<LoadedCheckpoint> {
    let manifest_path = dir.join(MANIFEST_FILE);
    if !manifest_path.is_file() {
        return Err(Error::MissingFile(manifest_path));
    }
    let manifest: Manifest = serde_json::from_str(&fs::read_to_string(&manifest_path)?)
        .map_err(|e| Error::Checkpoint(format!("unreadable manifest: {e}")))?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(Error::Checkpoint(format!(
            "checkpoint format {} is not supported (expected {FORMAT_VERSION})",
            manifest.format_version
        )));
    }

    let params_path = dir.join(PARAMS_FILE);
    if !params_path.is_file() {
        return Err(Error::MissingFile(params_path));
    }
    let bytes = fs::read(&params_path)?;

    let mut store = ParamStore::new();
    for t in &manifest.tensors {
        let count = t.rows * t.cols;
        let start = t.offset as usize;
        let end = start
            .checked_add(count * 8)
            .ok_or_else(|| Error::Checkpoint(format!("tensor {} overflows the layout", t.name)))?;
        if end > bytes.len() {
            return Err(Error::Checkpoint(format!(
                "tensor {} spans bytes {start}..{end} but the parameter file has {}",
                t.name,
                bytes.len()
            )));
        }
        let mut flat = Vec::with_capacity(count);
        for chunk in bytes[start..end].chunks_exact(8) {
            let v = f64::from_le_bytes(chunk.try_into().unwrap());
            if !v.is_finite() {
                return Err(Error::Checkpoint(format!(
                    "tensor {} contains a non-finite value", t.name
                )));
            }
            flat.push(v);
        }
        let value = Array2::from_shape_vec((t.rows, t.cols), flat)
            .map_err(|e| Error::Checkpoint(format!("tensor {}: {e}", t.name)))?;
        if t.trainable {
            store.def(&t.name, value);
        } else {
            store.def_frozen(&t.name, value);
        }
    }

    let vocab = Vocabulary::load(&dir.join(VOCAB_FILE), manifest.vocab_kind)?;
    Ok(LoadedCheckpoint {
        kind: manifest.kind,
        encoder_spec: manifest.encoder,
        vocab,
        store,
        detach_cosine_feature: manifest.detach_cosine_feature,
        metadata: manifest.metadata,
    })
}
