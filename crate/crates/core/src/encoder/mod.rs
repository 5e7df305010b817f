//! The contextual pair encoder: tokenization, sequence packing with control
//! tokens, the transformer forward pass, and pretrained weight import.

mod import;
mod pack;
mod transformer;
mod vocab;

pub use import::{load_pretrained, read_safetensors};
pub use pack::{
    pack_claim_only, pack_pair, pack_pair_tokens, reset_truncation_count, truncation_count,
    PackedSequence,
};
pub use transformer::{
    Encoder, EncoderSpec, Pass, PooledRepresentation, LAYER_NORM_EPS,
};
pub use vocab::{
    VocabKind, Vocabulary, WordLevelVocab, WordPieceVocab, CLS_TOKEN, PAD_TOKEN, SEP_TOKEN,
    UNK_TOKEN,
};
