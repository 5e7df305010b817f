//! Packing texts into control-token-delimited id sequences.
//!
//! Pair layout: `[CLS] claim [SEP] perspective [SEP]`, segment ids 0 through
//! the first separator inclusive and 1 after. Claim-only layout:
//! `[CLS] claim [SEP]`, all segment ids 0.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::encoder::vocab::Vocabulary;
use crate::error::{Error, Result};

/// How many packing calls had to drop tokens to fit the length budget.
/// Truncation is silent per call; this process-wide counter is the
/// observability hook.
static TRUNCATIONS: AtomicU64 = AtomicU64::new(0);

pub fn truncation_count() -> u64 {
    TRUNCATIONS.load(Ordering::Relaxed)
}

pub fn reset_truncation_count() {
    TRUNCATIONS.store(0, Ordering::Relaxed);
}

/// A tokenized input ready for the encoder. All three lists share one
/// length, at most the encoder's maximum sequence length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackedSequence {
    pub token_ids: Vec<usize>,
    pub segment_ids: Vec<u8>,
    pub attention_mask: Vec<u8>,
}

impl PackedSequence {
    pub fn len(&self) -> usize {
        self.token_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.token_ids.is_empty()
    }
}

/// Pack a claim/perspective pair. When the pair exceeds `max_len`, the
/// perspective tail is dropped first, then the claim tail; both separators
/// always survive.
pub fn pack_pair(
    claim: &str,
    perspective: &str,
    vocab: &Vocabulary,
    max_len: usize,
) -> Result<PackedSequence> {
    if perspective.trim().is_empty() {
        return Err(Error::InvalidInput("empty perspective text".into()));
    }
    pack_pair_tokens(claim, vocab.tokenize(perspective), vocab, max_len)
}

/// Pack a claim with an explicit (possibly empty) perspective token list.
/// The empty case packs as `[CLS] claim [SEP] [SEP]` and is the base input
/// for incremental attribution.
pub fn pack_pair_tokens(
    claim: &str,
    perspective_tokens: Vec<usize>,
    vocab: &Vocabulary,
    max_len: usize,
) -> Result<PackedSequence> {
    if claim.trim().is_empty() {
        return Err(Error::InvalidInput("empty claim text".into()));
    }
    let mut claim_toks = vocab.tokenize(claim);
    let mut persp_toks = perspective_tokens;

    // Budget excludes [CLS] and the two [SEP]s.
    let budget = max_len.saturating_sub(3);
    let overflow = (claim_toks.len() + persp_toks.len()).saturating_sub(budget);
    if overflow > 0 {
        TRUNCATIONS.fetch_add(1, Ordering::Relaxed);
        let cut = overflow.min(persp_toks.len());
        persp_toks.truncate(persp_toks.len() - cut);
        claim_toks.truncate(claim_toks.len() - (overflow - cut));
    }

    let mut token_ids = Vec::with_capacity(claim_toks.len() + persp_toks.len() + 3);
    token_ids.push(vocab.cls_id());
    token_ids.extend(&claim_toks);
    token_ids.push(vocab.sep_id());
    let claim_segment = token_ids.len();
    token_ids.extend(&persp_toks);
    token_ids.push(vocab.sep_id());

    let mut segment_ids = vec![0_u8; token_ids.len()];
    for s in segment_ids[claim_segment..].iter_mut() {
        *s = 1;
    }
    let attention_mask = vec![1_u8; token_ids.len()];
    Ok(PackedSequence {
        token_ids,
        segment_ids,
        attention_mask,
    })
}

/// Pack a claim alone: `[CLS] claim [SEP]`, truncated from the tail.
pub fn pack_claim_only(claim: &str, vocab: &Vocabulary, max_len: usize) -> Result<PackedSequence> {
    if claim.trim().is_empty() {
        return Err(Error::InvalidInput("empty claim text".into()));
    }
    let mut claim_toks = vocab.tokenize(claim);
    let budget = max_len.saturating_sub(2);
    if claim_toks.len() > budget {
        TRUNCATIONS.fetch_add(1, Ordering::Relaxed);
        claim_toks.truncate(budget);
    }
    let mut token_ids = Vec::with_capacity(claim_toks.len() + 2);
    token_ids.push(vocab.cls_id());
    token_ids.extend(&claim_toks);
    token_ids.push(vocab.sep_id());
    let n = token_ids.len();
    Ok(PackedSequence {
        token_ids,
        segment_ids: vec![0; n],
        attention_mask: vec![1; n],
    })
}
