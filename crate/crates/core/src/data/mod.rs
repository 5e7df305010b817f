//! Claim/perspective records: ingestion from the released corpus layout,
//! canonical on-disk form, split bookkeeping, and corpus statistics.

mod canonical;
pub mod fixture;
mod ingest;

pub use canonical::{read_canonical, write_canonical};
pub use ingest::{ingest_perspectrum, ingest_perspectrum_with, IngestConfig};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary stance of a perspective toward a claim.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StanceLabel {
    #[serde(rename = "SUPPORT")]
    Support,
    #[serde(rename = "OPPOSE")]
    Oppose,
}

impl StanceLabel {
    pub const ALL: [StanceLabel; 2] = [StanceLabel::Support, StanceLabel::Oppose];

    /// Similarity target for the consistency loss: supporting perspectives
    /// should align with the claim (+1), opposing ones should not (-1).
    pub fn to_sim_target(self) -> i8 {
        match self {
            StanceLabel::Support => 1,
            StanceLabel::Oppose => -1,
        }
    }

    /// Class index in probability vectors. SUPPORT is class 0; argmax ties
    /// resolve toward it.
    pub fn index(self) -> usize {
        match self {
            StanceLabel::Support => 0,
            StanceLabel::Oppose => 1,
        }
    }

    pub fn from_index(i: usize) -> Option<StanceLabel> {
        match i {
            0 => Some(StanceLabel::Support),
            1 => Some(StanceLabel::Oppose),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            StanceLabel::Support => "SUPPORT",
            StanceLabel::Oppose => "OPPOSE",
        }
    }
}

impl std::fmt::Display for StanceLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Dataset partition, taken verbatim from the released split assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Dev, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }
}

impl std::fmt::Display for Split {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Split> {
        match s {
            "train" => Ok(Split::Train),
            "dev" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            other => Err(Error::InvalidInput(format!(
                "unknown split {other:?}; expected train, dev, or test"
            ))),
        }
    }
}

/// One labeled claim/perspective instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StancePair {
    pub pair_id: String,
    pub claim_text: String,
    pub perspective_text: String,
    pub label: StanceLabel,
    pub split: Split,
}

impl StancePair {
    /// Build a pair, normalizing whitespace in both texts (runs collapse
    /// to a single space, ends trimmed). Empty texts after normalization
    /// are rejected, as is an empty id.
    pub fn new(
        pair_id: impl Into<String>,
        claim_text: &str,
        perspective_text: &str,
        label: StanceLabel,
        split: Split,
    ) -> Result<StancePair> {
        let pair_id = pair_id.into();
        if pair_id.trim().is_empty() {
            return Err(Error::InvalidInput("empty pair_id".into()));
        }
        let claim_text = normalize_whitespace(claim_text);
        let perspective_text = normalize_whitespace(perspective_text);
        if claim_text.is_empty() {
            return Err(Error::InvalidInput(format!(
                "pair {pair_id}: empty claim text"
            )));
        }
        if perspective_text.is_empty() {
            return Err(Error::InvalidInput(format!(
                "pair {pair_id}: empty perspective text"
            )));
        }
        Ok(StancePair {
            pair_id,
            claim_text,
            perspective_text,
            label,
            split,
        })
    }
}

/// Collapse whitespace runs to single spaces and trim the ends.
pub fn normalize_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Label counts within one split.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub supporting: u64,
    pub opposing: u64,
}

impl SplitCounts {
    pub fn total(self) -> u64 {
        self.supporting + self.opposing
    }

    fn bump(&mut self, label: StanceLabel) {
        match label {
            StanceLabel::Support => self.supporting += 1,
            StanceLabel::Oppose => self.opposing += 1,
        }
    }
}

/// Per-split label counts for a whole dataset.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub train: SplitCounts,
    pub dev: SplitCounts,
    pub test: SplitCounts,
}

impl DatasetStats {
    pub fn split(&self, split: Split) -> SplitCounts {
        match split {
            Split::Train => self.train,
            Split::Dev => self.dev,
            Split::Test => self.test,
        }
    }

    pub fn total_supporting(&self) -> u64 {
        self.train.supporting + self.dev.supporting + self.test.supporting
    }

    pub fn total_opposing(&self) -> u64 {
        self.train.opposing + self.dev.opposing + self.test.opposing
    }

    pub fn grand_total(&self) -> u64 {
        self.total_supporting() + self.total_opposing()
    }
}

/// Count pairs by split and label.
pub fn compute_stats(pairs: &[StancePair]) -> DatasetStats {
    let mut stats = DatasetStats::default();
    for p in pairs {
        match p.split {
            Split::Train => stats.train.bump(p.label),
            Split::Dev => stats.dev.bump(p.label),
            Split::Test => stats.test.bump(p.label),
        }
    }
    stats
}

/// Keep only the pairs belonging to one split.
pub fn filter_split(pairs: &[StancePair], split: Split) -> Vec<StancePair> {
    pairs.iter().filter(|p| p.split == split).cloned().collect()
}
