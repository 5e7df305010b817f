//! Incremental phrase attribution: grow the perspective one phrase at a
//! time, measure how far each extension moves the stance probability, and
//! rank phrases corpus-wide per class.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{normalize_whitespace, StanceLabel, StancePair};
use crate::error::{Error, Result};
use crate::model::{Prediction, StancyModel};
use crate::nn::ParamStore;

/// How a perspective is cut into phrases.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmenterMode {
    /// Whitespace-delimited words.
    #[default]
    Unigram,
    /// Flat syntactic phrases from an external chunker.
    ShallowChunk,
}

/// External phrase chunker. The toolkit ships no parser of its own; plug
/// one in to get multi-word phrases.
pub trait ShallowChunker: Sync {
    fn chunk(&self, text: &str) -> Vec<String>;
}

/// An ordered cut of a perspective into non-empty phrases whose
/// space-joined concatenation reproduces the normalized text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhraseSegmentation {
    pub phrases: Vec<String>,
    /// The segmenter that actually produced the spans; a chunk request
    /// that fell back records `Unigram`.
    pub segmenter: SegmenterMode,
}

/// Cut a perspective into phrases. A `ShallowChunk` request without a
/// configured chunker, or a chunker whose output breaks the reconstruction
/// invariant, falls back to whole words with a logged warning.
pub fn segment(
    perspective: &str,
    mode: SegmenterMode,
    chunker: Option<&dyn ShallowChunker>,
) -> Result<PhraseSegmentation> {
    let text = normalize_whitespace(perspective);
    if text.is_empty() {
        return Err(Error::InvalidInput(
            "cannot segment an empty perspective".into(),
        ));
    }
    if mode == SegmenterMode::ShallowChunk {
        match chunker {
            None => log::warn!("no shallow chunker configured; segmenting into words"),
            Some(c) => {
                let phrases: Vec<String> =
                    c.chunk(&text).iter().map(|p| normalize_whitespace(p)).collect();
                if !phrases.is_empty()
                    && phrases.iter().all(|p| !p.is_empty())
                    && phrases.join(" ") == text
                {
                    return Ok(PhraseSegmentation {
                        phrases,
                        segmenter: SegmenterMode::ShallowChunk,
                    });
                }
                log::warn!(
                    "chunker output does not reconstruct the text; segmenting into words"
                );
            }
        }
    }
    Ok(PhraseSegmentation {
        phrases: text.split_whitespace().map(str::to_string).collect(),
        segmenter: SegmenterMode::Unigram,
    })
}

/// One phrase's effect: how far the support probability moved when the
/// phrase was appended to the prefix, and which class gained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhraseAttribution {
    pub phrase: String,
    /// 1-based position of the phrase in the segmentation.
    pub index: usize,
    /// Absolute support-probability shift; with two classes this equals
    /// the oppose-class shift exactly.
    pub delta: f64,
    /// The class whose probability grew; a zero shift counts as Support,
    /// mirroring the prediction tie rule.
    pub direction: StanceLabel,
}

impl PhraseAttribution {
    /// The support-probability change with its sign restored.
    pub fn signed_delta(&self) -> f64 {
        match self.direction {
            StanceLabel::Support => self.delta,
            StanceLabel::Oppose => -self.delta,
        }
    }
}

/// Attribution for one claim/perspective pair, with the endpoint support
/// probabilities so the telescoping identity can be checked from the
/// record alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairAttribution {
    pub pair_id: String,
    /// Support probability with no perspective at all.
    pub baseline_support: f64,
    /// Support probability for the full perspective.
    pub final_support: f64,
    pub attributions: Vec<PhraseAttribution>,
}

fn support_probability(prediction: &Prediction) -> f64 {
    prediction.probs[StanceLabel::Support.index()]
}

/// Score every prefix of the segmentation: the baseline is the empty
/// perspective, then each phrase joins the prefix in turn. Returns one
/// attribution per phrase.
pub fn attribute(
    model: &StancyModel,
    store: &ParamStore,
    pair: &StancePair,
    seg: &PhraseSegmentation,
) -> Result<PairAttribution> {
    if seg.phrases.is_empty() {
        return Err(Error::InvalidInput("segmentation holds no phrases".into()));
    }
    let baseline = model.predict_tokens(store, &pair.claim_text, Vec::new())?;
    let mut previous = support_probability(&baseline);
    let baseline_support = previous;

    let mut attributions = Vec::with_capacity(seg.phrases.len());
    let mut prefix = String::new();
    for (i, phrase) in seg.phrases.iter().enumerate() {
        if !prefix.is_empty() {
            prefix.push(' ');
        }
        prefix.push_str(phrase);
        let scored = model.predict(store, &pair.claim_text, &prefix)?;
        let current = support_probability(&scored);
        let direction = if current >= previous {
            StanceLabel::Support
        } else {
            StanceLabel::Oppose
        };
        attributions.push(PhraseAttribution {
            phrase: phrase.clone(),
            index: i + 1,
            delta: (current - previous).abs(),
            direction,
        });
        previous = current;
    }
    Ok(PairAttribution {
        pair_id: pair.pair_id.clone(),
        baseline_support,
        final_support: previous,
        attributions,
    })
}

/// Attribute every pair in parallel under a frozen model; the result is
/// ordered by pair id regardless of input order.
pub fn attribute_corpus(
    model: &StancyModel,
    store: &ParamStore,
    pairs: &[StancePair],
    mode: SegmenterMode,
    chunker: Option<&dyn ShallowChunker>,
) -> Result<Vec<PairAttribution>> {
    let mut results = pairs
        .par_iter()
        .map(|pair| {
            let seg = segment(&pair.perspective_text, mode, chunker)?;
            attribute(model, store, pair, &seg)
        })
        .collect::<Result<Vec<PairAttribution>>>()?;
    results.sort_by(|a, b| a.pair_id.cmp(&b.pair_id));
    Ok(results)
}

/// A phrase's corpus-level standing in one class: mean shift magnitude
/// over every occurrence that moved the class up.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhraseScore {
    pub phrase: String,
    pub score: f64,
    pub occurrences: u64,
}

/// Per-class ranked phrase lists.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RankedPhrases {
    pub support: Vec<PhraseScore>,
    pub oppose: Vec<PhraseScore>,
}

impl RankedPhrases {
    pub fn class(&self, label: StanceLabel) -> &[PhraseScore] {
        match label {
            StanceLabel::Support => &self.support,
            StanceLabel::Oppose => &self.oppose,
        }
    }
}

/// Group attributions by the class they pushed toward, average each
/// phrase's shift (case-folded), drop phrases seen fewer than
/// `min_occurrences` times, and keep the `top_k` highest scores per class.
/// Ties break alphabetically.
pub fn rank_phrases<'a, I>(attributions: I, top_k: usize, min_occurrences: u64) -> RankedPhrases
where
    I: IntoIterator<Item = &'a PhraseAttribution>,
{
    let mut sums: HashMap<(StanceLabel, String), (f64, u64)> = HashMap::new();
    for a in attributions {
        let entry = sums
            .entry((a.direction, a.phrase.to_lowercase()))
            .or_insert((0.0, 0));
        entry.0 += a.delta;
        entry.1 += 1;
    }
    let floor = min_occurrences.max(1);
    let mut ranked = RankedPhrases::default();
    for ((direction, phrase), (sum, count)) in sums {
        if count < floor {
            continue;
        }
        let list = match direction {
            StanceLabel::Support => &mut ranked.support,
            StanceLabel::Oppose => &mut ranked.oppose,
        };
        list.push(PhraseScore {
            phrase,
            score: sum / count as f64,
            occurrences: count,
        });
    }
    for list in [&mut ranked.support, &mut ranked.oppose] {
        list.sort_by(|a, b| {
            b.score
                .partial_cmp(&a.score)
                .expect("scores are finite")
                .then_with(|| a.phrase.cmp(&b.phrase))
        });
        list.truncate(top_k);
    }
    ranked
}
