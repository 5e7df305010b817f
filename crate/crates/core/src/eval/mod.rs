//! Classification metrics and prediction persistence: per-class and macro
//! precision/recall/F1 from the confusion matrix, line-delimited prediction
//! files, and a paired significance test between two prediction sets.

mod mcnemar;

pub use mcnemar::{mcnemar, mcnemar_from_counts, McNemarMethod, McNemarReport, EXACT_LIMIT};

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{StanceLabel, StancePair};
use crate::error::{Error, Result};
use crate::model::{Prediction, StancyModel};
use crate::nn::ParamStore;

/// One scored instance; prediction files hold one JSON record per line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub pair_id: String,
    pub gold: StanceLabel,
    pub predicted: StanceLabel,
    pub probs: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cosine: Option<f64>,
}

impl PredictionRecord {
    pub fn new(pair: &StancePair, prediction: &Prediction) -> PredictionRecord {
        PredictionRecord {
            pair_id: pair.pair_id.clone(),
            gold: pair.label,
            predicted: prediction.label,
            probs: prediction.probs.clone(),
            cosine: prediction.cosine,
        }
    }

    pub fn is_correct(&self) -> bool {
        self.gold == self.predicted
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if self.probs.len() != 2 {
            return Err(format!("expected 2 probabilities, got {}", self.probs.len()));
        }
        if self.probs.iter().any(|p| !p.is_finite() || !(0.0..=1.0).contains(p)) {
            return Err(format!("probabilities {:?} outside [0, 1]", self.probs));
        }
        if let Some(c) = self.cosine {
            if !c.is_finite() || !(-1.0..=1.0).contains(&c) {
                return Err(format!("cosine {c} outside [-1, 1]"));
            }
        }
        Ok(())
    }
}

/// Score pairs in order with any classifier function, in parallel.
pub fn predict_records_with<F>(
    pairs: &[StancePair],
    classify: F,
) -> Result<Vec<PredictionRecord>>
where
    F: Fn(&StancePair) -> Result<Prediction> + Sync,
{
    pairs
        .par_iter()
        .map(|p| Ok(PredictionRecord::new(p, &classify(p)?)))
        .collect()
}

/// Run a model over pairs in order, in parallel under the frozen parameters.
pub fn predict_records(
    model: &StancyModel,
    store: &ParamStore,
    pairs: &[StancePair],
) -> Result<Vec<PredictionRecord>> {
    predict_records_with(pairs, |p| model.predict_pair(store, p))
}

/// Write records as one JSON object per line.
pub fn write_predictions(records: &[PredictionRecord], out: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(out)?);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Read records back, rejecting malformed lines and duplicate pair_ids.
pub fn read_predictions(path: &Path) -> Result<Vec<PredictionRecord>> {
    if !path.is_file() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let reader = BufReader::new(File::open(path)?);
    let mut records = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: lineno,
            message,
        };
        let record: PredictionRecord =
            serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
        record.validate().map_err(parse_err)?;
        if !seen.insert(record.pair_id.clone()) {
            return Err(parse_err(format!("duplicate pair_id {:?}", record.pair_id)));
        }
        records.push(record);
    }
    Ok(records)
}

/// Metrics for one class, as percentages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Gold instances of this class.
    pub gold_count: u64,
    /// True when a zero denominator pinned a metric to 0.
    pub degenerate: bool,
}

/// Counts indexed by `[gold][predicted]` in class-index order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 2]; 2],
}

impl ConfusionMatrix {
    pub fn count(&self, gold: StanceLabel, predicted: StanceLabel) -> u64 {
        self.counts[gold.index()][predicted.index()]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        self.counts[0][0] + self.counts[1][1]
    }
}

/// Full evaluation result. All rate metrics are percentages; the macro
/// metrics are unweighted means over the two classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub support: ClassMetrics,
    pub oppose: ClassMetrics,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub accuracy: f64,
    pub confusion: ConfusionMatrix,
    pub total: u64,
}

impl EvalReport {
    pub fn class(&self, label: StanceLabel) -> &ClassMetrics {
        match label {
            StanceLabel::Support => &self.support,
            StanceLabel::Oppose => &self.oppose,
        }
    }

    pub fn any_degenerate(&self) -> bool {
        self.support.degenerate || self.oppose.degenerate
    }

    /// Human-readable table with two-decimal percentages.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<10} {:>10} {:>10} {:>10} {:>8}\n",
            "class", "precision", "recall", "f1", "gold"
        ));
        for label in StanceLabel::ALL {
            let m = self.class(label);
            let mark = if m.degenerate { " *" } else { "" };
            out.push_str(&format!(
                "{:<10} {:>10.2} {:>10.2} {:>10.2} {:>8}{mark}\n",
                label.as_str(),
                m.precision,
                m.recall,
                m.f1,
                m.gold_count
            ));
        }
        out.push_str(&format!(
            "{:<10} {:>10.2} {:>10.2} {:>10.2} {:>8}\n",
            "macro", self.macro_precision, self.macro_recall, self.macro_f1, self.total
        ));
        out.push_str(&format!("accuracy {:>7.2}\n", self.accuracy));
        if self.any_degenerate() {
            out.push_str("* zero-denominator metric reported as 0\n");
        }
        out
    }
}

fn percent(numerator: u64, denominator: u64) -> (f64, bool) {
    if denominator == 0 {
        (0.0, true)
    } else {
        (100.0 * numerator as f64 / denominator as f64, false)
    }
}

fn class_metrics(confusion: &ConfusionMatrix, label: StanceLabel) -> ClassMetrics {
    let other = StanceLabel::from_index(1 - label.index()).unwrap();
    let tp = confusion.count(label, label);
    let fp = confusion.count(other, label);
    let fn_ = confusion.count(label, other);
    let (precision, p_deg) = percent(tp, tp + fp);
    let (recall, r_deg) = percent(tp, tp + fn_);
    let (f1, f_deg) = if precision + recall == 0.0 {
        (0.0, true)
    } else {
        (2.0 * precision * recall / (precision + recall), false)
    };
    ClassMetrics {
        precision,
        recall,
        f1,
        gold_count: tp + fn_,
        degenerate: p_deg || r_deg || f_deg,
    }
}

/// Metrics over a set of scored records. Order-invariant; duplicate ids are
/// rejected.
pub fn evaluate_records(records: &[PredictionRecord]) -> Result<EvalReport> {
    if records.is_empty() {
        return Err(Error::InvalidInput("no predictions to evaluate".into()));
    }
    let mut seen: HashSet<&str> = HashSet::new();
    let mut counts = [[0u64; 2]; 2];
    for r in records {
        if !seen.insert(&r.pair_id) {
            return Err(Error::InvalidInput(format!(
                "duplicate pair_id {:?} in predictions",
                r.pair_id
            )));
        }
        counts[r.gold.index()][r.predicted.index()] += 1;
    }
    let confusion = ConfusionMatrix { counts };
    let support = class_metrics(&confusion, StanceLabel::Support);
    let oppose = class_metrics(&confusion, StanceLabel::Oppose);
    let (accuracy, _) = percent(confusion.correct(), confusion.total());
    Ok(EvalReport {
        macro_precision: (support.precision + oppose.precision) / 2.0,
        macro_recall: (support.recall + oppose.recall) / 2.0,
        macro_f1: (support.f1 + oppose.f1) / 2.0,
        accuracy,
        total: confusion.total(),
        support,
        oppose,
        confusion,
    })
}

/// Check that records cover `pairs` exactly (same id set, matching gold
/// labels), then evaluate. Offending ids are listed in the error.
pub fn evaluate_against(pairs: &[StancePair], records: &[PredictionRecord]) -> Result<EvalReport> {
    let pair_ids: HashSet<&str> = pairs.iter().map(|p| p.pair_id.as_str()).collect();
    let record_ids: HashSet<&str> = records.iter().map(|r| r.pair_id.as_str()).collect();
    let mut missing: Vec<String> = pair_ids
        .difference(&record_ids)
        .map(|s| s.to_string())
        .collect();
    let mut extra: Vec<String> = record_ids
        .difference(&pair_ids)
        .map(|s| s.to_string())
        .collect();
    if !missing.is_empty() || !extra.is_empty() {
        missing.sort();
        extra.sort();
        return Err(Error::Alignment { missing, extra });
    }
    let gold_by_id: std::collections::HashMap<&str, StanceLabel> =
        pairs.iter().map(|p| (p.pair_id.as_str(), p.label)).collect();
    for r in records {
        if gold_by_id.get(r.pair_id.as_str()) != Some(&r.gold) {
            return Err(Error::InvalidInput(format!(
                "pair {:?}: prediction file gold label {} disagrees with the dataset",
                r.pair_id, r.gold
            )));
        }
    }
    evaluate_records(records)
}
