//! Ingestion of the released Perspectrum corpus layout: a claims file with
//! per-claim perspective clusters, a perspective text pool, and a split
//! assignment file.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{StanceLabel, StancePair};
use crate::error::{Error, Result};

const CLAIMS_FILE: &str = "perspectrum_with_answers_v1.0.json";
const POOL_FILE: &str = "perspective_pool_v1.0.json";
const SPLIT_FILE: &str = "dataset_split_v1.0.json";

/// How raw stance annotations collapse to the binary scheme.
///
/// The released corpus annotates each perspective cluster with several
/// stance fields of different granularity; `label_field` picks which one to
/// read and `label_map` folds its values to SUPPORT/OPPOSE. Raw values
/// absent from the map are skipped (and counted in the log), which is how
/// non-stance clusters are filtered out.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestConfig {
    pub label_field: String,
    pub label_map: BTreeMap<String, StanceLabel>,
}

impl Default for IngestConfig {
    fn default() -> Self {
        let mut label_map = BTreeMap::new();
        label_map.insert("SUPPORT".to_string(), StanceLabel::Support);
        label_map.insert("MILDLY_SUPPORT".to_string(), StanceLabel::Support);
        label_map.insert("UNDERMINE".to_string(), StanceLabel::Oppose);
        label_map.insert("MILDLY_UNDERMINE".to_string(), StanceLabel::Oppose);
        IngestConfig {
            label_field: "stance_label_3".to_string(),
            label_map,
        }
    }
}

#[derive(Deserialize)]
struct RawClaim {
    #[serde(rename = "cId")]
    claim_id: i64,
    text: String,
    perspectives: Vec<RawCluster>,
}

#[derive(Deserialize)]
struct RawCluster {
    pids: Vec<i64>,
    #[serde(flatten)]
    fields: serde_json::Map<String, serde_json::Value>,
}

#[derive(Deserialize)]
struct RawPerspective {
    #[serde(rename = "pId")]
    perspective_id: i64,
    text: String,
}

/// Ingest with the default stance collapse (see [`IngestConfig`]).
pub fn ingest_perspectrum(raw_dataset_dir: &Path) -> Result<Vec<StancePair>> {
    ingest_perspectrum_with(raw_dataset_dir, &IngestConfig::default())
}

/// Ingest the released corpus into canonical pairs: one [`StancePair`] per
/// (claim, perspective, stance) triple, pair_id `"{claimId}-{perspectiveId}"`,
/// split taken verbatim from the split file, claims and clusters processed
/// in file order.
pub fn ingest_perspectrum_with(
    raw_dataset_dir: &Path,
    config: &IngestConfig,
) -> Result<Vec<StancePair>> {
    let claims_path = locate(raw_dataset_dir, CLAIMS_FILE)?;
    let pool_path = locate(raw_dataset_dir, POOL_FILE)?;
    let split_path = locate(raw_dataset_dir, SPLIT_FILE)?;

    let claims: Vec<RawClaim> = parse_json_file(&claims_path)?;
    let pool_raw: Vec<RawPerspective> = parse_json_file(&pool_path)?;
    let split_raw: HashMap<String, String> = parse_json_file(&split_path)?;

    let pool: HashMap<i64, String> = pool_raw
        .into_iter()
        .map(|p| (p.perspective_id, p.text))
        .collect();
    let mut splits = HashMap::new();
    for (cid, name) in split_raw {
        let split = name.parse().map_err(|_| Error::Parse {
            path: split_path.clone(),
            line: 0,
            message: format!("claim {cid}: unknown split {name:?}"),
        })?;
        let cid: i64 = cid.parse().map_err(|_| Error::Parse {
            path: split_path.clone(),
            line: 0,
            message: format!("non-numeric claim id {cid:?}"),
        })?;
        splits.insert(cid, split);
    }

    let mut pairs = Vec::new();
    let mut seen_ids = HashSet::new();
    let mut missing_pids = Vec::new();
    let mut skipped_labels = 0_u64;
    let mut clusters_with_field = 0_u64;
    let mut clusters_total = 0_u64;

    for claim in &claims {
        let Some(&split) = splits.get(&claim.claim_id) else {
            log::warn!("claim {} has no split assignment; skipped", claim.claim_id);
            continue;
        };
        for cluster in &claim.perspectives {
            clusters_total += 1;
            let Some(raw_label) = cluster.fields.get(&config.label_field).and_then(|v| v.as_str())
            else {
                continue;
            };
            clusters_with_field += 1;
            let Some(&label) = config.label_map.get(raw_label) else {
                skipped_labels += 1;
                log::debug!(
                    "claim {}: stance {:?} not in label map; cluster skipped",
                    claim.claim_id,
                    raw_label
                );
                continue;
            };
            for &pid in &cluster.pids {
                let Some(text) = pool.get(&pid) else {
                    missing_pids.push(pid);
                    continue;
                };
                let pair_id = format!("{}-{}", claim.claim_id, pid);
                if !seen_ids.insert(pair_id.clone()) {
                    return Err(Error::InvalidInput(format!(
                        "perspective {pid} listed twice under claim {}",
                        claim.claim_id
                    )));
                }
                pairs.push(StancePair::new(pair_id, &claim.text, text, label, split)?);
            }
        }
    }

    if !missing_pids.is_empty() {
        missing_pids.sort_unstable();
        missing_pids.dedup();
        return Err(Error::MissingPerspectives { ids: missing_pids });
    }
    if clusters_total > 0 && clusters_with_field == 0 {
        return Err(Error::InvalidInput(format!(
            "no cluster carries the label field {:?}; check ingest.label_field",
            config.label_field
        )));
    }
    if skipped_labels > 0 {
        log::info!("{skipped_labels} clusters skipped (stance not in label map)");
    }
    log::info!("ingested {} pairs from {}", pairs.len(), raw_dataset_dir.display());
    Ok(pairs)
}

/// Find a release file: the exact name, or (fallback) any file sharing its
/// prefix up to the version suffix, newest version name last.
fn locate(dir: &Path, exact: &str) -> Result<PathBuf> {
    let direct = dir.join(exact);
    if direct.is_file() {
        return Ok(direct);
    }
    let prefix = exact.split("_v").next().unwrap_or(exact);
    let mut candidates: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|_| Error::MissingFile(direct.clone()))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| {
            p.is_file()
                && p.file_name()
                    .and_then(|n| n.to_str())
                    .is_some_and(|n| n.starts_with(prefix) && n.ends_with(".json"))
        })
        .collect();
    candidates.sort();
    candidates.pop().ok_or(Error::MissingFile(direct))
}

fn parse_json_file<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        message: e.to_string(),
    })
}
