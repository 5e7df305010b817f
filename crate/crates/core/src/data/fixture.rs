//! Deterministic synthetic corpora: a release-format corpus with exact
//! per-split label counts (for exercising ingestion end to end without the
//! real download) and a keyword-separable pair set for training sanity
//! checks.

use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha20Rng;
use serde_json::json;

use crate::data::{Split, StanceLabel, StancePair};
use crate::error::Result;
use crate::seeding;

/// Per-split label counts of the released corpus:
/// `[train, dev, test] × [supporting, opposing]`.
pub const RELEASED_COUNTS: [[u64; 2]; 3] = [[3603, 3404], [1051, 1045], [1471, 1302]];

const TOPICS: [&str; 12] = [
    "school uniforms",
    "congestion pricing",
    "open borders",
    "nuclear energy",
    "a four day work week",
    "mandatory voting",
    "ranked choice ballots",
    "universal basic income",
    "plastic bag bans",
    "daylight saving time",
    "homework in primary school",
    "term limits",
];

const CLAIM_VERBS: [&str; 6] = [
    "should be adopted",
    "should be abolished",
    "deserves more funding",
    "is overdue for reform",
    "works better than the alternative",
    "needs a national debate",
];

const SUPPORT_REASONS: [&str; 8] = [
    "it clearly improves daily life for everyone involved",
    "the benefits outweigh the costs by a wide margin",
    "every serious study points the same encouraging way",
    "communities that tried it report real gains",
    "it protects the people who need protection most",
    "the long term savings are impossible to ignore",
    "it rewards effort instead of punishing it",
    "fairness demands nothing less",
];

const OPPOSE_REASONS: [&str; 8] = [
    "it cannot work without trampling basic freedoms",
    "the hidden costs would crush ordinary families",
    "the evidence behind it is thin and cherry picked",
    "unlike its supporters claim it helps almost nobody",
    "it punishes the very people it promises to help",
    "the bureaucracy it creates would dwarf any benefit",
    "history shows this idea failing wherever tried",
    "it solves a problem that does not exist",
];

fn claim_text(rng: &mut ChaCha20Rng) -> String {
    let topic = TOPICS[rng.random_range(0..TOPICS.len())];
    let verb = CLAIM_VERBS[rng.random_range(0..CLAIM_VERBS.len())];
    format!("{topic} {verb}")
}

fn perspective_text(label: StanceLabel, rng: &mut ChaCha20Rng) -> String {
    match label {
        StanceLabel::Support => {
            let r = SUPPORT_REASONS[rng.random_range(0..SUPPORT_REASONS.len())];
            format!("yes because {r}")
        }
        StanceLabel::Oppose => {
            let r = OPPOSE_REASONS[rng.random_range(0..OPPOSE_REASONS.len())];
            format!("no because {r}")
        }
    }
}

/// Write a corpus in the released file layout whose ingestion yields exactly
/// `counts` pairs per split and label. Cluster sizes vary between 1 and 3
/// perspectives, fine-grained mild stances appear in the secondary label
/// field, and an occasional non-stance cluster exercises the skip path.
pub fn write_perspectrum_fixture(dir: &Path, counts: [[u64; 2]; 3], seed: u64) -> Result<()> {
    let mut rng = seeding::rng_for(seed, "corpus-fixture");
    let mut claims = Vec::new();
    let mut pool = Vec::new();
    let mut split_map = serde_json::Map::new();
    let mut next_cid: i64 = 100;
    let mut next_pid: i64 = 1000;

    let add_perspective = |pool: &mut Vec<serde_json::Value>,
                           next_pid: &mut i64,
                           text: String| {
        let pid = *next_pid;
        *next_pid += 1;
        pool.push(json!({"pId": pid, "text": text, "source": "fixture"}));
        pid
    };

    for (si, split) in Split::ALL.iter().enumerate() {
        let mut remaining = counts[si];
        while remaining[0] > 0 || remaining[1] > 0 {
            let cid = next_cid;
            next_cid += 1;
            let mut clusters = Vec::new();
            for (li, label) in StanceLabel::ALL.into_iter().enumerate() {
                if remaining[li] == 0 {
                    continue;
                }
                let take = (rng.random_range(1..=3) as u64).min(remaining[li]);
                remaining[li] -= take;
                let pids: Vec<i64> = (0..take)
                    .map(|_| {
                        add_perspective(&mut pool, &mut next_pid, perspective_text(label, &mut rng))
                    })
                    .collect();
                let plain = match label {
                    StanceLabel::Support => "SUPPORT",
                    StanceLabel::Oppose => "UNDERMINE",
                };
                let fine = if rng.random_range(0..3) == 0 {
                    format!("MILDLY_{plain}")
                } else {
                    plain.to_string()
                };
                clusters.push(json!({
                    "pids": pids,
                    "stance_label_3": plain,
                    "stance_label_5": fine,
                }));
            }
            if rng.random_range(0..40) == 0 {
                let pid = add_perspective(
                    &mut pool,
                    &mut next_pid,
                    "this statement wanders off the topic entirely".to_string(),
                );
                clusters.push(json!({
                    "pids": [pid],
                    "stance_label_3": "NOT-A-PERSPECTIVE",
                    "stance_label_5": "NOT-A-PERSPECTIVE",
                }));
            }
            claims.push(json!({
                "cId": cid,
                "text": claim_text(&mut rng),
                "perspectives": clusters,
            }));
            split_map.insert(cid.to_string(), json!(split.as_str()));
        }
    }

    std::fs::write(
        dir.join("perspectrum_with_answers_v1.0.json"),
        serde_json::to_string(&claims)?,
    )?;
    std::fs::write(
        dir.join("perspective_pool_v1.0.json"),
        serde_json::to_string(&pool)?,
    )?;
    std::fs::write(
        dir.join("dataset_split_v1.0.json"),
        serde_json::to_string(&serde_json::Value::Object(split_map))?,
    )?;
    Ok(())
}

const SEPARABLE_FILLERS: [&str; 6] = [
    "with this view",
    "with that point",
    "on the whole",
    "for many reasons",
    "in this case",
    "quite strongly",
];

/// Pairs whose label is perfectly determined by one keyword ("agree" vs
/// "disagree"), alternating labels, `n_train` then `n_dev` instances. A
/// model that cannot fit this set is broken.
pub fn separable_pairs(n_train: usize, n_dev: usize, seed: u64) -> Vec<StancePair> {
    let mut rng = seeding::rng_for(seed, "separable-pairs");
    (0..n_train + n_dev)
        .map(|i| {
            let split = if i < n_train { Split::Train } else { Split::Dev };
            let label = if i % 2 == 0 {
                StanceLabel::Support
            } else {
                StanceLabel::Oppose
            };
            let topic = TOPICS[rng.random_range(0..TOPICS.len())];
            let filler = SEPARABLE_FILLERS[rng.random_range(0..SEPARABLE_FILLERS.len())];
            let stance_word = match label {
                StanceLabel::Support => "agree",
                StanceLabel::Oppose => "disagree",
            };
            let perspective = format!("i {stance_word} {filler}");
            StancePair::new(format!("sep-{i}"), &format!("{topic} is a good idea"), &perspective, label, split)
                .expect("generated texts are non-empty")
        })
        .collect()
}
