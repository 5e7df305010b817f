//! Canonical line-delimited record format: one JSON object per line with
//! fields {pair_id, claim_text, perspective_text, label, split}.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::data::StancePair;
use crate::error::{Error, Result};

/// Write pairs as one JSON record per line.
pub fn write_canonical(pairs: &[StancePair], out: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(out)?);
    for p in pairs {
        serde_json::to_writer(&mut w, p)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Read pairs back, enforcing record invariants: parse failures carry the
/// 1-based line number, texts are re-validated, and duplicate pair_ids are
/// rejected.
pub fn read_canonical(path: &Path) -> Result<Vec<StancePair>> {
    if !path.is_file() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let reader = BufReader::new(File::open(path)?);
    let mut pairs = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let raw: StancePair = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: lineno,
            message: e.to_string(),
        })?;
        let pair = StancePair::new(raw.pair_id, &raw.claim_text, &raw.perspective_text, raw.label, raw.split)
            .map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: lineno,
                message: e.to_string(),
            })?;
        if !seen.insert(pair.pair_id.clone()) {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: lineno,
                message: format!("duplicate pair_id {:?}", pair.pair_id),
            });
        }
        pairs.push(pair);
    }
    Ok(pairs)
}
