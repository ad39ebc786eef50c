use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::features::{extract_features, BowVocabulary, FeatureKind};
use super::pairs::PairInstance;
use crate::coordination::Thresholds;
use crate::error::{Error, Result};

/// One exported instance: pair ids, label and sparse features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub x_id: String,
    pub y_id: String,
    pub domain: String,
    pub label: bool,
    pub kind: FeatureKind,
    pub dimension: usize,
    /// Feature index (as a string key) to value.
    pub features: BTreeMap<u32, f64>,
}

/// Writes one JSON line per pair.
pub fn export_dataset<W: Write>(
    out: &mut W,
    pairs: &[PairInstance],
    kind: FeatureKind,
    vocab: Option<&BowVocabulary>,
    thresholds: Thresholds,
) -> Result<usize> {
    for p in pairs {
        let f = extract_features(p, kind, vocab, thresholds)?;
        let rec = DatasetRecord {
            x_id: p.x_id.clone(),
            y_id: p.y_id.clone(),
            domain: p.domain.clone(),
            label: p.label,
            kind,
            dimension: f.dimension,
            features: f.values,
        };
        serde_json::to_writer(&mut *out, &rec)?;
        out.write_all(b"\n").map_err(|e| Error::io("<dataset>", e))?;
    }
    Ok(pairs.len())
}

pub fn import_dataset<R: BufRead>(input: R) -> Result<Vec<DatasetRecord>> {
    let mut records = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<dataset>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: DatasetRecord = serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
            source_name: "dataset".into(),
            line: i + 1,
            message: e.to_string(),
        })?;
        if rec.features.keys().any(|&k| k as usize >= rec.dimension) {
            return Err(Error::MalformedRecord {
                source_name: "dataset".into(),
                line: i + 1,
                message: "feature index beyond dimension".into(),
            });
        }
        records.push(rec);
    }
    Ok(records)
}
