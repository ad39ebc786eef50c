use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::pairs::{PairInstance, Reply};
use crate::coordination::{aggregate, AggregateScheme, Thresholds};
use crate::error::{Error, Result};
use crate::lexicon::Marker;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Coordination,
    Stylistic,
    Bow,
}

impl FeatureKind {
    pub const ALL: [FeatureKind; 3] = [FeatureKind::Coordination, FeatureKind::Stylistic, FeatureKind::Bow];

    pub fn name(self) -> &'static str {
        match self {
            FeatureKind::Coordination => "coordination",
            FeatureKind::Stylistic => "stylistic",
            FeatureKind::Bow => "bow",
        }
    }

    pub fn from_name(name: &str) -> Option<FeatureKind> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }
}

pub const COORDINATION_DIM: usize = Marker::COUNT + 1;
pub const STYLISTIC_DIM: usize = 2 * Marker::COUNT + 2;
/// Vocabulary size of each bag-of-words block.
pub const BOW_BLOCK_SIZE: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub kind: FeatureKind,
    pub values: BTreeMap<u32, f64>,
    pub dimension: usize,
}

impl FeatureVector {
    pub fn get(&self, index: u32) -> f64 {
        self.values.get(&index).copied().unwrap_or(0.0)
    }

    pub fn to_sparse(&self) -> Vec<(u32, f64)> {
        self.values.iter().map(|(&i, &v)| (i, v)).collect()
    }
}

/// Per-block word lists, ranked by training frequency.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BowVocabulary {
    pub left: Vec<String>,
    pub right: Vec<String>,
    #[serde(skip)]
    left_index: HashMap<String, u32>,
    #[serde(skip)]
    right_index: HashMap<String, u32>,
}

fn top_words<'a>(blocks: impl Iterator<Item = &'a [Reply]>, size: usize) -> Vec<String> {
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for replies in blocks {
        for r in replies {
            for t in &r.tokens {
                *counts.entry(t.as_str()).or_default() += 1;
            }
        }
    }
    let mut ranked: Vec<(&str, u64)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked.into_iter().take(size).map(|(w, _)| w.to_string()).collect()
}

impl BowVocabulary {
    /// Top `size` words of each block over `training` pairs only.
    pub fn build<'a>(training: impl IntoIterator<Item = &'a PairInstance> + Clone, size: usize) -> BowVocabulary {
        let left = top_words(training.clone().into_iter().map(|p| p.replies_x.as_slice()), size);
        let right = top_words(training.into_iter().map(|p| p.replies_y.as_slice()), size);
        BowVocabulary::from_lists(left, right)
    }

    pub fn from_lists(left: Vec<String>, right: Vec<String>) -> BowVocabulary {
        let index = |ws: &[String]| ws.iter().enumerate().map(|(i, w)| (w.clone(), i as u32)).collect();
        BowVocabulary {
            left_index: index(&left),
            right_index: index(&right),
            left,
            right,
        }
    }

    pub fn dimension(&self) -> usize {
        self.left.len() + self.right.len()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.left_index.contains_key(word) || self.right_index.contains_key(word)
    }
}

fn coordination_values(p: &PairInstance, thresholds: Thresholds) -> Result<([f64; Marker::COUNT], [f64; Marker::COUNT])> {
    let undefined = || Error::UndefinedCoordination(p.x_id.clone(), p.y_id.clone());
    let cx = p.coordination_x(thresholds);
    let cy = p.coordination_y(thresholds);
    let mut vx = [0.0; Marker::COUNT];
    let mut vy = [0.0; Marker::COUNT];
    for m in Marker::ALL {
        vx[m.index()] = cx[m.index()].value.ok_or_else(undefined)?;
        vy[m.index()] = cy[m.index()].value.ok_or_else(undefined)?;
    }
    Ok((vx, vy))
}

fn agg1(values: &[f64; Marker::COUNT]) -> Option<f64> {
    aggregate(&[values.map(Some)], AggregateScheme::AllDefined, &[None; Marker::COUNT])
        .ok()
        .and_then(|r| r.per_speaker[0])
}

fn block_style(replies: &[Reply]) -> ([f64; Marker::COUNT], f64) {
    let total: usize = replies.iter().map(|r| r.tokens.len()).sum();
    let mut freq = [0.0; Marker::COUNT];
    if total > 0 {
        for m in Marker::ALL {
            let n: u32 = replies.iter().map(|r| r.marker_tokens[m.index()]).sum();
            freq[m.index()] = f64::from(n) / total as f64;
        }
    }
    let len = if replies.is_empty() {
        0.0
    } else {
        total as f64 / replies.len() as f64
    };
    (freq, len)
}

fn bow_block(replies: &[Reply], index: &HashMap<String, u32>, offset: u32, out: &mut BTreeMap<u32, f64>) {
    let mut counts: BTreeMap<u32, f64> = BTreeMap::new();
    for r in replies {
        for t in &r.tokens {
            if let Some(&i) = index.get(t) {
                *counts.entry(offset + i).or_default() += 1.0;
            }
        }
    }
    let norm = counts.values().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        out.extend(counts.into_iter().map(|(i, v)| (i, v / norm)));
    }
}

/// Feature vector of one pair. Bag-of-words needs a vocabulary built on
/// training data.
pub fn extract_features(
    p: &PairInstance,
    kind: FeatureKind,
    vocab: Option<&BowVocabulary>,
    thresholds: Thresholds,
) -> Result<FeatureVector> {
    let mut values = BTreeMap::new();
    let dimension = match kind {
        FeatureKind::Coordination => {
            let (vx, vy) = coordination_values(p, thresholds)?;
            for m in Marker::ALL {
                values.insert(m.index() as u32, f64::from(u8::from(vx[m.index()] > vy[m.index()])));
            }
            let bit = matches!((agg1(&vx), agg1(&vy)), (Some(a), Some(b)) if a > b);
            values.insert(Marker::COUNT as u32, f64::from(u8::from(bit)));
            COORDINATION_DIM
        }
        FeatureKind::Stylistic => {
            let (fx, lx) = block_style(&p.replies_x);
            let (fy, ly) = block_style(&p.replies_y);
            for m in Marker::ALL {
                values.insert(m.index() as u32, fx[m.index()]);
                values.insert((Marker::COUNT + m.index()) as u32, fy[m.index()]);
            }
            values.insert(2 * Marker::COUNT as u32, lx);
            values.insert(2 * Marker::COUNT as u32 + 1, ly);
            STYLISTIC_DIM
        }
        FeatureKind::Bow => {
            let vocab = vocab.ok_or_else(|| Error::InvalidDataset("bag-of-words features need a vocabulary".into()))?;
            bow_block(&p.replies_x, &vocab.left_index, 0, &mut values);
            bow_block(&p.replies_y, &vocab.right_index, vocab.left.len() as u32, &mut values);
            vocab.dimension()
        }
    };
    Ok(FeatureVector { kind, values, dimension })
}
