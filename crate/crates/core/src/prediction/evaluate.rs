use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::{extract_features, BowVocabulary, FeatureKind, BOW_BLOCK_SIZE, COORDINATION_DIM, STYLISTIC_DIM};
use super::pairs::PairInstance;
use super::svm::{train, SparseRow, SvmParams};
use crate::coordination::Thresholds;
use crate::error::{Error, Result};
use crate::exec::{self, Parallelism};
use crate::stats::special::binomial_sf;
use crate::stats::stars;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "protocol", rename_all = "snake_case")]
pub enum Protocol {
    InDomainCv { k: usize, seed: u64 },
    CrossDomain { train: String, test: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub svm: SvmParams,
    pub thresholds: Thresholds,
    pub vocab_size: usize,
    #[serde(skip)]
    pub parallelism: Parallelism,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            svm: SvmParams::default(),
            thresholds: Thresholds::default(),
            vocab_size: BOW_BLOCK_SIZE,
            parallelism: Parallelism::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldDetail {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub correct: usize,
    pub accuracy: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub protocol: Protocol,
    pub kind: FeatureKind,
    /// Mean fold accuracy (a single fold for cross-domain runs).
    pub accuracy: f64,
    pub n: usize,
    pub correct: usize,
    /// One-sided exact binomial test of `correct` against chance (0.5).
    pub p_value: f64,
    pub stars: u8,
    pub folds: Vec<FoldDetail>,
}

/// Fold index per instance: each label class is shuffled and dealt round-robin.
pub fn stratified_folds(labels: &[bool], k: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold = vec![0; labels.len()];
    let mut next = 0;
    for class in [true, false] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        for i in idx {
            fold[i] = next % k;
            next += 1;
        }
    }
    fold
}

fn featurize(
    pairs: &[&PairInstance],
    kind: FeatureKind,
    vocab: Option<&BowVocabulary>,
    options: &EvalOptions,
) -> Result<(Vec<SparseRow>, usize)> {
    let vectors = exec::map(options.parallelism, pairs, |p| extract_features(p, kind, vocab, options.thresholds));
    let mut rows = Vec::with_capacity(vectors.len());
    for v in vectors {
        rows.push(v?.to_sparse());
    }
    let dim = match kind {
        FeatureKind::Coordination => COORDINATION_DIM,
        FeatureKind::Stylistic => STYLISTIC_DIM,
        FeatureKind::Bow => vocab.map_or(0, BowVocabulary::dimension),
    };
    Ok((rows, dim))
}

/// Trains on `train_set` and counts correct predictions on `test_set`.
pub fn fit_and_score(
    train_set: &[&PairInstance],
    test_set: &[&PairInstance],
    kind: FeatureKind,
    options: &EvalOptions,
    seed: u64,
) -> Result<FoldDetail> {
    let vocab =
        (kind == FeatureKind::Bow).then(|| BowVocabulary::build(train_set.iter().copied(), options.vocab_size));
    let (train_rows, dim) = featurize(train_set, kind, vocab.as_ref(), options)?;
    let labels: Vec<bool> = train_set.iter().map(|p| p.label).collect();
    let model = train(&train_rows, &labels, dim, SvmParams { seed, ..options.svm })?;
    let (test_rows, _) = featurize(test_set, kind, vocab.as_ref(), options)?;
    let correct = test_rows
        .iter()
        .zip(test_set)
        .filter(|(r, p)| model.predict(r) == p.label)
        .count();
    Ok(FoldDetail {
        fold: 0,
        n_train: train_set.len(),
        n_test: test_set.len(),
        correct,
        accuracy: if test_set.is_empty() { 0.0 } else { correct as f64 / test_set.len() as f64 },
        converged: model.converged,
    })
}

fn fold_seed(seed: u64, fold: usize) -> u64 {
    seed ^ (fold as u64 + 1).wrapping_mul(0xD1B5_4A32_D192_ED03)
}

fn summarize(protocol: Protocol, kind: FeatureKind, folds: Vec<FoldDetail>) -> Evaluation {
    let n: usize = folds.iter().map(|f| f.n_test).sum();
    let correct: usize = folds.iter().map(|f| f.correct).sum();
    let accuracy = folds.iter().map(|f| f.accuracy).sum::<f64>() / folds.len() as f64;
    let p_value = binomial_sf(correct as u64, n as u64, 0.5);
    Evaluation {
        protocol,
        kind,
        accuracy,
        n,
        correct,
        p_value,
        stars: stars(p_value),
        folds,
    }
}

/// Stratified k-fold cross-validation within one dataset.
pub fn in_domain_cv(pairs: &[PairInstance], kind: FeatureKind, k: usize, seed: u64, options: &EvalOptions) -> Result<Evaluation> {
    if k < 2 {
        return Err(Error::InvalidDataset(format!("cross-validation needs k >= 2, got {k}")));
    }
    if pairs.len() < k {
        return Err(Error::InvalidDataset(format!("{} instances cannot fill {k} folds", pairs.len())));
    }
    let labels: Vec<bool> = pairs.iter().map(|p| p.label).collect();
    let assignment = stratified_folds(&labels, k, seed);
    // Folds run concurrently; each trains with its own derived seed.
    let inner = EvalOptions {
        parallelism: Parallelism::Sequential,
        ..*options
    };
    let results = exec::map_range(options.parallelism, k, |f| {
        let train_set: Vec<&PairInstance> = pairs.iter().zip(&assignment).filter(|(_, &a)| a != f).map(|(p, _)| p).collect();
        let test_set: Vec<&PairInstance> = pairs.iter().zip(&assignment).filter(|(_, &a)| a == f).map(|(p, _)| p).collect();
        fit_and_score(&train_set, &test_set, kind, &inner, fold_seed(seed, f)).map(|d| FoldDetail { fold: f, ..d })
    });
    let folds = results.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(summarize(Protocol::InDomainCv { k, seed }, kind, folds))
}

/// Fits on all of `train_pairs` and tests on all of `test_pairs`.
pub fn cross_domain(
    train_pairs: &[PairInstance],
    test_pairs: &[PairInstance],
    kind: FeatureKind,
    seed: u64,
    options: &EvalOptions,
) -> Result<Evaluation> {
    let train_set: Vec<&PairInstance> = train_pairs.iter().collect();
    let test_set: Vec<&PairInstance> = test_pairs.iter().collect();
    let tag = |ps: &[PairInstance]| ps.first().map(|p| p.domain.clone()).unwrap_or_default();
    let detail = fit_and_score(&train_set, &test_set, kind, options, fold_seed(seed, 0))?;
    Ok(summarize(
        Protocol::CrossDomain {
            train: tag(train_pairs),
            test: tag(test_pairs),
        },
        kind,
        vec![detail],
    ))
}

/// Pairs of one domain: all pairs, and those usable for coordination features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainData {
    pub tag: String,
    pub pairs: Vec<PairInstance>,
    pub coordination_pairs: Vec<PairInstance>,
}

impl DomainData {
    pub fn for_kind(&self, kind: FeatureKind) -> &[PairInstance] {
        match kind {
            FeatureKind::Coordination => &self.coordination_pairs,
            _ => &self.pairs,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Ok,
    Absent,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub train: String,
    /// Absent test domain marks a cross-domain cell with nothing to test on.
    pub test: Option<String>,
    pub kind: FeatureKind,
    pub status: CellStatus,
    pub accuracy: Option<f64>,
    pub n: usize,
    pub p_value: Option<f64>,
    pub stars: u8,
    pub error: Option<String>,
    pub evaluation: Option<Evaluation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionGrid {
    pub domains: Vec<String>,
    pub k: usize,
    pub seed: u64,
    pub options: EvalOptions,
    pub significance_test: String,
    pub cells: Vec<GridCell>,
}

impl PredictionGrid {
    pub fn cell(&self, train: &str, test: &str, kind: FeatureKind) -> Option<&GridCell> {
        self.cells
            .iter()
            .find(|c| c.train == train && c.test.as_deref() == Some(test) && c.kind == kind)
    }
}

fn cell_from(train: &str, test: Option<&str>, kind: FeatureKind, result: Result<Evaluation>) -> GridCell {
    let base = GridCell {
        train: train.to_string(),
        test: test.map(str::to_string),
        kind,
        status: CellStatus::Ok,
        accuracy: None,
        n: 0,
        p_value: None,
        stars: 0,
        error: None,
        evaluation: None,
    };
    match result {
        Ok(e) => GridCell {
            accuracy: Some(e.accuracy),
            n: e.n,
            p_value: Some(e.p_value),
            stars: e.stars,
            evaluation: Some(e),
            ..base
        },
        Err(err) => GridCell {
            status: CellStatus::Failed,
            error: Some(format!("{}: {err}", err.kind())),
            ..base
        },
    }
}

/// Train-domain by test-domain by feature-kind accuracy grid. Diagonal cells
/// are k-fold cross-validation; off-diagonal cells are cross-domain transfer.
pub fn prediction_grid(
    domains: &[DomainData],
    kinds: &[FeatureKind],
    k: usize,
    seed: u64,
    options: &EvalOptions,
) -> PredictionGrid {
    let mut cells = Vec::new();
    for &kind in kinds {
        for train_d in domains {
            for test_d in domains {
                let result = if train_d.tag == test_d.tag {
                    in_domain_cv(train_d.for_kind(kind), kind, k, seed, options)
                } else {
                    cross_domain(train_d.for_kind(kind), test_d.for_kind(kind), kind, seed, options)
                };
                cells.push(cell_from(&train_d.tag, Some(&test_d.tag), kind, result));
            }
            if domains.len() == 1 {
                cells.push(GridCell {
                    status: CellStatus::Absent,
                    ..cell_from(&train_d.tag, None, kind, Err(Error::InvalidDataset("no second domain".into())))
                });
            }
        }
    }
    PredictionGrid {
        domains: domains.iter().map(|d| d.tag.clone()).collect(),
        k,
        seed,
        options: *options,
        significance_test: "exact one-sided binomial test against 0.5".into(),
        cells,
    }
}
