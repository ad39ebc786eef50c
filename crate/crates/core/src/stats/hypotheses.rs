use serde::{Deserialize, Serialize};

use super::compare::{compare_groups, CompareOptions, ComparisonReport};
use super::ttest::{Direction, TestResult};
use crate::coordination::{profile_from_exchanges, AggregateScheme, CoordinationConfig, Metric};
use crate::corpus::{derive_exchanges, filter_exchanges, Corpus, FilterSpec, Group};
use crate::error::{Error, Result};
use crate::lexicon::Lexicon;

pub const ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hypothesis {
    /// People coordinate more towards high-powered targets: C(U, high) > C(U, low).
    PTarget,
    /// High-powered speakers coordinate less: C(high, U) < C(low, U).
    PSpeaker,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Supported,
    Contradicted,
    Inconclusive,
}

/// Supported when the observed direction matches and the one-sided p in that
/// direction is below `alpha`; contradicted when the opposite one-sided p is.
pub fn verdict(test: Option<&TestResult>, expected: Direction, alpha: f64) -> Verdict {
    let Some(t) = test else { return Verdict::Inconclusive };
    let observed = if t.t_stat > 0.0 {
        Direction::Greater
    } else if t.t_stat < 0.0 {
        Direction::Less
    } else {
        return Verdict::Inconclusive;
    };
    let p = match t.tails {
        super::Tails::One => t.p_for(observed),
        super::Tails::Two => t.p_two_tailed,
    };
    match (observed == expected, p < alpha) {
        (true, true) => Verdict::Supported,
        (false, true) => Verdict::Contradicted,
        _ => Verdict::Inconclusive,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryVerdict {
    pub metric: Metric,
    pub verdict: Verdict,
    pub supported: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisResult {
    pub hypothesis: Hypothesis,
    pub high_group: String,
    pub low_group: String,
    pub comparison: ComparisonReport,
    pub entries: Vec<EntryVerdict>,
    /// Verdict on the primary metric.
    pub verdict: Verdict,
    pub primary_metric: Metric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub universe: String,
    pub filters: FilterSpec,
    pub p_target: HypothesisResult,
    pub p_speaker: HypothesisResult,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HypothesisOptions {
    pub compare: CompareOptions,
    pub coordination: CoordinationConfig,
    pub primary_metric: Metric,
    pub alpha: f64,
}

impl Default for HypothesisOptions {
    fn default() -> Self {
        HypothesisOptions {
            compare: CompareOptions::default(),
            coordination: CoordinationConfig::default(),
            primary_metric: Metric::Aggregate(AggregateScheme::AllDefined),
            alpha: ALPHA,
        }
    }
}

fn judge(
    hypothesis: Hypothesis,
    high: &Group,
    low: &Group,
    comparison: ComparisonReport,
    expected: Direction,
    options: &HypothesisOptions,
) -> HypothesisResult {
    let entries: Vec<EntryVerdict> = comparison
        .entries
        .iter()
        .map(|e| {
            let v = verdict(e.test.as_ref(), expected, options.alpha);
            EntryVerdict {
                metric: e.metric,
                verdict: v,
                supported: v == Verdict::Supported,
            }
        })
        .collect();
    let overall = entries
        .iter()
        .find(|e| e.metric == options.primary_metric)
        .map_or(Verdict::Inconclusive, |e| e.verdict);
    HypothesisResult {
        hypothesis,
        high_group: high.label.clone(),
        low_group: low.label.clone(),
        comparison,
        entries,
        verdict: overall,
        primary_metric: options.primary_metric,
    }
}

/// Builds the four profiles (U towards high, U towards low, high towards U,
/// low towards U) and tests both hypotheses.
pub fn evaluate_hypotheses(
    corpus: &Corpus,
    lexicon: &Lexicon,
    high: &Group,
    low: &Group,
    universe: &Group,
    filters: &FilterSpec,
    options: &HypothesisOptions,
) -> Result<HypothesisReport> {
    if !high.members.is_disjoint(&low.members) && high.membership == low.membership {
        return Err(Error::InsufficientMetadata(format!(
            "groups `{}` and `{}` overlap",
            high.label, low.label
        )));
    }
    let all = derive_exchanges(corpus);
    let filtered = filter_exchanges(&all, filters, corpus, lexicon);
    let ex = &filtered.exchanges;
    let desc = &filtered.description;
    let cfg = options.coordination;

    let to_high = profile_from_exchanges(ex, desc, universe, high, cfg)?;
    let to_low = profile_from_exchanges(ex, desc, universe, low, cfg)?;
    let from_high = profile_from_exchanges(ex, desc, high, universe, cfg)?;
    let from_low = profile_from_exchanges(ex, desc, low, universe, cfg)?;

    let p_target = judge(
        Hypothesis::PTarget,
        high,
        low,
        compare_groups(&to_high, &to_low, Direction::Greater, options.compare),
        Direction::Greater,
        options,
    );
    let p_speaker = judge(
        Hypothesis::PSpeaker,
        high,
        low,
        compare_groups(&from_high, &from_low, Direction::Less, options.compare),
        Direction::Less,
        options,
    );
    Ok(HypothesisReport {
        universe: universe.label.clone(),
        filters: filters.clone(),
        p_target,
        p_speaker,
    })
}
