//! Marker coordination of a speaker towards a target set, group macro
//! averages, and the three cross-marker aggregates.
//!
//! For a set of exchanges (target utterance, reply), the coordination of the
//! replier on marker `m` is
//!
//! ```text
//! P(reply exhibits m | target exhibits m) - P(reply exhibits m)
//! ```
//!
//! with both probabilities estimated by plain counts over the set. The value
//! is undefined when no target utterance exhibits `m`. Group values are
//! unweighted means over speakers with a defined value.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{filter_exchanges, derive_exchanges, Corpus, Exchange, FilterSpec, Group};
use crate::error::{Error, Result};
use crate::exec::{self, Parallelism};
use crate::lexicon::{Lexicon, Marker};

/// Minimum evidence for a marker coordination value to be defined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Thresholds {
    pub min_exhibits: usize,
    pub min_exchanges: usize,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            min_exhibits: 1,
            min_exchanges: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarkerCounts {
    pub n_total: usize,
    pub n_target_exhibits: usize,
    pub n_both: usize,
    pub n_reply_exhibits: usize,
}

impl MarkerCounts {
    pub fn add(&mut self, target: bool, reply: bool) {
        self.n_total += 1;
        self.n_target_exhibits += usize::from(target);
        self.n_reply_exhibits += usize::from(reply);
        self.n_both += usize::from(target && reply);
    }
}

/// Counts for all eight markers in one pass.
pub fn count_markers<'e, 'a: 'e>(exchanges: impl IntoIterator<Item = &'e Exchange<'a>>) -> [MarkerCounts; Marker::COUNT] {
    let mut counts = [MarkerCounts::default(); Marker::COUNT];
    for e in exchanges {
        let t = e.target.exhibit_mask;
        let r = e.reply.exhibit_mask;
        for m in Marker::ALL {
            counts[m.index()].add(t.contains(m), r.contains(m));
        }
    }
    counts
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarkerCoordination {
    pub marker: Marker,
    pub value: Option<f64>,
    #[serde(flatten)]
    pub counts: MarkerCounts,
}

impl MarkerCoordination {
    pub fn from_counts(marker: Marker, counts: MarkerCounts, thresholds: Thresholds) -> Self {
        let defined = counts.n_target_exhibits >= thresholds.min_exhibits.max(1)
            && counts.n_total >= thresholds.min_exchanges.max(1);
        let value = defined.then(|| {
            counts.n_both as f64 / counts.n_target_exhibits as f64
                - counts.n_reply_exhibits as f64 / counts.n_total as f64
        });
        MarkerCoordination { marker, value, counts }
    }

    pub fn is_defined(&self) -> bool {
        self.value.is_some()
    }

    /// Share of exchanges whose target exhibits the marker.
    pub fn target_rate(&self) -> f64 {
        if self.counts.n_total == 0 {
            0.0
        } else {
            self.counts.n_target_exhibits as f64 / self.counts.n_total as f64
        }
    }
}

/// Coordination of the replier on `marker` over `exchanges`, which are
/// expected to share one reply speaker.
pub fn coord_marker(exchanges: &[Exchange<'_>], marker: Marker, thresholds: Thresholds) -> MarkerCoordination {
    let mut counts = MarkerCounts::default();
    for e in exchanges {
        counts.add(e.target.exhibit_mask.contains(marker), e.reply.exhibit_mask.contains(marker));
    }
    MarkerCoordination::from_counts(marker, counts, thresholds)
}

/// Per-speaker coordination on all eight markers.
pub fn coord_all_markers(exchanges: &[Exchange<'_>], thresholds: Thresholds) -> [MarkerCoordination; Marker::COUNT] {
    let counts = count_markers(exchanges);
    Marker::ALL.map(|m| MarkerCoordination::from_counts(m, counts[m.index()], thresholds))
}

fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Result of averaging one marker over a speaker group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupMarkerValue {
    pub mean: f64,
    /// Speakers with a defined value.
    pub population: usize,
    pub speakers: usize,
    pub per_speaker: Vec<(String, Option<f64>)>,
}

/// Unweighted mean over speakers of `speakers` of their coordination toward
/// `targets` on `marker`.
pub fn coord_group(
    exchanges: &[Exchange<'_>],
    speakers: &Group,
    targets: &Group,
    marker: Marker,
    thresholds: Thresholds,
) -> Result<GroupMarkerValue> {
    let by_speaker = split_by_speaker(exchanges, speakers, targets);
    let per_speaker: Vec<(String, Option<f64>)> = by_speaker
        .iter()
        .map(|(id, ex)| (id.to_string(), coord_marker(ex, marker, thresholds).value))
        .collect();
    let defined: Vec<f64> = per_speaker.iter().filter_map(|(_, v)| *v).collect();
    let mean = mean(defined.iter().copied())
        .ok_or_else(|| Error::EmptyGroup(format!("{} -> {} on {marker}", speakers.label, targets.label)))?;
    Ok(GroupMarkerValue {
        mean,
        population: defined.len(),
        speakers: per_speaker.len(),
        per_speaker,
    })
}

fn split_by_speaker<'e, 'a>(
    exchanges: &'e [Exchange<'a>],
    speakers: &Group,
    targets: &Group,
) -> BTreeMap<&'a str, Vec<Exchange<'a>>> {
    let mut by_speaker: BTreeMap<&'a str, Vec<Exchange<'a>>> = BTreeMap::new();
    for e in exchanges {
        if speakers.admits_speaker(e) && targets.admits_target(e) {
            by_speaker.entry(e.speaker()).or_default().push(*e);
        }
    }
    by_speaker
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AggregateScheme {
    /// Mean over all eight markers, only for speakers with every marker defined.
    AllDefined = 1,
    /// Undefined markers replaced by the group's marker mean.
    Smoothed = 2,
    /// Mean over the defined markers only.
    DefinedOnly = 3,
}

impl AggregateScheme {
    pub const ALL: [AggregateScheme; 3] = [
        AggregateScheme::AllDefined,
        AggregateScheme::Smoothed,
        AggregateScheme::DefinedOnly,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AggregateScheme::AllDefined => "aggregated_1",
            AggregateScheme::Smoothed => "aggregated_2",
            AggregateScheme::DefinedOnly => "aggregated_3",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateResult {
    pub scheme: AggregateScheme,
    pub per_speaker: Vec<Option<f64>>,
    pub group: Option<f64>,
    pub population: usize,
}

/// Aggregates per-speaker marker vectors under one scheme.
pub fn aggregate(
    profiles: &[[Option<f64>; Marker::COUNT]],
    scheme: AggregateScheme,
    group_means: &[Option<f64>; Marker::COUNT],
) -> Result<AggregateResult> {
    let mut per_speaker = Vec::with_capacity(profiles.len());
    for values in profiles {
        let defined = values.iter().filter(|v| v.is_some()).count();
        let agg = match scheme {
            AggregateScheme::AllDefined => {
                (defined == Marker::COUNT).then(|| values.iter().flatten().sum::<f64>() / Marker::COUNT as f64)
            }
            AggregateScheme::DefinedOnly => mean(values.iter().flatten().copied()),
            AggregateScheme::Smoothed => {
                if defined == 0 {
                    None
                } else {
                    let mut sum = 0.0;
                    for m in Marker::ALL {
                        sum += match values[m.index()] {
                            Some(v) => v,
                            None => group_means[m.index()].ok_or_else(|| Error::MissingGroupMean(m.name().into()))?,
                        };
                    }
                    Some(sum / Marker::COUNT as f64)
                }
            }
        };
        per_speaker.push(agg);
    }
    let included: Vec<f64> = per_speaker.iter().flatten().copied().collect();
    Ok(AggregateResult {
        scheme,
        group: mean(included.iter().copied()),
        population: included.len(),
        per_speaker,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeakerProfile {
    pub speaker_id: String,
    pub n_exchanges: usize,
    pub per_marker: [MarkerCoordination; Marker::COUNT],
    pub agg1: Option<f64>,
    pub agg2: Option<f64>,
    pub agg3: Option<f64>,
}

impl SpeakerProfile {
    pub fn marker_values(&self) -> [Option<f64>; Marker::COUNT] {
        self.per_marker.map(|c| c.value)
    }

    pub fn aggregate(&self, scheme: AggregateScheme) -> Option<f64> {
        match scheme {
            AggregateScheme::AllDefined => self.agg1,
            AggregateScheme::Smoothed => self.agg2,
            AggregateScheme::DefinedOnly => self.agg3,
        }
    }
}

/// A group-level statistic with its supporting population.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupValue {
    pub mean: Option<f64>,
    pub population: usize,
    /// Exchanges behind the speakers in the population.
    pub n_exchanges: usize,
}

/// Rows of a profile table, marker rows first then aggregates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Marker(Marker),
    Aggregate(AggregateScheme),
}

impl Metric {
    pub fn all() -> impl Iterator<Item = Metric> {
        Marker::ALL
            .into_iter()
            .map(Metric::Marker)
            .chain(AggregateScheme::ALL.into_iter().map(Metric::Aggregate))
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::Marker(m) => m.name(),
            Metric::Aggregate(a) => a.name(),
        }
    }

    pub fn of(self, speaker: &SpeakerProfile) -> Option<f64> {
        match self {
            Metric::Marker(m) => speaker.per_marker[m.index()].value,
            Metric::Aggregate(a) => speaker.aggregate(a),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoordinationConfig {
    pub thresholds: Thresholds,
    #[serde(skip)]
    pub parallelism: Parallelism,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupProfile {
    pub speaker_group: String,
    pub target_group: String,
    pub exchanges_description: String,
    pub n_exchanges: usize,
    pub markers: [GroupValue; Marker::COUNT],
    pub agg1: GroupValue,
    pub agg2: GroupValue,
    pub agg3: GroupValue,
    pub speakers: Vec<SpeakerProfile>,
}

impl GroupProfile {
    pub fn value(&self, metric: Metric) -> GroupValue {
        match metric {
            Metric::Marker(m) => self.markers[m.index()],
            Metric::Aggregate(AggregateScheme::AllDefined) => self.agg1,
            Metric::Aggregate(AggregateScheme::Smoothed) => self.agg2,
            Metric::Aggregate(AggregateScheme::DefinedOnly) => self.agg3,
        }
    }

    /// Per-speaker values with the metric defined, in speaker order.
    pub fn samples(&self, metric: Metric) -> Vec<f64> {
        self.speakers.iter().filter_map(|s| metric.of(s)).collect()
    }
}

/// Full profile of `speakers` towards `targets` over already filtered exchanges.
pub fn profile_from_exchanges(
    exchanges: &[Exchange<'_>],
    description: &str,
    speakers: &Group,
    targets: &Group,
    config: CoordinationConfig,
) -> Result<GroupProfile> {
    let by_speaker: Vec<(&str, Vec<Exchange<'_>>)> = split_by_speaker(exchanges, speakers, targets).into_iter().collect();
    let context = || format!("{} -> {} ({description})", speakers.label, targets.label);
    if by_speaker.is_empty() {
        return Err(Error::EmptyGroup(context()));
    }

    let per_marker: Vec<[MarkerCoordination; Marker::COUNT]> = exec::map(config.parallelism, &by_speaker, |(_, ex)| {
        coord_all_markers(ex, config.thresholds)
    });

    let mut markers = [GroupValue {
        mean: None,
        population: 0,
        n_exchanges: 0,
    }; Marker::COUNT];
    for m in Marker::ALL {
        let vals: Vec<(f64, usize)> = per_marker
            .iter()
            .filter_map(|pm| pm[m.index()].value.map(|v| (v, pm[m.index()].counts.n_total)))
            .collect();
        markers[m.index()] = GroupValue {
            mean: mean(vals.iter().map(|(v, _)| *v)),
            population: vals.len(),
            n_exchanges: vals.iter().map(|(_, n)| n).sum(),
        };
    }
    if markers.iter().all(|g| g.mean.is_none()) {
        return Err(Error::EmptyGroup(context()));
    }

    let vectors: Vec<[Option<f64>; Marker::COUNT]> = per_marker.iter().map(|pm| pm.map(|c| c.value)).collect();
    let group_means = markers.map(|g| g.mean);
    let agg1 = aggregate(&vectors, AggregateScheme::AllDefined, &group_means)?;
    let agg3 = aggregate(&vectors, AggregateScheme::DefinedOnly, &group_means)?;
    // Smoothing is impossible when some marker has no defined speaker at all.
    let agg2 = aggregate(&vectors, AggregateScheme::Smoothed, &group_means).ok();

    let speakers_out: Vec<SpeakerProfile> = by_speaker
        .iter()
        .zip(&per_marker)
        .enumerate()
        .map(|(i, ((id, ex), pm))| SpeakerProfile {
            speaker_id: id.to_string(),
            n_exchanges: ex.len(),
            per_marker: *pm,
            agg1: agg1.per_speaker[i],
            agg2: agg2.as_ref().and_then(|a| a.per_speaker[i]),
            agg3: agg3.per_speaker[i],
        })
        .collect();

    let summarize = |pick: fn(&SpeakerProfile) -> Option<f64>| {
        let vals: Vec<(f64, usize)> = speakers_out
            .iter()
            .filter_map(|s| pick(s).map(|v| (v, s.n_exchanges)))
            .collect();
        GroupValue {
            mean: mean(vals.iter().map(|(v, _)| *v)),
            population: vals.len(),
            n_exchanges: vals.iter().map(|(_, n)| n).sum(),
        }
    };

    Ok(GroupProfile {
        speaker_group: speakers.label.clone(),
        target_group: targets.label.clone(),
        exchanges_description: description.to_string(),
        n_exchanges: by_speaker.iter().map(|(_, e)| e.len()).sum(),
        markers,
        agg1: summarize(|s| s.agg1),
        agg2: summarize(|s| s.agg2),
        agg3: summarize(|s| s.agg3),
        speakers: speakers_out,
    })
}

/// Derives, filters, and profiles in one step.
pub fn coordination_profile(
    corpus: &Corpus,
    lexicon: &Lexicon,
    speakers: &Group,
    targets: &Group,
    filters: &FilterSpec,
    config: CoordinationConfig,
) -> Result<GroupProfile> {
    let all = derive_exchanges(corpus);
    let filtered = filter_exchanges(&all, filters, corpus, lexicon);
    profile_from_exchanges(&filtered.exchanges, &filtered.description, speakers, targets, config)
}
