use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::coordination::{aggregate, coord_all_markers, AggregateScheme, Thresholds};
use crate::corpus::{Corpus, Exchange, Outcome, SECONDS_PER_MONTH};
use crate::lexicon::Marker;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineOptions {
    pub role: String,
    pub outcome: Outcome,
    /// Buckets from `-window_months` to `window_months` inclusive.
    pub window_months: i64,
    pub min_population: usize,
    pub thresholds: Thresholds,
}

impl TimelineOptions {
    pub fn new(role: impl Into<String>) -> Self {
        TimelineOptions {
            role: role.into(),
            outcome: Outcome::Promoted,
            window_months: 6,
            min_population: 5,
            thresholds: Thresholds::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineBucket {
    /// 30-day offset from the event; bucket 0 starts at the event.
    pub bucket: i64,
    /// Mean Aggregated 1 coordination of the users as speakers.
    pub as_speaker: Option<f64>,
    pub speaker_population: usize,
    /// Mean Aggregated 1 coordination of everyone else towards the users.
    pub as_target: Option<f64>,
    pub target_population: usize,
    /// Centered 3-bucket moving averages over defined neighbours.
    pub as_speaker_smoothed3: Option<f64>,
    pub as_target_smoothed3: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineSeries {
    pub options: TimelineOptions,
    pub users: usize,
    /// Requested users without the event; they are left out.
    pub excluded_no_event: usize,
    /// Exchanges skipped for lack of a timestamp.
    pub missing_timestamp: usize,
    pub buckets: Vec<TimelineBucket>,
}

/// Month bucket of `ts` relative to `event_at`.
pub fn month_bucket(ts: i64, event_at: i64) -> i64 {
    (ts - event_at).div_euclid(SECONDS_PER_MONTH)
}

fn agg1_of(exchanges: &[Exchange<'_>], thresholds: Thresholds) -> Option<f64> {
    let values = coord_all_markers(exchanges, thresholds).map(|c| c.value);
    aggregate(&[values], AggregateScheme::AllDefined, &[None; Marker::COUNT])
        .ok()
        .and_then(|r| r.per_speaker[0])
}

fn smooth(values: &[Option<f64>]) -> Vec<Option<f64>> {
    (0..values.len())
        .map(|i| {
            let lo = i.saturating_sub(1);
            let hi = (i + 1).min(values.len() - 1);
            let window: Vec<f64> = values[lo..=hi].iter().flatten().copied().collect();
            (values[i].is_some() && !window.is_empty()).then(|| window.iter().sum::<f64>() / window.len() as f64)
        })
        .collect()
}

/// Coordination of each user (as speaker) and towards each user (as target)
/// per 30-day bucket around their status event.
pub fn timeline<'a>(
    corpus: &Corpus,
    exchanges: &[Exchange<'a>],
    users: impl IntoIterator<Item = &'a str>,
    options: &TimelineOptions,
) -> TimelineSeries {
    let mut events: BTreeMap<&str, i64> = BTreeMap::new();
    let mut excluded = 0;
    for u in users {
        match corpus.participant(u).and_then(|p| p.event(&options.role, options.outcome)) {
            Some(e) => {
                events.insert(u, e.at);
            }
            None => excluded += 1,
        }
    }

    type Cells<'a> = BTreeMap<(i64, &'a str), Vec<Exchange<'a>>>;
    let mut as_speaker: Cells<'a> = BTreeMap::new();
    let mut as_target: Cells<'a> = BTreeMap::new();
    let mut missing = 0;
    let w = options.window_months;
    for e in exchanges {
        let speaker_at = events.get_key_value(e.speaker());
        let target_at = events.get_key_value(e.target_speaker());
        if speaker_at.is_none() && target_at.is_none() {
            continue;
        }
        let Some(ts) = e.timestamp() else {
            missing += 1;
            continue;
        };
        if let Some((&user, &at)) = speaker_at {
            let b = month_bucket(ts, at);
            if (-w..=w).contains(&b) {
                as_speaker.entry((b, user)).or_default().push(*e);
            }
        }
        if let Some((&user, &at)) = target_at {
            let b = month_bucket(ts, at);
            if (-w..=w).contains(&b) {
                as_target.entry((b, user)).or_default().push(*e);
            }
        }
    }

    let summarize = |cells: &Cells<'a>| -> BTreeMap<i64, (Option<f64>, usize)> {
        let mut per_bucket: BTreeMap<i64, Vec<f64>> = BTreeMap::new();
        for ((b, _), ex) in cells {
            if let Some(v) = agg1_of(ex, options.thresholds) {
                per_bucket.entry(*b).or_default().push(v);
            }
        }
        (-w..=w)
            .map(|b| {
                let vals = per_bucket.get(&b).map(Vec::as_slice).unwrap_or_default();
                let mean = (!vals.is_empty() && vals.len() >= options.min_population)
                    .then(|| vals.iter().sum::<f64>() / vals.len() as f64);
                (b, (mean, vals.len()))
            })
            .collect()
    };
    let speaker_series = summarize(&as_speaker);
    let target_series = summarize(&as_target);
    let sp: Vec<Option<f64>> = speaker_series.values().map(|v| v.0).collect();
    let tg: Vec<Option<f64>> = target_series.values().map(|v| v.0).collect();
    let sp_s = smooth(&sp);
    let tg_s = smooth(&tg);

    let buckets = (-w..=w)
        .enumerate()
        .map(|(i, b)| TimelineBucket {
            bucket: b,
            as_speaker: sp[i],
            speaker_population: speaker_series[&b].1,
            as_target: tg[i],
            target_population: target_series[&b].1,
            as_speaker_smoothed3: sp_s[i],
            as_target_smoothed3: tg_s[i],
        })
        .collect();

    TimelineSeries {
        options: options.clone(),
        users: events.len(),
        excluded_no_event: excluded,
        missing_timestamp: missing,
        buckets,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::SECONDS_PER_DAY;

    #[test]
    fn bucketing_uses_thirty_day_months() {
        let at = 1_000_000;
        assert_eq!(month_bucket(at + 45 * SECONDS_PER_DAY, at), 1);
        assert_eq!(month_bucket(at, at), 0);
        assert_eq!(month_bucket(at + 29 * SECONDS_PER_DAY, at), 0);
        assert_eq!(month_bucket(at - 1, at), -1);
        assert_eq!(month_bucket(at - 31 * SECONDS_PER_DAY, at), -2);
    }

    #[test]
    fn smoothing_skips_undefined() {
        let s = smooth(&[Some(1.0), None, Some(3.0), Some(5.0)]);
        assert_eq!(s, vec![Some(1.0), None, Some(4.0), Some(4.0)]);
    }
}
