use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{Corpus, Outcome, Utterance, SECONDS_PER_DAY};
use crate::lexicon::{Lexicon, Marker};

/// An utterance and its immediate reply by a different person.
#[derive(Debug, Clone, Copy)]
pub struct Exchange<'a> {
    pub target: &'a Utterance,
    pub reply: &'a Utterance,
}

impl<'a> Exchange<'a> {
    pub fn speaker(&self) -> &'a str {
        &self.reply.speaker_id
    }

    pub fn target_speaker(&self) -> &'a str {
        &self.target.speaker_id
    }

    /// Time of the reply, falling back to the target's time.
    pub fn timestamp(&self) -> Option<i64> {
        self.reply.timestamp.or(self.target.timestamp)
    }

    pub fn context(&self) -> &'a str {
        self.reply.context()
    }
}

#[derive(Debug, Clone, Default)]
pub struct ExchangeSet<'a> {
    pub exchanges: Vec<Exchange<'a>>,
    pub description: String,
}

impl<'a> ExchangeSet<'a> {
    pub fn len(&self) -> usize {
        self.exchanges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exchanges.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Exchange<'a>> {
        self.exchanges.iter()
    }
}

/// One exchange per reply in the corpus, in corpus order.
pub fn derive_exchanges(corpus: &Corpus) -> ExchangeSet<'_> {
    derive_exchanges_where(corpus, |_| true, |_| true)
}

/// Exchanges whose reply speaker passes `speaker` and whose target speaker
/// passes `target`.
pub fn derive_exchanges_where<'a>(
    corpus: &'a Corpus,
    speaker: impl Fn(&str) -> bool,
    target: impl Fn(&str) -> bool,
) -> ExchangeSet<'a> {
    let exchanges = corpus
        .utterances()
        .iter()
        .filter_map(|reply| {
            let parent = corpus.utterance(reply.reply_to.as_deref()?)?;
            (speaker(&reply.speaker_id) && target(&parent.speaker_id)).then_some(Exchange {
                target: parent,
                reply,
            })
        })
        .collect();
    ExchangeSet {
        exchanges,
        description: "all replies".into(),
    }
}

/// True iff some `n`-gram of the reply also occurs in the target and
/// contains at least one lexeme of `marker`.
pub fn has_ngram_repeat(exchange: &Exchange<'_>, n: usize, marker: Marker, lexicon: &Lexicon) -> bool {
    assert!(n >= 2, "n-gram repeat check needs n >= 2");
    let reply = &exchange.reply.tokens.tokens;
    let target = &exchange.target.tokens.tokens;
    if reply.len() < n || target.len() < n {
        return false;
    }
    let target_grams: HashSet<&[String]> = target.windows(n).collect();
    reply.windows(n).any(|gram| {
        target_grams.contains(gram) && gram.iter().any(|t| lexicon.token_mask(t).contains(marker))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowSide {
    Before,
    After,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeAnchor {
    /// The event belongs to the person replying.
    #[default]
    Speaker,
    /// The event belongs to the person replied to.
    Target,
}

fn default_outcome() -> Outcome {
    Outcome::Promoted
}

/// Keeps exchanges before, or after a buffer following, a participant's status event.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub role: String,
    pub side: WindowSide,
    #[serde(default)]
    pub buffer_days: u32,
    #[serde(default)]
    pub anchor: TimeAnchor,
    #[serde(default = "default_outcome")]
    pub outcome: Outcome,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NgramRepeatFilter {
    pub n: usize,
    pub category: Marker,
}

/// Conjunction of exchange filters. Absent fields do not filter.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterSpec {
    /// Keep exchanges whose token lengths differ by fewer than this many tokens.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_len_diff: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_window: Option<TimeWindow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exclude_ngram_repeats: Option<NgramRepeatFilter>,
}

impl FilterSpec {
    pub fn is_empty(&self) -> bool {
        self.max_len_diff.is_none() && self.time_window.is_none() && self.exclude_ngram_repeats.is_none()
    }

    pub fn describe(&self) -> String {
        let mut parts = Vec::new();
        if let Some(d) = self.max_len_diff {
            parts.push(format!("len_diff<{d}"));
        }
        if let Some(w) = &self.time_window {
            let side = match w.side {
                WindowSide::Before => "before",
                WindowSide::After => "after",
            };
            let anchor = match w.anchor {
                TimeAnchor::Speaker => "speaker",
                TimeAnchor::Target => "target",
            };
            parts.push(format!("{side}:{}:{anchor}:buffer{}d", w.role, w.buffer_days));
        }
        if let Some(r) = &self.exclude_ngram_repeats {
            parts.push(format!("no_{}gram_repeat:{}", r.n, r.category));
        }
        if parts.is_empty() {
            "unfiltered".into()
        } else {
            parts.join(";")
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct FilterStats {
    pub input: usize,
    pub kept: usize,
    pub length_excluded: usize,
    pub missing_timestamp: usize,
    pub outside_window: usize,
    pub ngram_repeat: usize,
}

pub fn filter_exchanges<'a>(
    set: &ExchangeSet<'a>,
    spec: &FilterSpec,
    corpus: &Corpus,
    lexicon: &Lexicon,
) -> ExchangeSet<'a> {
    filter_exchanges_with_stats(set, spec, corpus, lexicon).0
}

pub fn filter_exchanges_with_stats<'a>(
    set: &ExchangeSet<'a>,
    spec: &FilterSpec,
    corpus: &Corpus,
    lexicon: &Lexicon,
) -> (ExchangeSet<'a>, FilterStats) {
    let mut stats = FilterStats {
        input: set.len(),
        ..Default::default()
    };
    let mut kept = Vec::with_capacity(set.len());
    for e in set.iter() {
        if let Some(max) = spec.max_len_diff {
            if e.target.len().abs_diff(e.reply.len()) >= max {
                stats.length_excluded += 1;
                continue;
            }
        }
        if let Some(w) = &spec.time_window {
            let Some(ts) = e.timestamp() else {
                stats.missing_timestamp += 1;
                continue;
            };
            let who = match w.anchor {
                TimeAnchor::Speaker => e.speaker(),
                TimeAnchor::Target => e.target_speaker(),
            };
            let event_at = corpus
                .participant(who)
                .and_then(|p| p.event(&w.role, w.outcome))
                .map(|ev| ev.at);
            let Some(at) = event_at else {
                stats.outside_window += 1;
                continue;
            };
            let buffer = i64::from(w.buffer_days) * SECONDS_PER_DAY;
            let inside = match w.side {
                WindowSide::Before => ts < at,
                WindowSide::After => ts >= at + buffer,
            };
            if !inside {
                stats.outside_window += 1;
                continue;
            }
        }
        if let Some(r) = &spec.exclude_ngram_repeats {
            if has_ngram_repeat(e, r.n, r.category, lexicon) {
                stats.ngram_repeat += 1;
                continue;
            }
        }
        kept.push(*e);
    }
    stats.kept = kept.len();
    let description = if spec.is_empty() {
        set.description.clone()
    } else {
        format!("{} | {}", set.description, spec.describe())
    };
    (
        ExchangeSet {
            exchanges: kept,
            description,
        },
        stats,
    )
}
