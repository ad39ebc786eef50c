use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coordination::{MarkerCoordination, MarkerCounts, Thresholds};
use crate::corpus::{derive_exchanges, filter_exchanges, Corpus, Exchange, FilterSpec};
use crate::error::{Error, Result};
use crate::lexicon::{Lexicon, Marker, MarkerMask};

/// One reply inside a pair, reduced to what the feature families need.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reply {
    pub utterance_id: String,
    pub target_mask: MarkerMask,
    pub reply_mask: MarkerMask,
    /// Tokens of the reply belonging to each marker category.
    pub marker_tokens: [u32; Marker::COUNT],
    pub tokens: Vec<String>,
}

impl Reply {
    pub fn from_exchange(e: &Exchange<'_>, lexicon: &Lexicon) -> Reply {
        let counts = lexicon.marker_counts(&e.reply.tokens);
        Reply {
            utterance_id: e.reply.id.clone(),
            target_mask: e.target.exhibit_mask,
            reply_mask: e.reply.exhibit_mask,
            marker_tokens: counts.map(|c| c as u32),
            tokens: e.reply.tokens.tokens.clone(),
        }
    }
}

/// An ordered pair of conversing participants; `label` is true when `x`
/// holds the higher status.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairInstance {
    pub x_id: String,
    pub y_id: String,
    pub domain: String,
    pub label: bool,
    /// Replies of x to y.
    pub replies_x: Vec<Reply>,
    /// Replies of y to x.
    pub replies_y: Vec<Reply>,
}

fn direction_coordination(replies: &[Reply], thresholds: Thresholds) -> [MarkerCoordination; Marker::COUNT] {
    let mut counts = [MarkerCounts::default(); Marker::COUNT];
    for r in replies {
        for m in Marker::ALL {
            counts[m.index()].add(r.target_mask.contains(m), r.reply_mask.contains(m));
        }
    }
    Marker::ALL.map(|m| MarkerCoordination::from_counts(m, counts[m.index()], thresholds))
}

impl PairInstance {
    /// Same pair seen from the other side: label flipped, blocks swapped.
    pub fn swapped(&self) -> PairInstance {
        PairInstance {
            x_id: self.y_id.clone(),
            y_id: self.x_id.clone(),
            domain: self.domain.clone(),
            label: !self.label,
            replies_x: self.replies_y.clone(),
            replies_y: self.replies_x.clone(),
        }
    }

    /// Per-marker coordination of x towards y.
    pub fn coordination_x(&self, thresholds: Thresholds) -> [MarkerCoordination; Marker::COUNT] {
        direction_coordination(&self.replies_x, thresholds)
    }

    /// Per-marker coordination of y towards x.
    pub fn coordination_y(&self, thresholds: Thresholds) -> [MarkerCoordination; Marker::COUNT] {
        direction_coordination(&self.replies_y, thresholds)
    }

    /// Whether all eight markers are defined in both directions.
    pub fn fully_defined(&self, thresholds: Thresholds) -> bool {
        self.coordination_x(thresholds).iter().all(|c| c.is_defined())
            && self.coordination_y(thresholds).iter().all(|c| c.is_defined())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pairing {
    pub high_label: String,
    pub low_label: String,
}

#[derive(Default, Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairOptions {
    pub seed: u64,
    /// Drop pairs without defined coordination on every marker both ways.
    pub require_full_coordination: bool,
    pub thresholds: Thresholds,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairStats {
    /// Unordered high/low pairs with at least one exchange.
    pub candidates: usize,
    /// Dropped because one side never replied to the other.
    pub one_sided: usize,
    /// Dropped for undefined coordination.
    pub undefined: usize,
    pub kept: usize,
}

/// High/low pairs with replies in both directions after `filters`.
pub fn build_pairs(
    corpus: &Corpus,
    lexicon: &Lexicon,
    pairing: &Pairing,
    domain: &str,
    filters: &FilterSpec,
    options: &PairOptions,
) -> Result<(Vec<PairInstance>, PairStats)> {
    let high = corpus.with_label(&pairing.high_label);
    let low = corpus.with_label(&pairing.low_label);
    for (label, set) in [(&pairing.high_label, &high), (&pairing.low_label, &low)] {
        if set.is_empty() {
            return Err(Error::InsufficientMetadata(format!("no participant carries label `{label}`")));
        }
    }
    let high: BTreeSet<&str> = high.difference(&low).map(String::as_str).collect();
    let low: BTreeSet<&str> = low.iter().map(String::as_str).filter(|id| !high.contains(id)).collect();

    let all = derive_exchanges(corpus);
    let kept = filter_exchanges(&all, filters, corpus, lexicon);

    // (high, low) -> (high's replies to low, low's replies to high)
    type Sides = (Vec<Reply>, Vec<Reply>);
    let mut by_pair: BTreeMap<(&str, &str), Sides> = BTreeMap::new();
    for e in kept.iter() {
        let (s, t) = (e.speaker(), e.target_speaker());
        if high.contains(s) && low.contains(t) {
            by_pair.entry((s, t)).or_default().0.push(Reply::from_exchange(e, lexicon));
        } else if low.contains(s) && high.contains(t) {
            by_pair.entry((t, s)).or_default().1.push(Reply::from_exchange(e, lexicon));
        }
    }

    let mut stats = PairStats {
        candidates: by_pair.len(),
        ..Default::default()
    };
    let mut pairs = Vec::new();
    for ((h, l), (from_high, from_low)) in by_pair {
        if from_high.is_empty() || from_low.is_empty() {
            stats.one_sided += 1;
            continue;
        }
        let pair = PairInstance {
            x_id: h.to_string(),
            y_id: l.to_string(),
            domain: domain.to_string(),
            label: true,
            replies_x: from_high,
            replies_y: from_low,
        };
        if options.require_full_coordination && !pair.fully_defined(options.thresholds) {
            stats.undefined += 1;
            continue;
        }
        pairs.push(pair);
    }
    if pairs.is_empty() {
        return Err(Error::NoPairs(format!(
            "`{}` / `{}` in domain `{domain}`",
            pairing.high_label, pairing.low_label
        )));
    }

    // Seeded orientation: a shuffled half keeps the high member as x.
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(options.seed));
    let half = pairs.len() / 2;
    for &i in &order[half..] {
        pairs[i] = pairs[i].swapped();
    }
    stats.kept = pairs.len();
    Ok((pairs, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::fixtures::corpus;

    const PARTS: &str = r#"{"id":"a","labels":["admin"]}
{"id":"n","labels":["user"]}
{"id":"m","labels":["user"]}"#;

    fn pairing() -> Pairing {
        Pairing {
            high_label: "admin".into(),
            low_label: "user".into(),
        }
    }

    #[test]
    fn mutual_replies_make_one_instance() {
        let utts = r#"{"id":"1","conv_id":"c","speaker":"a","text":"the cat"}
{"id":"2","conv_id":"c","speaker":"n","reply_to":"1","text":"a dog"}
{"id":"3","conv_id":"c","speaker":"a","reply_to":"2","text":"and the dog"}
{"id":"4","conv_id":"c","speaker":"m","reply_to":"1","text":"only m"}"#;
        let c = corpus(utts, PARTS, "").unwrap();
        let (pairs, stats) =
            build_pairs(&c, &Lexicon::shipped(), &pairing(), "wiki", &FilterSpec::default(), &PairOptions::default())
                .unwrap();
        assert_eq!(pairs.len(), 1);
        assert_eq!(stats.one_sided, 1);
        let p = &pairs[0];
        let (hi, lo) = if p.label { (&p.x_id, &p.y_id) } else { (&p.y_id, &p.x_id) };
        assert_eq!((hi.as_str(), lo.as_str()), ("a", "n"));
        assert_eq!(p.replies_x.len(), 1);
        assert_eq!(p.replies_y.len(), 1);
    }

    #[test]
    fn long_length_gap_drops_exchange() {
        let long = vec!["word"; 30].join(" ");
        let utts = format!(
            r#"{{"id":"1","conv_id":"c","speaker":"a","text":"{long}"}}
{{"id":"2","conv_id":"c","speaker":"n","reply_to":"1","text":"short reply here and more"}}
{{"id":"3","conv_id":"c","speaker":"a","reply_to":"2","text":"fine then"}}
{{"id":"4","conv_id":"c","speaker":"n","reply_to":"3","text":"ok"}}"#
        );
        let c = corpus(&utts, PARTS, "").unwrap();
        let filters = FilterSpec {
            max_len_diff: Some(20),
            ..Default::default()
        };
        let (pairs, _) =
            build_pairs(&c, &Lexicon::shipped(), &pairing(), "court", &filters, &PairOptions::default()).unwrap();
        let p = &pairs[0];
        let low_side = if p.label { &p.replies_y } else { &p.replies_x };
        // 30 vs 5 tokens is a gap of 25: that exchange is gone.
        assert_eq!(low_side.len(), 1);
        assert_eq!(low_side[0].utterance_id, "4");
    }

    #[test]
    fn undefined_coordination_is_excluded_on_request() {
        let utts = r#"{"id":"1","conv_id":"c","speaker":"a","text":"the cat"}
{"id":"2","conv_id":"c","speaker":"n","reply_to":"1","text":"a dog"}
{"id":"3","conv_id":"c","speaker":"a","reply_to":"2","text":"the dog"}"#;
        let c = corpus(utts, PARTS, "").unwrap();
        let opts = PairOptions {
            require_full_coordination: true,
            ..Default::default()
        };
        let err = build_pairs(&c, &Lexicon::shipped(), &pairing(), "wiki", &FilterSpec::default(), &opts).unwrap_err();
        assert_eq!(err.kind(), "NoPairs");
    }

    #[test]
    fn missing_label_is_metadata_error() {
        let utts = r#"{"id":"1","conv_id":"c","speaker":"a","text":"x"}"#;
        let c = corpus(utts, PARTS, "").unwrap();
        let p = Pairing {
            high_label: "justice".into(),
            low_label: "user".into(),
        };
        let err = build_pairs(&c, &Lexicon::shipped(), &p, "d", &FilterSpec::default(), &PairOptions::default())
            .unwrap_err();
        assert_eq!(err.kind(), "InsufficientMetadata");
    }
}
