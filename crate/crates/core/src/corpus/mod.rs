//! Conversation data model and JSONL ingestion.
//!
//! Three line-delimited JSON streams feed a [`Corpus`]:
//!
//! * utterances: `{id, conv_id, speaker, reply_to, ts, text}` plus an optional
//!   `case_id` naming the case or discussion the conversation belongs to
//!   (defaults to `conv_id`);
//! * participants: `{id, labels, status_events: [{role, at, outcome}], stances, attrs}`;
//! * cases: `{case_id, lawyer_sides, justice_votes}`.
//!
//! Unknown fields are ignored. Replies a speaker makes to their own utterance
//! are kept as utterances but lose their reply link, and are counted in
//! [`LoadStats::self_replies_dropped`].

mod exchange;
mod groups;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexicon::{tokenize, Lexicon, MarkerMask, TokenSequence};

pub use exchange::{
    derive_exchanges, derive_exchanges_where, filter_exchanges, filter_exchanges_with_stats,
    has_ngram_repeat, Exchange, ExchangeSet, FilterSpec, FilterStats, NgramRepeatFilter, TimeAnchor,
    TimeWindow, WindowSide,
};
pub use groups::{partition_groups, Group, GroupScheme, Membership, Partition};

pub const SECONDS_PER_DAY: i64 = 86_400;
/// A "month" is 30 days everywhere in this crate.
pub const SECONDS_PER_MONTH: i64 = 30 * SECONDS_PER_DAY;

#[derive(Debug, Clone, PartialEq)]
pub struct Utterance {
    pub id: String,
    pub conversation_id: String,
    pub speaker_id: String,
    pub reply_to: Option<String>,
    pub timestamp: Option<i64>,
    pub text: String,
    /// Case or discussion this utterance belongs to; `conversation_id` when unset.
    pub case_id: Option<String>,
    pub tokens: TokenSequence,
    pub exhibit_mask: MarkerMask,
}

impl Utterance {
    pub fn context(&self) -> &str {
        self.case_id.as_deref().unwrap_or(&self.conversation_id)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Promoted,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatusEvent {
    pub role: String,
    pub at: i64,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Participant {
    pub id: String,
    pub group_labels: BTreeSet<String>,
    pub status_events: Vec<StatusEvent>,
    pub stances: BTreeMap<String, String>,
    pub attrs: BTreeMap<String, String>,
}

impl Participant {
    fn bare(id: &str) -> Self {
        Participant {
            id: id.to_string(),
            ..Default::default()
        }
    }

    pub fn event(&self, role: &str, outcome: Outcome) -> Option<&StatusEvent> {
        self.status_events
            .iter()
            .find(|e| e.role == role && e.outcome == outcome)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseRecord {
    pub case_id: String,
    #[serde(default)]
    pub lawyer_sides: BTreeMap<String, String>,
    #[serde(default)]
    pub justice_votes: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct LoadStats {
    pub utterances: usize,
    pub participants_declared: usize,
    pub cases: usize,
    pub self_replies_dropped: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadOptions {
    /// Treat every (speaker, case) appearance as its own participant by
    /// suffixing speaker ids with `@<case>`.
    pub identity_per_case: bool,
}

#[derive(Debug, Clone)]
pub struct Corpus {
    utterances: Vec<Utterance>,
    index: HashMap<String, usize>,
    participants: BTreeMap<String, Participant>,
    cases: BTreeMap<String, CaseRecord>,
    identity_per_case: bool,
    stats: LoadStats,
}

#[derive(Deserialize)]
struct UtteranceRecord {
    id: String,
    conv_id: String,
    speaker: String,
    #[serde(default)]
    reply_to: Option<String>,
    #[serde(default)]
    ts: Option<i64>,
    text: String,
    #[serde(default)]
    case_id: Option<String>,
}

#[derive(Deserialize)]
struct ParticipantRecord {
    id: String,
    #[serde(default)]
    labels: Vec<String>,
    #[serde(default)]
    status_events: Vec<StatusEvent>,
    #[serde(default)]
    stances: BTreeMap<String, serde_json::Value>,
    #[serde(default)]
    attrs: BTreeMap<String, serde_json::Value>,
}

fn value_to_string(v: serde_json::Value) -> String {
    match v {
        serde_json::Value::String(s) => s,
        other => other.to_string(),
    }
}

fn read_jsonl<T, R>(reader: R, source_name: &str) -> Result<Vec<(usize, T)>>
where
    T: for<'de> Deserialize<'de>,
    R: BufRead,
{
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(source_name, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
            source_name: source_name.to_string(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push((i + 1, rec));
    }
    Ok(out)
}

/// Identity of a speaker within a case when per-case identities are enabled.
pub fn case_identity(speaker: &str, case: &str) -> String {
    format!("{speaker}@{case}")
}

impl Corpus {
    pub fn utterances(&self) -> &[Utterance] {
        &self.utterances
    }

    pub fn utterance(&self, id: &str) -> Option<&Utterance> {
        self.index.get(id).map(|&i| &self.utterances[i])
    }

    pub fn participants(&self) -> &BTreeMap<String, Participant> {
        &self.participants
    }

    pub fn participant(&self, id: &str) -> Option<&Participant> {
        self.participants.get(id)
    }

    pub fn cases(&self) -> &BTreeMap<String, CaseRecord> {
        &self.cases
    }

    pub fn stats(&self) -> LoadStats {
        self.stats
    }

    pub fn identity_per_case(&self) -> bool {
        self.identity_per_case
    }

    /// Id under which `base` appears in `case` in this corpus.
    pub fn id_in_case(&self, base: &str, case: &str) -> String {
        if self.identity_per_case {
            case_identity(base, case)
        } else {
            base.to_string()
        }
    }

    /// Ids of every participant carrying `label`.
    pub fn with_label(&self, label: &str) -> BTreeSet<String> {
        self.participants
            .values()
            .filter(|p| p.group_labels.contains(label))
            .map(|p| p.id.clone())
            .collect()
    }

    /// Builds a corpus from in-memory records.
    pub fn from_parts(
        utterances: Vec<Utterance>,
        participants: Vec<Participant>,
        cases: Vec<CaseRecord>,
        options: LoadOptions,
    ) -> Result<Corpus> {
        let mut index = HashMap::with_capacity(utterances.len());
        for (i, u) in utterances.iter().enumerate() {
            if index.insert(u.id.clone(), i).is_some() {
                return Err(Error::DuplicateId(u.id.clone()));
            }
        }

        let mut utterances = utterances;
        let mut self_replies = 0;
        let mut dropped = Vec::new();
        for (i, u) in utterances.iter().enumerate() {
            let Some(parent_id) = &u.reply_to else { continue };
            let Some(&p) = index.get(parent_id) else {
                return Err(Error::DanglingReply {
                    utterance: u.id.clone(),
                    reply_to: parent_id.clone(),
                });
            };
            let parent = &utterances[p];
            if parent.conversation_id != u.conversation_id {
                return Err(Error::DanglingReply {
                    utterance: u.id.clone(),
                    reply_to: format!("{parent_id} (different conversation)"),
                });
            }
            if parent.speaker_id == u.speaker_id {
                self_replies += 1;
                dropped.push(i);
            }
        }
        for i in dropped {
            utterances[i].reply_to = None;
        }

        let declared = participants.len();
        let mut by_id: BTreeMap<String, Participant> = BTreeMap::new();
        for mut p in participants {
            p.status_events.sort_by_key(|e| e.at);
            let mut promoted = BTreeSet::new();
            for e in &p.status_events {
                if e.outcome == Outcome::Promoted && !promoted.insert(e.role.clone()) {
                    return Err(Error::InsufficientMetadata(format!(
                        "participant `{}` has more than one promotion to `{}`",
                        p.id, e.role
                    )));
                }
            }
            if by_id.contains_key(&p.id) {
                return Err(Error::DuplicateId(p.id));
            }
            by_id.insert(p.id.clone(), p);
        }

        if options.identity_per_case {
            // Each suffixed identity inherits the metadata of its base participant.
            let mut expanded = BTreeMap::new();
            for u in &utterances {
                if expanded.contains_key(&u.speaker_id) {
                    continue;
                }
                let base = u.speaker_id.rsplit_once('@').map_or(u.speaker_id.as_str(), |(b, _)| b);
                let mut p = by_id
                    .get(base)
                    .cloned()
                    .unwrap_or_else(|| Participant::bare(base));
                p.id = u.speaker_id.clone();
                expanded.insert(u.speaker_id.clone(), p);
            }
            by_id = expanded;
        } else {
            for u in &utterances {
                if !by_id.contains_key(&u.speaker_id) {
                    by_id.insert(u.speaker_id.clone(), Participant::bare(&u.speaker_id));
                }
            }
        }

        let mut case_map = BTreeMap::new();
        for c in cases {
            let sides: BTreeSet<&String> = c.lawyer_sides.values().chain(c.justice_votes.values()).collect();
            if sides.len() > 2 {
                return Err(Error::InsufficientMetadata(format!(
                    "case `{}` uses more than two side labels",
                    c.case_id
                )));
            }
            if case_map.contains_key(&c.case_id) {
                return Err(Error::DuplicateId(c.case_id));
            }
            case_map.insert(c.case_id.clone(), c);
        }

        let stats = LoadStats {
            utterances: utterances.len(),
            participants_declared: declared,
            cases: case_map.len(),
            self_replies_dropped: self_replies,
        };
        Ok(Corpus {
            utterances,
            index,
            participants: by_id,
            cases: case_map,
            identity_per_case: options.identity_per_case,
            stats,
        })
    }
}

/// Parses the three JSONL streams into a corpus. Participant and case
/// streams are optional.
pub fn load_corpus<U, P, C>(
    utterances: U,
    participants: Option<P>,
    cases: Option<C>,
    lexicon: &Lexicon,
    options: LoadOptions,
) -> Result<Corpus>
where
    U: BufRead,
    P: BufRead,
    C: BufRead,
{
    let records: Vec<(usize, UtteranceRecord)> = read_jsonl(utterances, "utterances")?;
    let utts = records
        .into_iter()
        .map(|(_, r)| {
            let case_ctx = r.case_id.clone().unwrap_or_else(|| r.conv_id.clone());
            let speaker_id = if options.identity_per_case {
                case_identity(&r.speaker, &case_ctx)
            } else {
                r.speaker
            };
            make_utterance(lexicon, r.id, r.conv_id, speaker_id, r.reply_to, r.ts, r.text, r.case_id)
        })
        .collect();

    let parts = match participants {
        Some(reader) => read_jsonl::<ParticipantRecord, _>(reader, "participants")?
            .into_iter()
            .map(|(_, r)| Participant {
                id: r.id,
                group_labels: r.labels.into_iter().collect(),
                status_events: r.status_events,
                stances: r.stances.into_iter().map(|(k, v)| (k, value_to_string(v))).collect(),
                attrs: r.attrs.into_iter().map(|(k, v)| (k, value_to_string(v))).collect(),
            })
            .collect(),
        None => Vec::new(),
    };

    let case_records = match cases {
        Some(reader) => read_jsonl::<CaseRecord, _>(reader, "cases")?
            .into_iter()
            .map(|(_, c)| c)
            .collect(),
        None => Vec::new(),
    };

    Corpus::from_parts(utts, parts, case_records, options)
}

/// [`load_corpus`] over files on disk.
pub fn load_corpus_files(
    utterances: &Path,
    participants: Option<&Path>,
    cases: Option<&Path>,
    lexicon: &Lexicon,
    options: LoadOptions,
) -> Result<Corpus> {
    let open = |p: &Path| -> Result<BufReader<File>> {
        File::open(p).map(BufReader::new).map_err(|e| Error::io(p, e))
    };
    let u = open(utterances)?;
    let p = participants.map(open).transpose()?;
    let c = cases.map(open).transpose()?;
    load_corpus(u, p, c, lexicon, options)
}

/// Tokenizes `text` and computes the exhibit mask.
#[allow(clippy::too_many_arguments)]
pub fn make_utterance(
    lexicon: &Lexicon,
    id: String,
    conversation_id: String,
    speaker_id: String,
    reply_to: Option<String>,
    timestamp: Option<i64>,
    text: String,
    case_id: Option<String>,
) -> Utterance {
    let tokens = tokenize(&text);
    let exhibit_mask = lexicon.exhibit_mask(&tokens);
    Utterance {
        id,
        conversation_id,
        speaker_id,
        reply_to,
        timestamp,
        text,
        case_id,
        tokens,
        exhibit_mask,
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// Loads a corpus from inline JSONL strings with the shipped lexicon.
    pub fn corpus(utts: &str, parts: &str, cases: &str) -> Result<Corpus> {
        corpus_with(utts, parts, cases, LoadOptions::default())
    }

    pub fn corpus_with(utts: &str, parts: &str, cases: &str, options: LoadOptions) -> Result<Corpus> {
        let lex = Lexicon::shipped();
        load_corpus(
            utts.as_bytes(),
            Some(parts.as_bytes()),
            Some(cases.as_bytes()),
            &lex,
            options,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::corpus;
    use super::*;
    use crate::lexicon::Marker;

    const THREE: &str = r#"{"id":"u1","conv_id":"c1","speaker":"x","reply_to":null,"ts":100,"text":"Hi"}
{"id":"u2","conv_id":"c1","speaker":"y","reply_to":"u1","ts":200,"text":"Tired?"}
{"id":"u3","conv_id":"c1","speaker":"x","reply_to":"u2","ts":null,"text":"No, the cat is."}
"#;

    #[test]
    fn loads_three_utterances() {
        let c = corpus(THREE, "", "").unwrap();
        assert_eq!(c.utterances().len(), 3);
        assert_eq!(c.participants().len(), 2);
        let u3 = c.utterance("u3").unwrap();
        assert_eq!(u3.tokens.tokens, vec!["no", "the", "cat", "is"]);
        assert!(u3.exhibit_mask.contains(Marker::Articles));
        assert!(u3.exhibit_mask.contains(Marker::AuxiliaryVerbs));
        assert!(!u3.exhibit_mask.contains(Marker::Quantifiers));
        assert_eq!(u3.timestamp, None);
    }

    #[test]
    fn dangling_reply_rejected() {
        let bad = r#"{"id":"u1","conv_id":"c1","speaker":"x","reply_to":"nope","ts":1,"text":"a"}"#;
        assert!(matches!(corpus(bad, "", ""), Err(Error::DanglingReply { .. })));
    }

    #[test]
    fn cross_conversation_reply_rejected() {
        let bad = r#"{"id":"u1","conv_id":"c1","speaker":"x","text":"a"}
{"id":"u2","conv_id":"c2","speaker":"y","reply_to":"u1","text":"b"}"#;
        assert!(matches!(corpus(bad, "", ""), Err(Error::DanglingReply { .. })));
    }

    #[test]
    fn duplicate_id_rejected() {
        let bad = r#"{"id":"u1","conv_id":"c1","speaker":"x","text":"a"}
{"id":"u1","conv_id":"c1","speaker":"y","text":"b"}"#;
        assert!(matches!(corpus(bad, "", ""), Err(Error::DuplicateId(_))));
    }

    #[test]
    fn malformed_record_reports_line() {
        let bad = "{\"id\":\"u1\",\"conv_id\":\"c1\",\"speaker\":\"x\",\"text\":\"a\"}\n\n{not json}\n";
        match corpus(bad, "", "") {
            Err(Error::MalformedRecord { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn self_reply_dropped_and_counted() {
        let utts = r#"{"id":"u1","conv_id":"c1","speaker":"x","text":"a"}
{"id":"u2","conv_id":"c1","speaker":"x","reply_to":"u1","text":"b"}
{"id":"u3","conv_id":"c1","speaker":"y","reply_to":"u2","text":"c"}"#;
        let c = corpus(utts, "", "").unwrap();
        assert_eq!(c.stats().self_replies_dropped, 1);
        assert_eq!(c.utterance("u2").unwrap().reply_to, None);
        assert_eq!(derive_exchanges(&c).len(), 1);
    }

    #[test]
    fn participant_metadata_parsed() {
        let parts = r#"{"id":"x","labels":["admin"],"status_events":[{"role":"admin","at":50,"outcome":"promoted"}],"attrs":{"gender":"f","age":40},"extra":1}"#;
        let c = corpus(THREE, parts, "").unwrap();
        let x = c.participant("x").unwrap();
        assert!(x.group_labels.contains("admin"));
        assert_eq!(x.attrs["age"], "40");
        assert_eq!(x.event("admin", Outcome::Promoted).unwrap().at, 50);
        assert!(c.participant("y").unwrap().group_labels.is_empty());
    }

    #[test]
    fn double_promotion_rejected() {
        let parts = r#"{"id":"x","status_events":[{"role":"admin","at":5,"outcome":"promoted"},{"role":"admin","at":1,"outcome":"promoted"}]}"#;
        assert!(corpus(THREE, parts, "").is_err());
    }

    #[test]
    fn per_case_identity_suffixes_speakers() {
        let utts = r#"{"id":"u1","conv_id":"k1","speaker":"j","text":"a"}
{"id":"u2","conv_id":"k1","speaker":"l","reply_to":"u1","text":"b"}
{"id":"u3","conv_id":"k2","speaker":"l","text":"c"}"#;
        let parts = r#"{"id":"l","labels":["lawyer"]}"#;
        let c = super::fixtures::corpus_with(
            utts,
            parts,
            "",
            LoadOptions {
                identity_per_case: true,
            },
        )
        .unwrap();
        assert_eq!(c.utterance("u2").unwrap().speaker_id, "l@k1");
        assert!(c.participant("l@k2").unwrap().group_labels.contains("lawyer"));
        assert_eq!(c.with_label("lawyer").len(), 2);
    }
}
