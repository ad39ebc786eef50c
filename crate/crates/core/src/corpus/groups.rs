//! Group partitions used to compare coordination across power differentials.
//!
//! A [`Group`] decides membership per exchange: static groups only look at
//! who the participant is; before/after groups also look at when the
//! exchange happened relative to the participant's status event; relational
//! groups (favorable Justices, same-vote editors) depend on who the
//! counterpart is and in which case or discussion the exchange took place.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{derive_exchanges, Corpus, Exchange, Outcome, WindowSide, SECONDS_PER_DAY};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case")]
pub enum GroupScheme {
    /// One group per listed label.
    ByRole { labels: Vec<String> },
    /// Participants with a status event, split into their exchanges before
    /// the event and after a buffer following it.
    BeforeAfter {
        role: String,
        outcome: Outcome,
        buffer_days: u32,
        /// Keep only participants with at least this many replies on each side.
        min_replies_each_side: usize,
    },
    /// Justices relative to each lawyer in a case: favorable iff the
    /// Justice's vote is on the lawyer's side.
    FavorableUnfavorable,
    /// Participants relative to each other in a discussion where both took a stance.
    SameDiffVote,
    /// Top and bottom thirds of participants by number of replies posted.
    VolumeTertiles { within_label: Option<String> },
    /// One group per value of a participant attribute.
    ByAttr { key: String },
}

impl GroupScheme {
    /// Parses the compact form used on the command line:
    /// `by_role:admin,non-admin`, `before_after:admin[:buffer_days[:min[:failed]]]`,
    /// `favorable_unfavorable`, `same_diff_vote`, `volume_tertiles[:label]`,
    /// `by_attr:key`.
    pub fn parse(text: &str) -> Result<GroupScheme> {
        let mut parts = text.split(':');
        let name = parts.next().unwrap_or_default();
        let args: Vec<&str> = parts.collect();
        let bad = || Error::UnknownScheme(text.to_string());
        let scheme = match (name, args.as_slice()) {
            ("by_role", [labels]) => GroupScheme::ByRole {
                labels: labels.split(',').map(str::to_string).collect(),
            },
            ("before_after", [role, rest @ ..]) if rest.len() <= 3 => {
                let buffer_days = rest.first().map(|s| s.parse()).transpose().map_err(|_| bad())?.unwrap_or(0);
                let min = rest.get(1).map(|s| s.parse()).transpose().map_err(|_| bad())?.unwrap_or(0);
                let outcome = match rest.get(2) {
                    None | Some(&"promoted") => Outcome::Promoted,
                    Some(&"failed") => Outcome::Failed,
                    _ => return Err(bad()),
                };
                GroupScheme::BeforeAfter {
                    role: role.to_string(),
                    outcome,
                    buffer_days,
                    min_replies_each_side: min,
                }
            }
            ("favorable_unfavorable", []) => GroupScheme::FavorableUnfavorable,
            ("same_diff_vote", []) => GroupScheme::SameDiffVote,
            ("volume_tertiles", []) => GroupScheme::VolumeTertiles { within_label: None },
            ("volume_tertiles", [label]) => GroupScheme::VolumeTertiles {
                within_label: Some(label.to_string()),
            },
            ("by_attr", [key]) => GroupScheme::ByAttr { key: key.to_string() },
            _ => return Err(bad()),
        };
        Ok(scheme)
    }
}

/// How a group decides whether a participant counts in a given exchange.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Membership {
    /// Everyone.
    Any,
    /// Listed members, always.
    Members,
    /// Listed members, in exchanges on one side of their own event time.
    Window {
        event_at: BTreeMap<String, i64>,
        side: WindowSide,
        buffer_secs: i64,
    },
    /// (member, counterpart, context) triples.
    Relation { triples: HashSet<(String, String, String)> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Group {
    pub label: String,
    pub members: BTreeSet<String>,
    pub membership: Membership,
}

impl Group {
    pub fn everyone() -> Group {
        Group {
            label: "all".into(),
            members: BTreeSet::new(),
            membership: Membership::Any,
        }
    }

    pub fn of(label: impl Into<String>, members: impl IntoIterator<Item = String>) -> Group {
        Group {
            label: label.into(),
            members: members.into_iter().collect(),
            membership: Membership::Members,
        }
    }

    /// Whether `member`, talking with `counterpart` in the exchange, belongs to this group.
    pub fn admits(&self, member: &str, counterpart: &str, exchange: &Exchange<'_>) -> bool {
        match &self.membership {
            Membership::Any => true,
            Membership::Members => self.members.contains(member),
            Membership::Window {
                event_at,
                side,
                buffer_secs,
            } => {
                let (Some(&at), Some(ts)) = (event_at.get(member), exchange.timestamp()) else {
                    return false;
                };
                match side {
                    WindowSide::Before => ts < at,
                    WindowSide::After => ts >= at + buffer_secs,
                }
            }
            Membership::Relation { triples } => triples.contains(&(
                member.to_string(),
                counterpart.to_string(),
                exchange.context().to_string(),
            )),
        }
    }

    pub fn admits_speaker(&self, e: &Exchange<'_>) -> bool {
        self.admits(e.speaker(), e.target_speaker(), e)
    }

    pub fn admits_target(&self, e: &Exchange<'_>) -> bool {
        self.admits(e.target_speaker(), e.speaker(), e)
    }

    /// True if the group's membership depends on exchange timestamps.
    pub fn is_time_conditioned(&self) -> bool {
        matches!(self.membership, Membership::Window { .. })
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

#[derive(Debug, Clone)]
pub struct Partition {
    pub scheme: GroupScheme,
    pub groups: BTreeMap<String, Group>,
}

impl Partition {
    pub fn get(&self, label: &str) -> Result<&Group> {
        self.groups.get(label).ok_or_else(|| {
            Error::InsufficientMetadata(format!("scheme has no group `{label}`"))
        })
    }
}

pub fn partition_groups(corpus: &Corpus, scheme: &GroupScheme) -> Result<Partition> {
    let groups = match scheme {
        GroupScheme::ByRole { labels } => by_role(corpus, labels)?,
        GroupScheme::BeforeAfter {
            role,
            outcome,
            buffer_days,
            min_replies_each_side,
        } => before_after(corpus, role, *outcome, *buffer_days, *min_replies_each_side)?,
        GroupScheme::FavorableUnfavorable => favorable_unfavorable(corpus)?,
        GroupScheme::SameDiffVote => same_diff_vote(corpus)?,
        GroupScheme::VolumeTertiles { within_label } => volume_tertiles(corpus, within_label.as_deref())?,
        GroupScheme::ByAttr { key } => by_attr(corpus, key)?,
    };
    Ok(Partition {
        scheme: scheme.clone(),
        groups: groups.into_iter().map(|g| (g.label.clone(), g)).collect(),
    })
}

fn by_role(corpus: &Corpus, labels: &[String]) -> Result<Vec<Group>> {
    if labels.is_empty() {
        return Err(Error::UnknownScheme("by_role needs at least one label".into()));
    }
    let mut groups: Vec<Group> = labels.iter().map(|l| Group::of(l.clone(), [])).collect();
    for p in corpus.participants().values() {
        let hits: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|(_, l)| p.group_labels.contains(*l))
            .map(|(i, _)| i)
            .collect();
        match hits.as_slice() {
            [] => {}
            [i] => {
                groups[*i].members.insert(p.id.clone());
            }
            _ => return Err(Error::AmbiguousMembership(p.id.clone())),
        }
    }
    for g in &groups {
        if g.members.is_empty() {
            return Err(Error::InsufficientMetadata(format!("no participant carries label `{}`", g.label)));
        }
    }
    Ok(groups)
}

fn before_after(corpus: &Corpus, role: &str, outcome: Outcome, buffer_days: u32, min_each: usize) -> Result<Vec<Group>> {
    let mut event_at: BTreeMap<String, i64> = corpus
        .participants()
        .values()
        .filter_map(|p| p.event(role, outcome).map(|e| (p.id.clone(), e.at)))
        .collect();
    if event_at.is_empty() {
        return Err(Error::InsufficientMetadata(format!("no participant has a `{role}` event")));
    }
    let buffer_secs = i64::from(buffer_days) * SECONDS_PER_DAY;
    let window = |event_at: &BTreeMap<String, i64>, side| Membership::Window {
        event_at: event_at.clone(),
        side,
        buffer_secs,
    };
    if min_each > 0 {
        let probe_before = Group {
            label: String::new(),
            members: BTreeSet::new(),
            membership: window(&event_at, WindowSide::Before),
        };
        let probe_after = Group {
            membership: window(&event_at, WindowSide::After),
            ..probe_before.clone()
        };
        let mut counts: HashMap<&str, (usize, usize)> = HashMap::new();
        let all = derive_exchanges(corpus);
        for e in all.iter() {
            let entry = counts.entry(e.speaker()).or_default();
            if probe_before.admits_speaker(e) {
                entry.0 += 1;
            } else if probe_after.admits_speaker(e) {
                entry.1 += 1;
            }
        }
        event_at.retain(|id, _| {
            counts
                .get(id.as_str())
                .is_some_and(|&(b, a)| b >= min_each && a >= min_each)
        });
    }
    let members: BTreeSet<String> = event_at.keys().cloned().collect();
    Ok(vec![
        Group {
            label: "before".into(),
            members: members.clone(),
            membership: window(&event_at, WindowSide::Before),
        },
        Group {
            label: "after".into(),
            members,
            membership: window(&event_at, WindowSide::After),
        },
    ])
}

fn favorable_unfavorable(corpus: &Corpus) -> Result<Vec<Group>> {
    if corpus.cases().is_empty() {
        return Err(Error::InsufficientMetadata("no case records loaded".into()));
    }
    let mut fav = HashSet::new();
    let mut unfav = HashSet::new();
    let mut fav_members = BTreeSet::new();
    let mut unfav_members = BTreeSet::new();
    for case in corpus.cases().values() {
        if case.justice_votes.is_empty() || case.lawyer_sides.is_empty() {
            return Err(Error::InsufficientMetadata(format!(
                "case `{}` lacks votes or lawyer sides",
                case.case_id
            )));
        }
        for (lawyer, side) in &case.lawyer_sides {
            let lawyer = corpus.id_in_case(lawyer, &case.case_id);
            for (justice, vote) in &case.justice_votes {
                let justice = corpus.id_in_case(justice, &case.case_id);
                let triple = (justice.clone(), lawyer.clone(), case.case_id.clone());
                if vote == side {
                    fav.insert(triple);
                    fav_members.insert(justice);
                } else {
                    unfav.insert(triple);
                    unfav_members.insert(justice);
                }
            }
        }
    }
    Ok(vec![
        Group {
            label: "favorable".into(),
            members: fav_members,
            membership: Membership::Relation { triples: fav },
        },
        Group {
            label: "unfavorable".into(),
            members: unfav_members,
            membership: Membership::Relation { triples: unfav },
        },
    ])
}

fn same_diff_vote(corpus: &Corpus) -> Result<Vec<Group>> {
    let mut by_context: BTreeMap<&str, Vec<(&str, &str)>> = BTreeMap::new();
    for p in corpus.participants().values() {
        for (ctx, side) in &p.stances {
            by_context.entry(ctx.as_str()).or_default().push((p.id.as_str(), side.as_str()));
        }
    }
    if by_context.is_empty() {
        return Err(Error::InsufficientMetadata("no participant stances loaded".into()));
    }
    let mut same = HashSet::new();
    let mut diff = HashSet::new();
    let mut same_members = BTreeSet::new();
    let mut diff_members = BTreeSet::new();
    for (ctx, voters) in by_context {
        for &(a, side_a) in &voters {
            for &(b, side_b) in &voters {
                if a == b {
                    continue;
                }
                let triple = (a.to_string(), b.to_string(), ctx.to_string());
                if side_a == side_b {
                    same.insert(triple);
                    same_members.insert(a.to_string());
                } else {
                    diff.insert(triple);
                    diff_members.insert(a.to_string());
                }
            }
        }
    }
    Ok(vec![
        Group {
            label: "same_vote".into(),
            members: same_members,
            membership: Membership::Relation { triples: same },
        },
        Group {
            label: "diff_vote".into(),
            members: diff_members,
            membership: Membership::Relation { triples: diff },
        },
    ])
}

fn volume_tertiles(corpus: &Corpus, within: Option<&str>) -> Result<Vec<Group>> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for u in corpus.utterances() {
        let entry = counts.entry(u.speaker_id.as_str()).or_default();
        if u.reply_to.is_some() {
            *entry += 1;
        }
    }
    let mut ranked: Vec<(usize, &str)> = counts
        .into_iter()
        .filter(|(id, _)| {
            within.is_none_or(|label| {
                corpus
                    .participant(id)
                    .is_some_and(|p| p.group_labels.contains(label))
            })
        })
        .map(|(id, n)| (n, id))
        .collect();
    ranked.sort();
    let third = ranked.len() / 3;
    if third == 0 {
        return Err(Error::InsufficientMetadata(format!(
            "volume tertiles need at least 3 participants, found {}",
            ranked.len()
        )));
    }
    let bottom = ranked[..third].iter().map(|(_, id)| id.to_string());
    let top = ranked[ranked.len() - third..].iter().map(|(_, id)| id.to_string());
    Ok(vec![Group::of("top", top), Group::of("bottom", bottom)])
}

fn by_attr(corpus: &Corpus, key: &str) -> Result<Vec<Group>> {
    let mut groups: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for p in corpus.participants().values() {
        if let Some(v) = p.attrs.get(key) {
            groups.entry(v.clone()).or_default().insert(p.id.clone());
        }
    }
    if groups.is_empty() {
        return Err(Error::InsufficientMetadata(format!("no participant has attribute `{key}`")));
    }
    Ok(groups.into_iter().map(|(label, m)| Group::of(label, m)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::fixtures::{corpus, corpus_with};
    use crate::corpus::LoadOptions;

    #[test]
    fn parse_schemes() {
        assert_eq!(
            GroupScheme::parse("by_role:admin,non-admin").unwrap(),
            GroupScheme::ByRole {
                labels: vec!["admin".into(), "non-admin".into()]
            }
        );
        assert!(matches!(
            GroupScheme::parse("before_after:admin:30:2").unwrap(),
            GroupScheme::BeforeAfter { buffer_days: 30, min_replies_each_side: 2, .. }
        ));
        assert!(matches!(GroupScheme::parse("bogus"), Err(Error::UnknownScheme(_))));
        assert!(matches!(GroupScheme::parse("by_attr"), Err(Error::UnknownScheme(_))));
    }

    #[test]
    fn by_role_two_groups() {
        let utts = r#"{"id":"1","conv_id":"c","speaker":"a","text":"x"}
{"id":"2","conv_id":"c","speaker":"b","reply_to":"1","text":"x"}
{"id":"3","conv_id":"c","speaker":"c","reply_to":"2","text":"x"}"#;
        let parts = r#"{"id":"a","labels":["admin"]}
{"id":"b","labels":["non-admin"]}
{"id":"c","labels":["non-admin"]}"#;
        let c = corpus(utts, parts, "").unwrap();
        let p = partition_groups(&c, &GroupScheme::parse("by_role:admin,non-admin").unwrap()).unwrap();
        assert_eq!(p.groups.len(), 2);
        assert_eq!(p.get("admin").unwrap().members.len(), 1);
        assert_eq!(p.get("non-admin").unwrap().members.len(), 2);
        assert!(p.get("admin").unwrap().members.is_disjoint(&p.get("non-admin").unwrap().members));

        let missing = partition_groups(&c, &GroupScheme::parse("by_role:admin,bureaucrat").unwrap());
        assert!(matches!(missing, Err(Error::InsufficientMetadata(_))));
    }

    #[test]
    fn ambiguous_labels_rejected() {
        let utts = r#"{"id":"1","conv_id":"c","speaker":"a","text":"x"}"#;
        let parts = r#"{"id":"a","labels":["admin","non-admin"]}"#;
        let c = corpus(utts, parts, "").unwrap();
        let p = partition_groups(&c, &GroupScheme::parse("by_role:admin,non-admin").unwrap());
        assert!(matches!(p, Err(Error::AmbiguousMembership(_))));
    }

    #[test]
    fn favorable_when_vote_matches_lawyer_side() {
        let utts = r#"{"id":"1","conv_id":"k1","speaker":"j1","text":"question"}
{"id":"2","conv_id":"k1","speaker":"l1","reply_to":"1","text":"answer"}
{"id":"3","conv_id":"k1","speaker":"j2","reply_to":"2","text":"question"}
{"id":"4","conv_id":"k1","speaker":"l1","reply_to":"3","text":"answer"}"#;
        let cases = r#"{"case_id":"k1","lawyer_sides":{"l1":"petitioner","l2":"respondent"},"justice_votes":{"j1":"petitioner","j2":"respondent"}}"#;
        let c = corpus(utts, "", cases).unwrap();
        let p = partition_groups(&c, &GroupScheme::FavorableUnfavorable).unwrap();
        let fav = p.get("favorable").unwrap();
        let unfav = p.get("unfavorable").unwrap();
        let ex = derive_exchanges(&c);
        let l1_to_j1 = &ex.exchanges[0];
        let l1_to_j2 = &ex.exchanges[2];
        assert!(fav.admits_target(l1_to_j1));
        assert!(!unfav.admits_target(l1_to_j1));
        assert!(unfav.admits_target(l1_to_j2));
        assert!(!fav.admits_target(l1_to_j2));
        if let (Membership::Relation { triples: a }, Membership::Relation { triples: b }) =
            (&fav.membership, &unfav.membership)
        {
            assert!(a.is_disjoint(b));
        }
    }

    #[test]
    fn favorable_with_per_case_identity() {
        let utts = r#"{"id":"1","conv_id":"k1","speaker":"j1","text":"q"}
{"id":"2","conv_id":"k1","speaker":"l1","reply_to":"1","text":"a"}"#;
        let cases = r#"{"case_id":"k1","lawyer_sides":{"l1":"p"},"justice_votes":{"j1":"p"}}"#;
        let c = corpus_with(utts, "", cases, LoadOptions { identity_per_case: true }).unwrap();
        let p = partition_groups(&c, &GroupScheme::FavorableUnfavorable).unwrap();
        let ex = derive_exchanges(&c);
        assert!(p.get("favorable").unwrap().admits_target(&ex.exchanges[0]));
    }

    #[test]
    fn favorable_requires_votes() {
        let utts = r#"{"id":"1","conv_id":"k1","speaker":"j1","text":"q"}"#;
        assert!(matches!(
            partition_groups(&corpus(utts, "", "").unwrap(), &GroupScheme::FavorableUnfavorable),
            Err(Error::InsufficientMetadata(_))
        ));
        let cases = r#"{"case_id":"k1","lawyer_sides":{"l1":"p"}}"#;
        assert!(matches!(
            partition_groups(&corpus(utts, "", cases).unwrap(), &GroupScheme::FavorableUnfavorable),
            Err(Error::InsufficientMetadata(_))
        ));
    }

    #[test]
    fn tertiles_of_nine() {
        let mut utts = String::new();
        utts.push_str("{\"id\":\"root\",\"conv_id\":\"c\",\"speaker\":\"hub\",\"text\":\"x\"}\n");
        for user in 1..=9 {
            for k in 0..user {
                utts.push_str(&format!(
                    "{{\"id\":\"u{user}_{k}\",\"conv_id\":\"c\",\"speaker\":\"{user}\",\"reply_to\":\"root\",\"text\":\"x\"}}\n"
                ));
            }
        }
        let parts: String = (1..=9).map(|u| format!("{{\"id\":\"{u}\",\"labels\":[\"user\"]}}\n")).collect();
        let c = corpus(&utts, &parts, "").unwrap();
        let p = partition_groups(&c, &GroupScheme::parse("volume_tertiles:user").unwrap()).unwrap();
        let ids = |g: &str| p.get(g).unwrap().members.iter().cloned().collect::<Vec<_>>();
        assert_eq!(ids("top"), ["7", "8", "9"]);
        assert_eq!(ids("bottom"), ["1", "2", "3"]);
    }

    #[test]
    fn same_diff_vote_relations() {
        let utts = r#"{"id":"1","conv_id":"rfa1","speaker":"a","text":"x"}
{"id":"2","conv_id":"rfa1","speaker":"b","reply_to":"1","text":"x"}
{"id":"3","conv_id":"rfa1","speaker":"c","reply_to":"2","text":"x"}"#;
        let parts = r#"{"id":"a","stances":{"rfa1":"support"}}
{"id":"b","stances":{"rfa1":"oppose"}}
{"id":"c","stances":{"rfa1":"oppose"}}"#;
        let c = corpus(utts, parts, "").unwrap();
        let p = partition_groups(&c, &GroupScheme::SameDiffVote).unwrap();
        let ex = derive_exchanges(&c);
        assert!(p.get("diff_vote").unwrap().admits_target(&ex.exchanges[0]));
        assert!(p.get("same_vote").unwrap().admits_target(&ex.exchanges[1]));
        assert!(!p.get("same_vote").unwrap().admits_target(&ex.exchanges[0]));
    }

    #[test]
    fn before_after_windows() {
        let day = SECONDS_PER_DAY;
        let mut utts = String::new();
        for (i, t) in [10, 20, 100, 140].iter().enumerate() {
            utts.push_str(&format!(
                "{{\"id\":\"t{i}\",\"conv_id\":\"c\",\"speaker\":\"o\",\"ts\":{},\"text\":\"x\"}}\n\
                 {{\"id\":\"r{i}\",\"conv_id\":\"c\",\"speaker\":\"a\",\"reply_to\":\"t{i}\",\"ts\":{},\"text\":\"x\"}}\n",
                t * day,
                t * day
            ));
        }
        let parts = format!(
            "{{\"id\":\"a\",\"status_events\":[{{\"role\":\"admin\",\"at\":{},\"outcome\":\"promoted\"}}]}}",
            90 * day
        );
        let c = corpus(&utts, &parts, "").unwrap();
        let p = partition_groups(&c, &GroupScheme::parse("before_after:admin:30").unwrap()).unwrap();
        let ex = derive_exchanges(&c);
        let before: Vec<bool> = ex.iter().map(|e| p.get("before").unwrap().admits_speaker(e)).collect();
        let after: Vec<bool> = ex.iter().map(|e| p.get("after").unwrap().admits_speaker(e)).collect();
        assert_eq!(before, [true, true, false, false]);
        assert_eq!(after, [false, false, false, true]);

        let strict = partition_groups(&c, &GroupScheme::parse("before_after:admin:30:2").unwrap()).unwrap();
        assert!(strict.get("after").unwrap().members.is_empty());
    }

    #[test]
    fn by_attr_groups() {
        let utts = r#"{"id":"1","conv_id":"c","speaker":"a","text":"x"}"#;
        let parts = r#"{"id":"a","attrs":{"gender":"female"}}
{"id":"b","attrs":{"gender":"male"}}
{"id":"c"}"#;
        let c = corpus(utts, parts, "").unwrap();
        let p = partition_groups(&c, &GroupScheme::parse("by_attr:gender").unwrap()).unwrap();
        assert_eq!(p.groups.keys().collect::<Vec<_>>(), ["female", "male"]);
    }
}
