//! Synthetic conversations with a known answer.
//!
//! Every exchange is a two-utterance conversation. The target utterance
//! exhibits marker m with probability q (one exclusive lexeme of m is
//! inserted among filler words) and the reply exhibits m with probability
//! p + delta when the target did, p otherwise. Then
//!
//! ```text
//! P(reply | target) - P(reply) = (p + delta) - (p + q * delta) = delta * (1 - q)
//! ```
//!
//! which is what [`expected_coordination`] returns.

mod spec;

use std::io::Write;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use spec::{EventSpec, GenSpec, GroupSpec, InteractionSpec, PerMarker};

use crate::corpus::{make_utterance, Corpus, LoadOptions, Outcome, Participant, StatusEvent};
use crate::error::{Error, Result};
use crate::exec::{self, Parallelism};
use crate::lexicon::{Lexicon, Marker, MarkerMask};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthUtterance {
    pub id: String,
    pub conv_id: String,
    pub speaker: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reply_to: Option<String>,
    pub ts: i64,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthParticipant {
    pub id: String,
    pub labels: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub status_events: Vec<StatusEvent>,
    #[serde(skip_serializing_if = "std::collections::BTreeMap::is_empty")]
    pub attrs: std::collections::BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratedCorpus {
    pub utterances: Vec<SynthUtterance>,
    pub participants: Vec<SynthParticipant>,
}

fn write_jsonl<W: Write, T: Serialize>(out: &mut W, rows: &[T]) -> Result<()> {
    for r in rows {
        serde_json::to_writer(&mut *out, r)?;
        out.write_all(b"\n").map_err(|e| Error::io("<output>", e))?;
    }
    Ok(())
}

impl GeneratedCorpus {
    pub fn write_utterances<W: Write>(&self, out: &mut W) -> Result<()> {
        write_jsonl(out, &self.utterances)
    }

    pub fn write_participants<W: Write>(&self, out: &mut W) -> Result<()> {
        write_jsonl(out, &self.participants)
    }

    pub fn n_exchanges(&self) -> usize {
        self.utterances.iter().filter(|u| u.reply_to.is_some()).count()
    }

    /// Builds the corpus directly, without a JSONL round trip.
    pub fn to_corpus(&self, lexicon: &Lexicon) -> Result<Corpus> {
        let utts = self
            .utterances
            .iter()
            .map(|u| {
                make_utterance(
                    lexicon,
                    u.id.clone(),
                    u.conv_id.clone(),
                    u.speaker.clone(),
                    u.reply_to.clone(),
                    Some(u.ts),
                    u.text.clone(),
                    None,
                )
            })
            .collect();
        let parts = self
            .participants
            .iter()
            .map(|p| Participant {
                id: p.id.clone(),
                group_labels: p.labels.iter().cloned().collect(),
                status_events: p.status_events.clone(),
                stances: Default::default(),
                attrs: p.attrs.clone(),
            })
            .collect();
        Corpus::from_parts(utts, parts, vec![], LoadOptions::default())
    }
}

/// Participant id of member `i` of `group`.
pub fn member_id(spec: &GenSpec, group: &str, i: usize) -> String {
    let size = spec.groups.iter().find(|g| g.name == group).map_or(1, |g| g.size);
    let width = size.saturating_sub(1).to_string().len();
    format!("{group}-{i:0width$}")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleValue {
    pub marker: Marker,
    pub expected: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleEntry {
    pub speaker_group: String,
    pub target_group: String,
    /// `base`, or `after_event` for exchanges at or after a scheduled event.
    pub phase: String,
    pub values: Vec<OracleValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Oracle {
    pub formula: String,
    pub entries: Vec<OracleEntry>,
}

/// Delta of `replier` towards `target` in the given phase.
fn effective_delta(
    spec: &GenSpec,
    resolved: &[spec::ResolvedGroup],
    replier: usize,
    target: usize,
    override_delta: Option<&PerMarker>,
    (replier_after, target_after): (bool, bool),
) -> Result<[f64; Marker::COUNT]> {
    let event = |g: usize| spec.events.iter().find(|e| e.group == spec.groups[g].name);
    if replier_after {
        if let Some(d) = event(replier).and_then(|e| e.speaker_delta.as_ref()) {
            return d.resolve();
        }
    }
    if target_after {
        if let Some(d) = event(target).and_then(|e| e.target_delta.as_ref()) {
            return d.resolve();
        }
    }
    match override_delta {
        Some(d) => d.resolve(),
        None => Ok(resolved[replier].delta),
    }
}

/// Closed-form coordination of `speaker_group` towards `target_group`
/// (by default the first group it speaks to) before any event.
pub fn expected_coordination(
    spec: &GenSpec,
    speaker_group: &str,
    target_group: Option<&str>,
    marker: Marker,
) -> Result<OracleValue> {
    let oracle = oracle(spec)?;
    let entry = oracle
        .entries
        .iter()
        .find(|e| e.phase == "base" && e.speaker_group == speaker_group && target_group.is_none_or(|t| e.target_group == t))
        .ok_or_else(|| {
            Error::InvalidSpec(format!(
                "group `{speaker_group}` never replies to `{}`",
                target_group.unwrap_or("anyone")
            ))
        })?;
    Ok(entry.values[marker.index()])
}

/// Expected coordination for every replier/target group direction and phase.
pub fn oracle(spec: &GenSpec) -> Result<Oracle> {
    let resolved = spec.resolved()?;
    let mut entries: Vec<OracleEntry> = Vec::new();
    let mut push = |replier: usize, target: usize, d: Option<&PerMarker>| -> Result<()> {
        let phases: &[bool] = if spec.events.is_empty() { &[false] } else { &[false, true] };
        for &after in phases {
            let delta = effective_delta(spec, &resolved, replier, target, d, (after, after))?;
            let q = resolved[target].q;
            let values = Marker::ALL
                .map(|m| OracleValue {
                    marker: m,
                    expected: delta[m.index()] * (1.0 - q[m.index()]),
                })
                .to_vec();
            let entry = OracleEntry {
                speaker_group: spec.groups[replier].name.clone(),
                target_group: spec.groups[target].name.clone(),
                phase: if after { "after_event" } else { "base" }.into(),
                values,
            };
            if !entries.contains(&entry) {
                entries.push(entry);
            }
        }
        Ok(())
    };
    for it in &spec.interactions {
        let s = spec.group_index(&it.speakers)?;
        let t = spec.group_index(&it.targets)?;
        push(s, t, it.delta.as_ref())?;
        if it.reciprocal {
            push(t, s, it.reverse_delta.as_ref())?;
        }
    }
    Ok(Oracle {
        formula: "delta * (1 - q)".into(),
        entries,
    })
}

struct Ctx<'a> {
    spec: &'a GenSpec,
    resolved: Vec<spec::ResolvedGroup>,
    exclusive: Vec<Vec<&'a str>>,
    /// Per group: event time, if any.
    event_at: Vec<Option<i64>>,
}

impl Ctx<'_> {
    fn delta_at(&self, replier: usize, target: usize, override_delta: Option<&PerMarker>, ts: i64) -> Result<[f64; Marker::COUNT]> {
        let after = |g: usize| self.event_at[g].is_some_and(|at| ts >= at);
        effective_delta(self.spec, &self.resolved, replier, target, override_delta, (after(replier), after(target)))
    }

    fn utterance_text(&self, rng: &mut ChaCha8Rng, group: usize, mask: MarkerMask) -> String {
        let g = &self.spec.groups[group];
        let filler = &self.spec.domains[&g.domain];
        let mut words: Vec<&str> = (0..self.spec.filler_len)
            .map(|_| filler.choose(rng).map(String::as_str).unwrap_or_default())
            .collect();
        if let Some(cue) = g.cue_words.choose(rng) {
            words.push(cue);
        }
        for m in Marker::ALL {
            if mask.contains(m) {
                words.push(self.exclusive[m.index()].choose(rng).copied().unwrap_or_default());
            }
        }
        words.shuffle(rng);
        words.join(" ")
    }

    /// One target utterance and its reply, both in a fresh conversation.
    #[allow(clippy::too_many_arguments)]
    fn exchange(
        &self,
        rng: &mut ChaCha8Rng,
        conv: String,
        replier: (usize, &str),
        target: (usize, &str),
        override_delta: Option<&PerMarker>,
        ts: i64,
        out: &mut Vec<SynthUtterance>,
    ) -> Result<()> {
        let q = self.resolved[target.0].q;
        let p = self.resolved[replier.0].p;
        let delta = self.delta_at(replier.0, target.0, override_delta, ts + 1)?;
        let mut tmask = MarkerMask::default();
        let mut rmask = MarkerMask::default();
        for m in Marker::ALL {
            let i = m.index();
            let t = rng.random_bool(q[i]);
            if t {
                tmask.insert(m);
            }
            let rate = if t { p[i] + delta[i] } else { p[i] };
            if rng.random_bool(rate.clamp(0.0, 1.0)) {
                rmask.insert(m);
            }
        }
        let target_id = format!("{conv}-t");
        out.push(SynthUtterance {
            id: target_id.clone(),
            conv_id: conv.clone(),
            speaker: target.1.to_string(),
            reply_to: None,
            ts,
            text: self.utterance_text(rng, target.0, tmask),
        });
        out.push(SynthUtterance {
            id: format!("{conv}-r"),
            conv_id: conv,
            speaker: replier.1.to_string(),
            reply_to: Some(target_id),
            ts: ts + 1,
            text: self.utterance_text(rng, replier.0, rmask),
        });
        Ok(())
    }
}

/// Generates the corpus described by `spec`. Each (interaction, speaker)
/// has its own random stream, so output does not depend on `mode`.
pub fn generate(spec: &GenSpec, lexicon: &Lexicon, mode: Parallelism) -> Result<GeneratedCorpus> {
    spec.validate(lexicon)?;
    let event_at = spec
        .groups
        .iter()
        .map(|g| spec.events.iter().find(|e| e.group == g.name).map(|e| e.at))
        .collect();
    let ctx = Ctx {
        spec,
        resolved: spec.resolved()?,
        exclusive: Marker::ALL.iter().map(|&m| lexicon.exclusive_lexemes(m)).collect(),
        event_at,
    };

    let mut jobs = Vec::new();
    for (k, it) in spec.interactions.iter().enumerate() {
        let s = spec.group_index(&it.speakers)?;
        let t = spec.group_index(&it.targets)?;
        for i in 0..spec.groups[s].size {
            jobs.push((k, s, t, i));
        }
    }

    let chunks = exec::map(mode, &jobs, |&(k, s, t, i)| -> Result<Vec<SynthUtterance>> {
        let it = &spec.interactions[k];
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(((k as u64) << 32) | i as u64);
        let speaker = member_id(spec, &it.speakers, i);
        let n_targets = spec.groups[t].size;
        // Partners skip the speaker when a group talks to itself.
        let shift = usize::from(s == t);
        let partners: Vec<String> = (0..it.partners)
            .map(|j| member_id(spec, &it.targets, (i + j + shift) % n_targets))
            .collect();
        let mut out = Vec::with_capacity(it.exchanges_per_speaker * if it.reciprocal { 4 } else { 2 });
        for e in 0..it.exchanges_per_speaker {
            let partner = &partners[e % partners.len()];
            let ts = spec.start_ts + e as i64 * spec.step_secs;
            let conv = format!("i{k}-{speaker}-{e}");
            ctx.exchange(&mut rng, conv.clone(), (s, &speaker), (t, partner), it.delta.as_ref(), ts, &mut out)?;
            if it.reciprocal {
                let back = format!("{conv}-b");
                ctx.exchange(&mut rng, back, (t, partner), (s, &speaker), it.reverse_delta.as_ref(), ts, &mut out)?;
            }
        }
        Ok(out)
    });
    let mut utterances = Vec::new();
    for c in chunks {
        utterances.extend(c?);
    }

    let mut participants = Vec::new();
    for g in &spec.groups {
        let event = spec.events.iter().find(|e| e.group == g.name);
        for i in 0..g.size {
            participants.push(SynthParticipant {
                id: member_id(spec, &g.name, i),
                labels: g.labels.clone(),
                status_events: event
                    .map(|e| StatusEvent {
                        role: e.role.clone(),
                        at: e.at,
                        outcome: Outcome::Promoted,
                    })
                    .into_iter()
                    .collect(),
                attrs: g.attrs.clone(),
            });
        }
    }
    Ok(GeneratedCorpus {
        utterances,
        participants,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coordination::{coord_marker, Thresholds};
    use crate::corpus::derive_exchanges;

    fn spec_json(delta: f64, q: f64, n: usize) -> String {
        format!(
            r#"{{"seed": 5, "domains": {{"d": ["blorp", "zint", "quax"]}},
            "groups": [
              {{"name": "s", "size": 1, "domain": "d", "p": 0.2, "delta": {delta}}},
              {{"name": "t", "size": 1, "domain": "d", "q": {q}}}
            ],
            "interactions": [{{"speakers": "s", "targets": "t", "exchanges_per_speaker": {n}}}]}}"#
        )
    }

    #[test]
    fn closed_form_examples() {
        let s = GenSpec::from_json(&spec_json(0.4, 0.5, 10)).unwrap();
        assert!((expected_coordination(&s, "s", None, Marker::Articles).unwrap().expected - 0.2).abs() < 1e-15);
        let s0 = GenSpec::from_json(&spec_json(0.0, 0.5, 10)).unwrap();
        assert_eq!(expected_coordination(&s0, "s", Some("t"), Marker::Quantifiers).unwrap().expected, 0.0);
        let near_one = GenSpec::from_json(&spec_json(0.4, 0.999_999, 10)).unwrap();
        assert!(expected_coordination(&near_one, "s", None, Marker::Articles).unwrap().expected < 1e-6);
    }

    #[test]
    fn recovers_the_oracle() {
        let lex = Lexicon::shipped();
        let s = GenSpec::from_json(&spec_json(0.4, 0.5, 100_000)).unwrap();
        let g = generate(&s, &lex, Parallelism::default()).unwrap();
        let c = g.to_corpus(&lex).unwrap();
        let ex = derive_exchanges(&c);
        assert_eq!(ex.len(), 100_000);
        let v = coord_marker(&ex.exchanges, Marker::Articles, Thresholds::default()).value.unwrap();
        assert!((v - 0.2).abs() < 0.01, "{v}");
    }

    #[test]
    fn byte_identical_across_runs_and_modes() {
        let lex = Lexicon::shipped();
        let s = GenSpec::from_json(&spec_json(0.3, 0.4, 200)).unwrap();
        let render = |mode| {
            let g = generate(&s, &lex, mode).unwrap();
            let mut buf = Vec::new();
            g.write_utterances(&mut buf).unwrap();
            g.write_participants(&mut buf).unwrap();
            buf
        };
        let a = render(Parallelism::Rayon);
        assert_eq!(a, render(Parallelism::Sequential));
        assert_eq!(a, render(Parallelism::Rayon));
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let lex = Lexicon::shipped();
        let too_high = GenSpec::from_json(&spec_json(0.9, 0.5, 1)).unwrap();
        assert_eq!(too_high.validate(&lex).unwrap_err().kind(), "InvalidSpec");
        let q_one = GenSpec::from_json(&spec_json(0.1, 1.0, 1)).unwrap();
        assert_eq!(q_one.validate(&lex).unwrap_err().kind(), "InvalidSpec");
        let lexeme_filler = spec_json(0.1, 0.5, 1).replace("\"zint\"", "\"the\"");
        let s = GenSpec::from_json(&lexeme_filler).unwrap();
        assert_eq!(s.validate(&lex).unwrap_err().kind(), "InvalidSpec");
    }

    #[test]
    fn generated_text_exhibits_only_planted_markers() {
        let lex = Lexicon::shipped();
        let s = GenSpec::from_json(&spec_json(0.4, 0.5, 50)).unwrap();
        let ctx = Ctx {
            spec: &s,
            resolved: s.resolved().unwrap(),
            exclusive: Marker::ALL.iter().map(|&m| lex.exclusive_lexemes(m)).collect(),
            event_at: vec![None, None],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for bits in 0..=255u8 {
            let text = ctx.utterance_text(&mut rng, 0, MarkerMask(bits));
            assert_eq!(lex.exhibit_mask(&crate::lexicon::tokenize(&text)), MarkerMask(bits), "{text}");
        }
    }
}
