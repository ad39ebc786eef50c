use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexicon::{tokenize, Lexicon, Marker};

/// A rate given once for all markers, as eight values in canonical order,
/// or by marker name (unnamed markers take `default`, or 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerMarker {
    Scalar(f64),
    List(Vec<f64>),
    Named(BTreeMap<String, f64>),
}

impl Default for PerMarker {
    fn default() -> Self {
        PerMarker::Scalar(0.0)
    }
}

impl PerMarker {
    pub fn resolve(&self) -> Result<[f64; Marker::COUNT]> {
        match self {
            PerMarker::Scalar(v) => Ok([*v; Marker::COUNT]),
            PerMarker::List(vs) => {
                let arr: [f64; Marker::COUNT] = vs.as_slice().try_into().map_err(|_| {
                    Error::InvalidSpec(format!("per-marker list needs {} values, got {}", Marker::COUNT, vs.len()))
                })?;
                Ok(arr)
            }
            PerMarker::Named(map) => {
                let default = map.get("default").copied().unwrap_or(0.0);
                let mut out = [default; Marker::COUNT];
                for (k, v) in map {
                    if k == "default" {
                        continue;
                    }
                    let m = Marker::from_name(k).ok_or_else(|| Error::InvalidSpec(format!("unknown marker `{k}`")))?;
                    out[m.index()] = *v;
                }
                Ok(out)
            }
        }
    }
}

fn half() -> PerMarker {
    PerMarker::Scalar(0.5)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSpec {
    pub name: String,
    pub size: usize,
    #[serde(default)]
    pub labels: Vec<String>,
    pub domain: String,
    /// Baseline reply rate p when speaking.
    #[serde(default)]
    pub p: PerMarker,
    /// Trigger boost when speaking, unless an interaction overrides it.
    #[serde(default)]
    pub delta: PerMarker,
    /// Exhibit rate q of this group's utterances when replied to.
    #[serde(default = "half")]
    pub q: PerMarker,
    /// One of these is added to every utterance of the group.
    #[serde(default)]
    pub cue_words: Vec<String>,
    #[serde(default)]
    pub attrs: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InteractionSpec {
    pub speakers: String,
    pub targets: String,
    pub exchanges_per_speaker: usize,
    /// Speaker `i` talks to targets `(i + j) mod |targets|`, `j < partners`.
    #[serde(default = "one")]
    pub partners: usize,
    /// Overrides the speaker group's delta for this target group.
    #[serde(default)]
    pub delta: Option<PerMarker>,
    /// Also emit, per exchange, one exchange where the partner replies to the speaker.
    #[serde(default)]
    pub reciprocal: bool,
    /// Delta of the partner in reciprocal exchanges.
    #[serde(default)]
    pub reverse_delta: Option<PerMarker>,
}

fn one() -> usize {
    1
}

fn admin() -> String {
    "admin".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventSpec {
    pub group: String,
    pub at: i64,
    /// New delta of the group's members as speakers from `at` on.
    #[serde(default)]
    pub speaker_delta: Option<PerMarker>,
    /// New delta of everyone else towards the group from `at` on.
    #[serde(default)]
    pub target_delta: Option<PerMarker>,
    /// Status role written to the participants file as a promotion at `at`.
    #[serde(default = "admin")]
    pub role: String,
}

fn default_start() -> i64 {
    1_000_000_000
}

fn default_step() -> i64 {
    600
}

fn default_filler_len() -> usize {
    6
}

/// Generator configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenSpec {
    pub seed: u64,
    /// Filler vocabulary per domain.
    pub domains: BTreeMap<String, Vec<String>>,
    pub groups: Vec<GroupSpec>,
    pub interactions: Vec<InteractionSpec>,
    #[serde(default)]
    pub events: Vec<EventSpec>,
    #[serde(default = "default_start")]
    pub start_ts: i64,
    /// Seconds between a speaker's consecutive exchanges.
    #[serde(default = "default_step")]
    pub step_secs: i64,
    #[serde(default = "default_filler_len")]
    pub filler_len: usize,
}

/// Rates resolved to per-marker arrays.
#[derive(Debug, Clone)]
pub(crate) struct ResolvedGroup {
    pub p: [f64; Marker::COUNT],
    pub delta: [f64; Marker::COUNT],
    pub q: [f64; Marker::COUNT],
}

impl GenSpec {
    pub fn from_json(text: &str) -> Result<GenSpec> {
        serde_json::from_str(text).map_err(|e| Error::InvalidSpec(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<GenSpec> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        GenSpec::from_json(&text)
    }

    pub fn group(&self, name: &str) -> Result<&GroupSpec> {
        self.groups
            .iter()
            .find(|g| g.name == name)
            .ok_or_else(|| Error::InvalidSpec(format!("unknown group `{name}`")))
    }

    pub(crate) fn group_index(&self, name: &str) -> Result<usize> {
        self.groups
            .iter()
            .position(|g| g.name == name)
            .ok_or_else(|| Error::InvalidSpec(format!("unknown group `{name}`")))
    }

    pub(crate) fn resolved(&self) -> Result<Vec<ResolvedGroup>> {
        self.groups
            .iter()
            .map(|g| {
                Ok(ResolvedGroup {
                    p: g.p.resolve()?,
                    delta: g.delta.resolve()?,
                    q: g.q.resolve()?,
                })
            })
            .collect()
    }

    /// Checks every rate and vocabulary constraint against `lexicon`.
    pub fn validate(&self, lexicon: &Lexicon) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        if self.step_secs < 2 {
            return bad(format!("step_secs must be at least 2, got {}", self.step_secs));
        }
        for m in Marker::ALL {
            if lexicon.exclusive_lexemes(m).is_empty() {
                return bad(format!("lexicon category {m} has no lexeme of its own"));
            }
        }
        for (domain, words) in &self.domains {
            if words.is_empty() {
                return bad(format!("domain `{domain}` has an empty filler vocabulary"));
            }
            check_words(words, lexicon, &format!("filler word of domain `{domain}`"))?;
        }

        let resolved = self.resolved()?;
        let mut names = BTreeSet::new();
        for (g, r) in self.groups.iter().zip(&resolved) {
            if !names.insert(g.name.as_str()) {
                return bad(format!("duplicate group `{}`", g.name));
            }
            if g.size == 0 {
                return bad(format!("group `{}` is empty", g.name));
            }
            if g.name.is_empty() || g.name.contains(['@', ' ']) {
                return bad(format!("group name `{}` must be non-empty without spaces or `@`", g.name));
            }
            if !self.domains.contains_key(&g.domain) {
                return bad(format!("group `{}` uses unknown domain `{}`", g.name, g.domain));
            }
            check_words(&g.cue_words, lexicon, &format!("cue word of group `{}`", g.name))?;
            for m in Marker::ALL {
                let (p, q) = (r.p[m.index()], r.q[m.index()]);
                if !(0.0..=1.0).contains(&p) {
                    return bad(format!("group `{}`: p = {p} for {m} is outside [0, 1]", g.name));
                }
                if !(q > 0.0 && q < 1.0) {
                    return bad(format!("group `{}`: q = {q} for {m} is outside (0, 1)", g.name));
                }
            }
            check_delta(&r.p, &r.delta, &g.name, "delta")?;
        }

        for (k, it) in self.interactions.iter().enumerate() {
            let s = self.group_index(&it.speakers)?;
            let t = self.group_index(&it.targets)?;
            if it.exchanges_per_speaker == 0 || it.partners == 0 {
                return bad(format!("interaction {k}: exchanges_per_speaker and partners must be positive"));
            }
            let available = self.groups[t].size - usize::from(s == t);
            if it.partners > available {
                return bad(format!("interaction {k}: {} partners requested but only {available} available", it.partners));
            }
            if let Some(d) = &it.delta {
                check_delta(&resolved[s].p, &d.resolve()?, &it.speakers, &format!("interaction {k} delta"))?;
            }
            if let Some(d) = &it.reverse_delta {
                check_delta(&resolved[t].p, &d.resolve()?, &it.targets, &format!("interaction {k} reverse_delta"))?;
            }
        }

        for (k, ev) in self.events.iter().enumerate() {
            let g = self.group_index(&ev.group)?;
            if let Some(d) = &ev.speaker_delta {
                check_delta(&resolved[g].p, &d.resolve()?, &ev.group, &format!("event {k} speaker_delta"))?;
            }
            if let Some(d) = &ev.target_delta {
                for it in self.interactions.iter().filter(|it| it.targets == ev.group) {
                    let s = self.group_index(&it.speakers)?;
                    check_delta(&resolved[s].p, &d.resolve()?, &it.speakers, &format!("event {k} target_delta"))?;
                }
            }
        }
        if self.events.iter().map(|e| &e.group).collect::<BTreeSet<_>>().len() != self.events.len() {
            return bad("at most one event per group".into());
        }
        Ok(())
    }
}

fn check_words(words: &[String], lexicon: &Lexicon, what: &str) -> Result<()> {
    for w in words {
        let toks = tokenize(w);
        if toks.tokens.len() != 1 || toks.tokens[0] != *w {
            return Err(Error::InvalidSpec(format!("{what} `{w}` is not a single lowercase token")));
        }
        if lexicon.is_lexeme(w) {
            return Err(Error::InvalidSpec(format!("{what} `{w}` is a marker lexeme")));
        }
    }
    Ok(())
}

fn check_delta(p: &[f64; Marker::COUNT], delta: &[f64; Marker::COUNT], group: &str, what: &str) -> Result<()> {
    for m in Marker::ALL {
        let hi = p[m.index()] + delta[m.index()];
        if !(0.0..=1.0).contains(&hi) || !delta[m.index()].is_finite() {
            return Err(Error::InvalidSpec(format!(
                "group `{group}`, {what}: p + delta = {hi} for {m} is outside [0, 1]"
            )));
        }
    }
    Ok(())
}
