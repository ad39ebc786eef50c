//! Group selectors:
//!
//! * `all`: everyone
//! * `<label>` or `label:<label>`: participants carrying the label
//! * `attr:<key>=<value>`: participants whose attribute matches
//! * `<scheme>/<group>`: one group of a partition scheme, for example
//!   `before_after:admin:30/after`, `favorable_unfavorable/favorable` or
//!   `volume_tertiles/top`

use coordlab::corpus::{partition_groups, Corpus, Group, GroupScheme};
use coordlab::{Error, Result};

pub fn resolve(corpus: &Corpus, selector: &str) -> Result<Group> {
    if selector == "all" {
        return Ok(Group::everyone());
    }
    let group = if let Some((scheme, label)) = selector.rsplit_once('/') {
        let partition = partition_groups(corpus, &GroupScheme::parse(scheme)?)?;
        let mut g = partition.get(label)?.clone();
        g.label = selector.to_string();
        g
    } else if let Some(kv) = selector.strip_prefix("attr:") {
        let (key, value) = kv
            .split_once('=')
            .ok_or_else(|| Error::UnknownScheme(format!("attribute selector `{selector}` needs key=value")))?;
        let members = corpus
            .participants()
            .values()
            .filter(|p| p.attrs.get(key).map(String::as_str) == Some(value))
            .map(|p| p.id.clone());
        Group::of(selector, members)
    } else {
        let label = selector.strip_prefix("label:").unwrap_or(selector);
        Group::of(selector, corpus.with_label(label))
    };
    if group.members.is_empty() {
        return Err(Error::EmptyGroup(format!("selector `{selector}` matches no participant")));
    }
    Ok(group)
}
