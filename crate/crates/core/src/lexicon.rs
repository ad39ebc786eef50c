//! Function-word marker categories, tokenization, and the "exhibits" predicate.
//!
//! A lexicon file is UTF-8 text with one `category<TAB>lexeme` pair per line.
//! Lines starting with `#` and blank lines are ignored. All eight canonical
//! categories must be present; categories may share lexemes.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SHIPPED_LEXICON: &str = include_str!("../data/lexicon.tsv");

/// The eight style marker categories, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Marker {
    Articles,
    AuxiliaryVerbs,
    Conjunctions,
    Adverbs,
    ImpersonalPronouns,
    PersonalPronouns,
    Prepositions,
    Quantifiers,
}

impl Marker {
    pub const COUNT: usize = 8;

    pub const ALL: [Marker; Marker::COUNT] = [
        Marker::Articles,
        Marker::AuxiliaryVerbs,
        Marker::Conjunctions,
        Marker::Adverbs,
        Marker::ImpersonalPronouns,
        Marker::PersonalPronouns,
        Marker::Prepositions,
        Marker::Quantifiers,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Marker::Articles => "articles",
            Marker::AuxiliaryVerbs => "auxiliary_verbs",
            Marker::Conjunctions => "conjunctions",
            Marker::Adverbs => "adverbs",
            Marker::ImpersonalPronouns => "impersonal_pronouns",
            Marker::PersonalPronouns => "personal_pronouns",
            Marker::Prepositions => "prepositions",
            Marker::Quantifiers => "quantifiers",
        }
    }

    pub fn from_name(name: &str) -> Option<Marker> {
        Marker::ALL.into_iter().find(|m| m.name() == name)
    }

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Marker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Bit set over the eight markers; bit `i` is `Marker::ALL[i]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MarkerMask(pub u8);

impl MarkerMask {
    #[inline]
    pub fn contains(self, marker: Marker) -> bool {
        self.0 & (1 << marker.index()) != 0
    }

    #[inline]
    pub fn insert(&mut self, marker: Marker) {
        self.0 |= 1 << marker.index();
    }

    pub fn to_array(self) -> [bool; Marker::COUNT] {
        Marker::ALL.map(|m| self.contains(m))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarkerCategory {
    pub marker: Marker,
    pub lexemes: BTreeSet<String>,
}

impl MarkerCategory {
    pub fn name(&self) -> &'static str {
        self.marker.name()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.lexemes.contains(token)
    }
}

/// Lowercased tokens of one text.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSequence {
    pub tokens: Vec<String>,
}

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(String::as_str)
    }
}

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

/// Lowercases and splits on every character that is neither alphanumeric nor
/// an apostrophe. Apostrophes survive only between other characters of a
/// token; the typographic apostrophe is normalized to `'`.
pub fn tokenize(text: &str) -> TokenSequence {
    let lowered = text.to_lowercase();
    let tokens = lowered
        .split(|c: char| !(c.is_alphanumeric() || is_apostrophe(c)))
        .filter_map(|chunk| {
            let trimmed = chunk.trim_matches(is_apostrophe);
            if trimmed.is_empty() {
                None
            } else {
                Some(trimmed.replace('\u{2019}', "'"))
            }
        })
        .collect();
    TokenSequence { tokens }
}

/// True iff at least one token is a lexeme of the category.
pub fn exhibits(tokens: &TokenSequence, category: &MarkerCategory) -> bool {
    tokens.iter().any(|t| category.contains(t))
}

#[derive(Debug, Clone)]
pub struct Lexicon {
    categories: Vec<MarkerCategory>,
    source_id: String,
    token_masks: HashMap<String, MarkerMask>,
}

impl Lexicon {
    /// The lexicon bundled with the crate.
    pub fn shipped() -> Lexicon {
        Lexicon::parse(SHIPPED_LEXICON, "shipped:lexicon.tsv").expect("shipped lexicon is valid")
    }

    pub fn parse(text: &str, source_id: &str) -> Result<Lexicon> {
        let mut sets: [Option<BTreeSet<String>>; Marker::COUNT] = Default::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let (cat, lexeme) = line.split_once('\t').ok_or_else(|| Error::MalformedRecord {
                source_name: source_id.to_string(),
                line: lineno + 1,
                message: "expected `category<TAB>lexeme`".into(),
            })?;
            let marker = Marker::from_name(cat.trim())
                .ok_or_else(|| Error::MissingCategory(format!("unknown category `{}`", cat.trim())))?;
            let lexeme = lexeme.trim();
            let toks = tokenize(lexeme);
            if toks.tokens.len() != 1 || toks.tokens[0] != lexeme {
                return Err(Error::NonCanonicalLexeme {
                    category: marker.name().into(),
                    lexeme: lexeme.into(),
                });
            }
            let set = sets[marker.index()].get_or_insert_with(BTreeSet::new);
            if !set.insert(lexeme.to_string()) {
                return Err(Error::DuplicateLexeme {
                    category: marker.name().into(),
                    lexeme: lexeme.into(),
                });
            }
        }

        let mut categories = Vec::with_capacity(Marker::COUNT);
        for (marker, set) in Marker::ALL.into_iter().zip(sets) {
            match set {
                Some(lexemes) if !lexemes.is_empty() => categories.push(MarkerCategory { marker, lexemes }),
                _ => return Err(Error::MissingCategory(format!("category `{marker}` is missing"))),
            }
        }

        let mut token_masks: HashMap<String, MarkerMask> = HashMap::new();
        for cat in &categories {
            for lexeme in &cat.lexemes {
                token_masks.entry(lexeme.clone()).or_default().insert(cat.marker);
            }
        }

        Ok(Lexicon {
            categories,
            source_id: source_id.to_string(),
            token_masks,
        })
    }

    pub fn categories(&self) -> &[MarkerCategory] {
        &self.categories
    }

    pub fn category(&self, marker: Marker) -> &MarkerCategory {
        &self.categories[marker.index()]
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    pub fn total_lexemes(&self) -> usize {
        self.categories.iter().map(|c| c.lexemes.len()).sum()
    }

    /// Markers a single token belongs to.
    #[inline]
    pub fn token_mask(&self, token: &str) -> MarkerMask {
        self.token_masks.get(token).copied().unwrap_or_default()
    }

    pub fn is_lexeme(&self, token: &str) -> bool {
        self.token_masks.contains_key(token)
    }

    /// Exhibit mask of a token sequence: bit `i` set iff `exhibits(tokens, category_i)`.
    pub fn exhibit_mask(&self, tokens: &TokenSequence) -> MarkerMask {
        tokens
            .iter()
            .fold(MarkerMask::default(), |acc, t| MarkerMask(acc.0 | self.token_mask(t).0))
    }

    /// Number of tokens that are lexemes of each marker.
    pub fn marker_counts(&self, tokens: &TokenSequence) -> [usize; Marker::COUNT] {
        let mut counts = [0; Marker::COUNT];
        for t in tokens.iter() {
            let mask = self.token_mask(t);
            for m in Marker::ALL {
                if mask.contains(m) {
                    counts[m.index()] += 1;
                }
            }
        }
        counts
    }

    /// Lexemes that belong to exactly one category.
    pub fn exclusive_lexemes(&self, marker: Marker) -> Vec<&str> {
        self.category(marker)
            .lexemes
            .iter()
            .filter(|l| self.token_mask(l).0.count_ones() == 1)
            .map(String::as_str)
            .collect()
    }
}

pub fn load_lexicon(path: impl AsRef<Path>) -> Result<Lexicon> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Lexicon::parse(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(words: &[&str]) -> TokenSequence {
        TokenSequence {
            tokens: words.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("I don't know.").tokens, vec!["i", "don't", "know"]);
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("The THE the").tokens, vec!["the", "the", "the"]);
        assert_eq!(tokenize("'quoted' rock'n'roll --").tokens, vec!["quoted", "rock'n'roll"]);
        assert_eq!(tokenize("it\u{2019}s").tokens, vec!["it's"]);
    }

    #[test]
    fn shipped_lexicon_loads() {
        let lex = Lexicon::shipped();
        let names: Vec<_> = lex.categories().iter().map(|c| c.name()).collect();
        assert_eq!(
            names,
            [
                "articles",
                "auxiliary_verbs",
                "conjunctions",
                "adverbs",
                "impersonal_pronouns",
                "personal_pronouns",
                "prepositions",
                "quantifiers"
            ]
        );
        assert_eq!(lex.total_lexemes(), 331);
        for m in Marker::ALL {
            assert!(!lex.exclusive_lexemes(m).is_empty(), "{m}");
        }
    }

    #[test]
    fn duplicate_lexeme_rejected() {
        let mut text = SHIPPED_LEXICON.to_string();
        text.push_str("articles\tthe\n");
        assert!(matches!(
            Lexicon::parse(&text, "t"),
            Err(Error::DuplicateLexeme { ref lexeme, .. }) if lexeme == "the"
        ));
    }

    #[test]
    fn missing_category_rejected() {
        let text: String = SHIPPED_LEXICON
            .lines()
            .filter(|l| !l.starts_with("quantifiers"))
            .map(|l| format!("{l}\n"))
            .collect();
        assert!(matches!(Lexicon::parse(&text, "t"), Err(Error::MissingCategory(_))));
        assert!(matches!(
            Lexicon::parse("negation\tnot\n", "t"),
            Err(Error::MissingCategory(_))
        ));
    }

    #[test]
    fn non_canonical_lexeme_rejected() {
        let text = format!("{SHIPPED_LEXICON}articles\tThe\n");
        assert!(matches!(Lexicon::parse(&text, "t"), Err(Error::NonCanonicalLexeme { .. })));
        let text = format!("{SHIPPED_LEXICON}prepositions\tin front\n");
        assert!(matches!(Lexicon::parse(&text, "t"), Err(Error::NonCanonicalLexeme { .. })));
    }

    #[test]
    fn exhibits_examples() {
        let lex = Lexicon::shipped();
        let articles = lex.category(Marker::Articles);
        assert!(exhibits(&toks(&["the", "cat"]), articles));
        assert!(!exhibits(&toks(&[]), articles));
        assert!(!exhibits(&toks(&["cat", "sat"]), articles));
        assert!(lex.exhibit_mask(&toks(&["the", "cat"])).contains(Marker::Articles));
    }

    #[test]
    fn every_shipped_lexeme_is_canonical() {
        let lex = Lexicon::shipped();
        for cat in lex.categories() {
            for l in &cat.lexemes {
                assert_eq!(tokenize(l).tokens, vec![l.clone()]);
            }
        }
    }

    fn word() -> impl Strategy<Value = String> {
        prop_oneof![
            Just("the".to_string()),
            Just("and".to_string()),
            Just("of".to_string()),
            "[a-z]{1,6}",
        ]
    }

    proptest! {
        #[test]
        fn exhibits_is_monotone(u in prop::collection::vec(word(), 0..8), v in prop::collection::vec(word(), 0..8)) {
            let lex = Lexicon::shipped();
            let a = TokenSequence { tokens: u.clone() };
            let mut joined = u.clone();
            joined.extend(v);
            let b = TokenSequence { tokens: joined };
            for cat in lex.categories() {
                if exhibits(&a, cat) {
                    prop_assert!(exhibits(&b, cat));
                }
            }
        }

        #[test]
        fn exhibits_depends_only_on_token_set(u in prop::collection::vec(word(), 0..10)) {
            let lex = Lexicon::shipped();
            let mut set: Vec<String> = u.clone();
            set.sort();
            set.dedup();
            set.reverse();
            let a = TokenSequence { tokens: u };
            let b = TokenSequence { tokens: set };
            prop_assert_eq!(lex.exhibit_mask(&a), lex.exhibit_mask(&b));
            for cat in lex.categories() {
                prop_assert_eq!(exhibits(&a, cat), exhibits(&b, cat));
            }
        }

        #[test]
        fn tokenize_idempotent(text in "\\PC{0,60}") {
            let once = tokenize(&text);
            let twice = tokenize(&once.tokens.join(" "));
            prop_assert_eq!(once, twice);
        }
    }
}
