//! Tagged text input, tag events and vocabularies.

use std::io::BufRead;

use indexmap::IndexMap;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedToken {
    pub word: String,
    /// Lowercased POS tag.
    pub tag: String,
}

impl TaggedToken {
    pub fn new(word: impl Into<String>, tag: impl AsRef<str>) -> Self {
        TaggedToken { word: word.into(), tag: tag.as_ref().to_lowercase() }
    }
}

/// The automaton's input alphabet, plus `Noun` (which triggers emission) and
/// `Other` (which does nothing).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TagEvent {
    Verb,
    Preposition,
    NewClause,
    Noun,
    Other,
}

const CLAUSE_TAGS: [&str; 6] = [".", ":", ";", "!", "?", "cs"];

/// Maps tags to events. Only the noun rule is configurable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagClassifier {
    noun_prefixes: Vec<String>,
}

impl Default for TagClassifier {
    fn default() -> Self {
        TagClassifier { noun_prefixes: vec!["nn".to_string()] }
    }
}

impl TagClassifier {
    pub fn with_noun_prefixes<I, S>(prefixes: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        TagClassifier { noun_prefixes: prefixes.into_iter().map(|p| p.into().to_lowercase()).collect() }
    }

    pub fn noun_prefixes(&self) -> &[String] {
        &self.noun_prefixes
    }

    pub fn classify(&self, tag: &str) -> TagEvent {
        if tag.starts_with(['v', 'b', 'h']) {
            TagEvent::Verb
        } else if tag == "in" {
            TagEvent::Preposition
        } else if CLAUSE_TAGS.contains(&tag) || tag.starts_with('w') {
            TagEvent::NewClause
        } else if self.noun_prefixes.iter().any(|p| !p.is_empty() && tag.starts_with(p.as_str())) {
            TagEvent::Noun
        } else {
            TagEvent::Other
        }
    }
}

/// Classifies with the default noun prefix set `{"nn"}`.
pub fn classify_tag(tag: &str) -> TagEvent {
    TagClassifier::default().classify(tag)
}

/// Parses `word<TAB>tag` lines. Blank lines are skipped; tags are lowercased.
pub fn parse_tagged_stream<R: BufRead>(reader: R) -> Result<Vec<TaggedToken>> {
    let mut tokens = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::Parse { line: lineno, message: e.to_string() })?;
        if let Some(token) = parse_line(&line, lineno)? {
            tokens.push(token);
        }
    }
    Ok(tokens)
}

pub fn parse_tagged_str(text: &str) -> Result<Vec<TaggedToken>> {
    parse_tagged_stream(text.as_bytes())
}

fn parse_line(line: &str, lineno: usize) -> Result<Option<TaggedToken>> {
    let line = line.strip_suffix('\r').unwrap_or(line);
    if line.trim().is_empty() {
        return Ok(None);
    }
    let mut fields = line.split('\t');
    let (word, tag) = match (fields.next(), fields.next(), fields.next()) {
        (Some(w), Some(t), None) => (w, t),
        (_, None, _) => {
            return Err(Error::Parse { line: lineno, message: "expected word<TAB>tag, found no tab".into() })
        }
        _ => {
            return Err(Error::Parse { line: lineno, message: "expected word<TAB>tag, found more than one tab".into() })
        }
    };
    if word.is_empty() || tag.is_empty() {
        return Err(Error::Parse { line: lineno, message: "empty word or tag".into() });
    }
    Ok(Some(TaggedToken::new(word, tag)))
}

/// Token strings with dense ids (first-occurrence order) and counts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    entries: IndexMap<String, u64>,
    total: u64,
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `count` occurrences of `token`, returning its id.
    pub fn add(&mut self, token: &str, count: u64) -> usize {
        self.total += count;
        if let Some((id, _, c)) = self.entries.get_full_mut(token) {
            *c += count;
            id
        } else {
            let (id, _) = self.entries.insert_full(token.to_string(), count);
            id
        }
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.entries.get_index_of(token)
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.entries.get_index(id).map(|(t, _)| t.as_str())
    }

    pub fn count(&self, id: usize) -> u64 {
        self.entries.get_index(id).map_or(0, |(_, c)| *c)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn counts(&self) -> impl Iterator<Item = u64> + '_ {
        self.entries.values().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &str, u64)> + '_ {
        self.entries.iter().enumerate().map(|(i, (t, c))| (i, t.as_str(), *c))
    }
}

pub fn build_vocabulary<I, S>(tokens: I) -> Vocabulary
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut vocab = Vocabulary::new();
    for t in tokens {
        vocab.add(t.as_ref(), 1);
    }
    vocab
}
