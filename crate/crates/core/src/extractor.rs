//! Three-state clause automaton that turns tagged text into noun records.
//!
//! State 1 is the start of a clause before its verb, state 2 follows a verb,
//! state 3 is inside a prepositional phrase. Verbs, prepositions and
//! clause boundaries drive the transitions; every other tag leaves the state
//! alone. Each noun is emitted with a role determined by the current state.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{TagClassifier, TagEvent, TaggedToken};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum AutomatonState {
    #[default]
    ClauseStart,
    AfterVerb {
        verb: String,
    },
    InPrepPhrase {
        preposition: String,
    },
}

impl AutomatonState {
    /// The state's number in the 1/2/3 automaton diagram.
    pub fn number(&self) -> u8 {
        match self {
            AutomatonState::ClauseStart => 1,
            AutomatonState::AfterVerb { .. } => 2,
            AutomatonState::InPrepPhrase { .. } => 3,
        }
    }

    pub fn current_verb(&self) -> Option<&str> {
        match self {
            AutomatonState::AfterVerb { verb } => Some(verb),
            _ => None,
        }
    }

    pub fn current_preposition(&self) -> Option<&str> {
        match self {
            AutomatonState::InPrepPhrase { preposition } => Some(preposition),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NounRole {
    DirectObject,
    PrepositionalObject,
    Unconstrained,
}

impl NounRole {
    /// Role column used in record files.
    pub fn as_str(self) -> &'static str {
        match self {
            NounRole::DirectObject => "dobj",
            NounRole::PrepositionalObject => "pobj",
            NounRole::Unconstrained => "free",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairRecord {
    pub object: String,
    pub verb: Option<String>,
    pub preposition: Option<String>,
    pub prev_word: Option<String>,
    pub role: NounRole,
}

impl PairRecord {
    pub fn direct_object(verb: &str, object: &str, prev_word: Option<&str>) -> Self {
        PairRecord {
            object: object.to_string(),
            verb: Some(verb.to_string()),
            preposition: None,
            prev_word: prev_word.map(str::to_string),
            role: NounRole::DirectObject,
        }
    }

    /// The predictor this record supplies under `mode`, if any.
    pub fn predictor(&self, mode: PairMode) -> Option<&str> {
        match (mode, self.role) {
            (PairMode::VerbObject, NounRole::DirectObject) => self.verb.as_deref(),
            (PairMode::Bigram, NounRole::DirectObject) => self.prev_word.as_deref(),
            (PairMode::PrepNoun, NounRole::PrepositionalObject) => self.preposition.as_deref(),
            _ => None,
        }
    }
}

/// One line of a record file: `role<TAB>head<TAB>object<TAB>prev`, where the
/// head is the verb or preposition and empty for unconstrained nouns.
impl fmt::Display for PairRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let head = self.verb.as_deref().or(self.preposition.as_deref()).unwrap_or("");
        let prev = self.prev_word.as_deref().unwrap_or("");
        write!(f, "{}\t{head}\t{}\t{prev}", self.role.as_str(), self.object)
    }
}

/// Which predictor/target pairs to keep for training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairMode {
    VerbObject,
    Bigram,
    PrepNoun,
}

impl PairMode {
    pub fn as_str(self) -> &'static str {
        match self {
            PairMode::VerbObject => "verb-object",
            PairMode::Bigram => "bigram",
            PairMode::PrepNoun => "prep-noun",
        }
    }
}

impl fmt::Display for PairMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PairMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "verb-object" => Ok(PairMode::VerbObject),
            "bigram" => Ok(PairMode::Bigram),
            "prep-noun" => Ok(PairMode::PrepNoun),
            other => Err(Error::Config(format!("unknown pair mode `{other}`"))),
        }
    }
}

/// One automaton transition. Emitted records carry no `prev_word`; that is
/// filled in by [`extract_pairs`], which sees the raw token sequence.
pub fn step_automaton(
    state: AutomatonState,
    token: &TaggedToken,
    event: TagEvent,
) -> (AutomatonState, Option<PairRecord>) {
    match event {
        TagEvent::Verb => (AutomatonState::AfterVerb { verb: token.word.clone() }, None),
        TagEvent::Preposition => (AutomatonState::InPrepPhrase { preposition: token.word.clone() }, None),
        TagEvent::NewClause => (AutomatonState::ClauseStart, None),
        TagEvent::Other => (state, None),
        TagEvent::Noun => {
            let mut record = PairRecord {
                object: token.word.clone(),
                verb: None,
                preposition: None,
                prev_word: None,
                role: NounRole::Unconstrained,
            };
            match &state {
                AutomatonState::ClauseStart => {}
                AutomatonState::AfterVerb { verb } => {
                    record.verb = Some(verb.clone());
                    record.role = NounRole::DirectObject;
                }
                AutomatonState::InPrepPhrase { preposition } => {
                    record.preposition = Some(preposition.clone());
                    record.role = NounRole::PrepositionalObject;
                }
            }
            (state, Some(record))
        }
    }
}

pub fn extract_pairs(tokens: &[TaggedToken], classifier: &TagClassifier) -> Vec<PairRecord> {
    let mut state = AutomatonState::default();
    let mut out = Vec::new();
    for (i, token) in tokens.iter().enumerate() {
        let event = classifier.classify(&token.tag);
        let (next, emitted) = step_automaton(state, token, event);
        state = next;
        if let Some(mut record) = emitted {
            record.prev_word = i.checked_sub(1).map(|j| tokens[j].word.clone());
            out.push(record);
        }
    }
    out
}

pub fn select_training_pairs(records: &[PairRecord], mode: PairMode) -> Vec<(String, String)> {
    records.iter().filter_map(|r| r.predictor(mode).map(|x| (x.to_string(), r.object.clone()))).collect()
}

pub fn write_records<W: Write>(mut w: W, records: &[PairRecord]) -> std::io::Result<()> {
    for r in records {
        writeln!(w, "{r}")?;
    }
    Ok(())
}

pub fn read_records<R: BufRead>(reader: R) -> Result<Vec<PairRecord>> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::Parse { line: lineno, message: e.to_string() })?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        let nonempty = |s: &str| (!s.is_empty()).then(|| s.to_string());
        let bad = |m: &str| Error::Parse { line: lineno, message: m.to_string() };
        let [role, head, object, prev] = f.as_slice() else {
            return Err(bad("expected 4 tab-separated fields"));
        };
        if object.is_empty() {
            return Err(bad("empty object"));
        }
        let (role, verb, preposition) = match *role {
            "dobj" if !head.is_empty() => (NounRole::DirectObject, nonempty(head), None),
            "pobj" if !head.is_empty() => (NounRole::PrepositionalObject, None, nonempty(head)),
            "free" if head.is_empty() => (NounRole::Unconstrained, None, None),
            "dobj" | "pobj" | "free" => return Err(bad(&format!("head does not fit role `{role}`"))),
            other => return Err(bad(&format!("unknown role `{other}`"))),
        };
        let record = PairRecord { object: object.to_string(), verb, preposition, prev_word: nonempty(prev), role };
        out.push(record);
    }
    Ok(out)
}

pub fn write_pairs<W: Write>(mut w: W, pairs: &[(String, String)]) -> std::io::Result<()> {
    for (x, y) in pairs {
        writeln!(w, "{x}\t{y}")?;
    }
    Ok(())
}

pub fn read_pairs<R: BufRead>(reader: R) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::Parse { line: lineno, message: e.to_string() })?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.is_empty() {
            continue;
        }
        match line.split('\t').collect::<Vec<_>>().as_slice() {
            [x, y] if !x.is_empty() && !y.is_empty() => out.push((x.to_string(), y.to_string())),
            _ => return Err(Error::Parse { line: lineno, message: "expected x<TAB>y".into() }),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(text: &str) -> Vec<TaggedToken> {
        text.split_whitespace()
            .map(|wt| {
                let (w, t) = wt.rsplit_once('/').unwrap();
                TaggedToken::new(w, t)
            })
            .collect()
    }

    fn extract(text: &str) -> Vec<PairRecord> {
        extract_pairs(&toks(text), &TagClassifier::default())
    }

    #[test]
    fn verb_arc_from_clause_start() {
        let (s, r) = step_automaton(AutomatonState::ClauseStart, &TaggedToken::new("join", "vb"), TagEvent::Verb);
        assert_eq!(s, AutomatonState::AfterVerb { verb: "join".into() });
        assert!(r.is_none());
    }

    #[test]
    fn noun_in_verb_state_is_direct_object() {
        let st = AutomatonState::AfterVerb { verb: "join".into() };
        let (s, r) = step_automaton(st.clone(), &TaggedToken::new("board", "nn"), TagEvent::Noun);
        assert_eq!(s, st);
        let r = r.unwrap();
        assert_eq!(r.role, NounRole::DirectObject);
        assert_eq!(r.verb.as_deref(), Some("join"));
        assert_eq!(r.object, "board");
    }

    #[test]
    fn clause_boundary_resets() {
        let st = AutomatonState::InPrepPhrase { preposition: "with".into() };
        let (s, r) = step_automaton(st, &TaggedToken::new(".", "."), TagEvent::NewClause);
        assert_eq!(s, AutomatonState::ClauseStart);
        assert_eq!(s.number(), 1);
        assert!(r.is_none());
    }

    #[test]
    fn she_eats_x() {
        let r = extract("she/pps eats/vbz x/nn");
        assert_eq!(r, vec![PairRecord::direct_object("eats", "x", Some("eats"))]);
    }

    #[test]
    fn stream_initial_noun() {
        let r = extract("board/nn");
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].role, NounRole::Unconstrained);
        assert_eq!(r[0].prev_word, None);
    }

    #[test]
    fn prepositional_object() {
        let r = extract("he/pps eats/vbz with/in fork/nn");
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].role, NounRole::PrepositionalObject);
        assert_eq!(r[0].preposition.as_deref(), Some("with"));
        assert_eq!(r[0].prev_word.as_deref(), Some("with"));
        assert_eq!(r[0].verb, None);
    }

    #[test]
    fn verb_self_loop_replaces_verb_and_pp_needs_fresh_verb() {
        let r = extract("is/bez named/vbn director/nn of/in firm/nn ,/, board/nn");
        assert_eq!(r[0].verb.as_deref(), Some("named"));
        assert_eq!(r[1].role, NounRole::PrepositionalObject);
        // still in state 3: no return to state 2 without a verb
        assert_eq!(r[2].role, NounRole::PrepositionalObject);
    }

    #[test]
    fn bigram_mode_uses_preceding_word() {
        let r = extract("she/pps eats/vbz the/at apple/nn");
        assert_eq!(select_training_pairs(&r, PairMode::Bigram), vec![("the".into(), "apple".into())]);
        assert_eq!(select_training_pairs(&r, PairMode::VerbObject), vec![("eats".into(), "apple".into())]);
        assert!(select_training_pairs(&r, PairMode::PrepNoun).is_empty());
        assert!(select_training_pairs(&extract("dog/nn ./."), PairMode::VerbObject).is_empty());
    }

    #[test]
    fn record_file_roundtrip() {
        let r = extract("board/nn ./. she/pps eats/vbz x/nn with/in fork/nn");
        let mut buf = Vec::new();
        write_records(&mut buf, &r).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text, "free\t\tboard\t\ndobj\teats\tx\teats\npobj\twith\tfork\twith\n");
        assert_eq!(read_records(buf.as_slice()).unwrap(), r);
        assert!(read_records("zzz\ta\tb\tc\n".as_bytes()).is_err());
        assert!(read_records("dobj\ta\tb\n".as_bytes()).is_err());
        assert!(read_records("free\ta\tb\tc\n".as_bytes()).is_err());
        assert!(read_records("pobj\t\tb\tc\n".as_bytes()).is_err());
    }

    fn arb_token() -> impl Strategy<Value = TaggedToken> {
        let tags =
            prop::sample::select(vec!["vb", "vbd", "bez", "hv", "in", ".", "cs", "wdt", "nn", "nns", "at", "jj"]);
        ("[a-d]", tags).prop_map(|(w, t)| TaggedToken::new(w, t))
    }

    proptest! {
        #[test]
        fn records_track_most_recent_verb(tokens in prop::collection::vec(arb_token(), 0..60)) {
            let c = TagClassifier::default();
            let records = extract_pairs(&tokens, &c);
            prop_assert_eq!(&records, &extract_pairs(&tokens, &c));
            let nouns = tokens.iter().filter(|t| c.classify(&t.tag) == TagEvent::Noun).count();
            prop_assert_eq!(records.len(), nouns);

            let mut last_verb: Option<&str> = None;
            let mut k = 0;
            for (i, t) in tokens.iter().enumerate() {
                match c.classify(&t.tag) {
                    TagEvent::Verb => last_verb = Some(&t.word),
                    TagEvent::Noun => {
                        let r = &records[k];
                        k += 1;
                        prop_assert_eq!(r.role == NounRole::DirectObject, r.verb.is_some());
                        prop_assert_eq!(r.role == NounRole::PrepositionalObject, r.preposition.is_some());
                        if r.role == NounRole::DirectObject {
                            prop_assert_eq!(r.verb.as_deref(), last_verb);
                        }
                        let expected_prev = if i == 0 { None } else { Some(tokens[i - 1].word.as_str()) };
                        prop_assert_eq!(r.prev_word.as_deref(), expected_prev);
                    }
                    _ => {}
                }
            }
        }
    }
}
