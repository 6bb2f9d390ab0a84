//! Deterministic synthetic tagged corpora.
//!
//! Every sentence has the shape
//!
//! ```text
//! the/at SUBJECT/nn VERB/vb* MODIFIER OBJECT/nn [with/in TOOL/nn] ./.
//! ```
//!
//! Objects are laid out on a grid of semantic groups × form classes. Content
//! verbs belong to one semantic group and mostly select objects from it;
//! light verbs (`is`, `has`, `makes`) select from the whole vocabulary.
//! The modifier right before the object is either an adjective tied to the
//! object's form class or a plain determiner. So the verb and the preceding
//! word each carry part of the information about the object, and which one
//! helps varies from sentence to sentence.

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::TaggedToken;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub sentences: usize,
    pub seed: u64,
    pub groups: usize,
    pub forms: usize,
    /// Objects per (group, form) cell.
    pub objects_per_cell: usize,
    pub verbs_per_group: usize,
    pub adjectives_per_form: usize,
    /// Probability that the verb is a light verb.
    pub light_verb_rate: f64,
    /// Probability that a content verb picks an object outside its group.
    pub verb_noise: f64,
    /// Probability that the object is preceded by an adjective.
    pub adjective_rate: f64,
    /// Probability that the adjective belongs to the wrong form class.
    pub adjective_noise: f64,
    pub pp_rate: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            sentences: 20_000,
            seed: 1994,
            groups: 8,
            forms: 6,
            objects_per_cell: 4,
            verbs_per_group: 6,
            adjectives_per_form: 4,
            light_verb_rate: 0.4,
            verb_noise: 0.1,
            adjective_rate: 0.6,
            adjective_noise: 0.1,
            pp_rate: 0.3,
        }
    }
}

const LIGHT_VERBS: [(&str, &str); 3] = [("is", "bez"), ("has", "hvz"), ("makes", "vbz")];
const VERB_TAGS: [&str; 3] = ["vb", "vbd", "vbz"];
const SYLLABLES: [&str; 16] =
    ["ka", "lo", "mi", "ne", "ru", "sa", "to", "vi", "be", "do", "fu", "ga", "hi", "jo", "pe", "zu"];

/// A pronounceable, unique word for `index` with a role prefix.
fn word(prefix: &str, index: usize) -> String {
    let mut s = String::from(prefix);
    let mut i = index;
    loop {
        s.push_str(SYLLABLES[i % SYLLABLES.len()]);
        i /= SYLLABLES.len();
        if i == 0 {
            break;
        }
        i -= 1;
    }
    s
}

pub fn generate_tagged(config: &SynthConfig) -> Vec<TaggedToken> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (groups, forms, per_cell) = (config.groups, config.forms, config.objects_per_cell);

    // object (g, f, k) has id (g * forms + f) * per_cell + k
    let object_name = |g: usize, f: usize, k: usize| word("o", (g * forms + f) * per_cell + k);
    let n_cell_objects = forms * per_cell;
    // Zipf-like preference inside a group
    let in_group = WeightedIndex::new((0..n_cell_objects).map(|i| 1.0 / (1.0 + i as f64).powf(0.7))).unwrap();
    let subjects: Vec<String> = (0..30).map(|i| word("s", i)).collect();
    let tools: Vec<String> = (0..12).map(|i| word("t", i)).collect();

    let mut out = Vec::with_capacity(config.sentences * 8);
    let push = |out: &mut Vec<TaggedToken>, w: &str, t: &str| out.push(TaggedToken::new(w, t));
    for _ in 0..config.sentences {
        push(&mut out, "the", "at");
        push(&mut out, &subjects[rng.gen_range(0..subjects.len())], "nn");

        let (object_group, verb, tag) = if rng.gen_bool(config.light_verb_rate) {
            let (v, t) = LIGHT_VERBS[rng.gen_range(0..LIGHT_VERBS.len())];
            (rng.gen_range(0..groups), v.to_string(), t)
        } else {
            let g = rng.gen_range(0..groups);
            let v = word("v", g * config.verbs_per_group + rng.gen_range(0..config.verbs_per_group));
            let og = if rng.gen_bool(config.verb_noise) { rng.gen_range(0..groups) } else { g };
            (og, v, VERB_TAGS[rng.gen_range(0..VERB_TAGS.len())])
        };
        push(&mut out, &verb, tag);

        let slot = in_group.sample(&mut rng);
        let (form, k) = (slot / per_cell, slot % per_cell);
        if rng.gen_bool(config.adjective_rate) {
            let f = if rng.gen_bool(config.adjective_noise) { rng.gen_range(0..forms) } else { form };
            let adj = word("a", f * config.adjectives_per_form + rng.gen_range(0..config.adjectives_per_form));
            push(&mut out, &adj, "jj");
        } else {
            push(&mut out, if rng.gen_bool(0.7) { "the" } else { "a" }, "at");
        }
        push(&mut out, &object_name(object_group, form, k), "nn");

        if rng.gen_bool(config.pp_rate) {
            push(&mut out, "with", "in");
            push(&mut out, &tools[rng.gen_range(0..tools.len())], "nn");
        }
        push(&mut out, ".", ".");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::TagClassifier;
    use crate::extractor::{extract_pairs, NounRole};

    #[test]
    fn deterministic_and_one_object_per_sentence() {
        let cfg = SynthConfig { sentences: 500, ..Default::default() };
        let a = generate_tagged(&cfg);
        assert_eq!(a, generate_tagged(&cfg));
        let records = extract_pairs(&a, &TagClassifier::default());
        let dobj = records.iter().filter(|r| r.role == NounRole::DirectObject).count();
        assert_eq!(dobj, 500);
        assert!(records.iter().all(|r| r.role != NounRole::DirectObject || r.prev_word.is_some()));
    }

    #[test]
    fn words_are_unique() {
        let names: std::collections::HashSet<String> = (0..5000).map(|i| word("o", i)).collect();
        assert_eq!(names.len(), 5000);
    }
}
