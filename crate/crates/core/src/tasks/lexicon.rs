//! Surface-word substitution for Teacher language.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Words that carry structure rather than content; never substituted.
pub const FUNCTION_WORDS: &[&str] = &["and", "the", "a", "an", "to", "me", "is", "this", "then", "I"];

/// A bijection over content words. The default lexicon is the identity.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lexicon {
    forward: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LexiconError {
    #[error("{0:?} is mapped twice")]
    NotInjective(String),
    #[error("{0:?} is not a substitutable word")]
    NotContent(String),
}

pub fn is_content_word(w: &str) -> bool {
    w.len() > 1 && w.bytes().all(|b| b.is_ascii_lowercase()) && !FUNCTION_WORDS.contains(&w)
}

fn map_words(text: &str, mut f: impl FnMut(&str) -> Option<String>) -> String {
    let mut out = String::with_capacity(text.len());
    let mut word = String::new();
    for c in text.chars().chain(std::iter::once('\0')) {
        if c.is_ascii_alphanumeric() || c == '\'' {
            word.push(c);
            continue;
        }
        if !word.is_empty() {
            out.push_str(&f(&word).unwrap_or_else(|| word.clone()));
            word.clear();
        }
        if c != '\0' {
            out.push(c);
        }
    }
    out
}

/// Content words of `text`, ignoring anything after an `@E: ` marker.
pub fn content_words(text: &str) -> Vec<String> {
    let teacher_part = text.split("@E: ").next().unwrap_or("");
    let mut out = Vec::new();
    map_words(teacher_part, |w| {
        if is_content_word(w) {
            out.push(w.to_string());
        }
        None
    });
    out
}

impl Lexicon {
    pub fn identity() -> Self {
        Lexicon::default()
    }

    /// Images must be fresh words or themselves remapped.
    pub fn from_pairs<I, S>(pairs: I) -> Result<Self, LexiconError>
    where
        I: IntoIterator<Item = (S, S)>,
        S: Into<String>,
    {
        let mut forward = BTreeMap::new();
        let mut seen = BTreeSet::new();
        for (k, v) in pairs {
            let (k, v) = (k.into(), v.into());
            if !is_content_word(&k) {
                return Err(LexiconError::NotContent(k));
            }
            if !is_content_word(&v) {
                return Err(LexiconError::NotContent(v));
            }
            if !seen.insert(v.clone()) || forward.contains_key(&k) {
                return Err(LexiconError::NotInjective(k));
            }
            forward.insert(k, v);
        }
        Ok(Lexicon { forward })
    }

    /// Fresh pseudo-words for every word of `vocabulary`, seeded.
    pub fn scrambled<'a>(vocabulary: impl IntoIterator<Item = &'a str>, seed: u64) -> Self {
        const CONS: &[u8] = b"bdfgklmnprstvz";
        const VOWELS: &[u8] = b"aeiou";
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut vocab: Vec<String> = vocabulary.into_iter().filter(|w| is_content_word(w)).map(String::from).collect();
        vocab.sort();
        vocab.dedup();
        let taken: BTreeSet<String> = vocab.iter().cloned().collect();
        let mut used = BTreeSet::new();
        let mut forward = BTreeMap::new();
        for w in vocab {
            let fresh = loop {
                let syllables = rng.gen_range(2..=3);
                let mut s = String::new();
                for _ in 0..syllables {
                    s.push(*CONS.choose(&mut rng).expect("non-empty") as char);
                    s.push(*VOWELS.choose(&mut rng).expect("non-empty") as char);
                }
                if rng.gen_bool(0.5) {
                    s.push(*CONS.choose(&mut rng).expect("non-empty") as char);
                }
                if !taken.contains(&s) && !FUNCTION_WORDS.contains(&s.as_str()) && used.insert(s.clone()) {
                    break s;
                }
            };
            forward.insert(w, fresh);
        }
        Lexicon { forward }
    }

    pub fn is_identity(&self) -> bool {
        self.forward.iter().all(|(k, v)| k == v)
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&str> {
        self.forward.get(word).map(String::as_str)
    }

    pub fn inverse(&self) -> Lexicon {
        Lexicon { forward: self.forward.iter().map(|(k, v)| (v.clone(), k.clone())).collect() }
    }

    fn map_teacher_part(&self, part: &str) -> String {
        map_words(part, |w| self.forward.get(w).cloned())
    }

    /// Substitute content words, leaving Environment-language segments
    /// (anything after `@E: ` up to the next `@T: `) untouched.
    pub fn apply(&self, text: &str) -> String {
        if self.forward.is_empty() {
            return text.to_string();
        }
        let mut out = String::new();
        let mut rest = text;
        loop {
            match rest.find("@E: ") {
                None => {
                    out.push_str(&self.map_teacher_part(rest));
                    return out;
                }
                Some(i) => {
                    out.push_str(&self.map_teacher_part(&rest[..i]));
                    let env = &rest[i..];
                    match env.find("@T: ") {
                        Some(j) => {
                            out.push_str(&env[..j]);
                            rest = &env[j..];
                        }
                        None => {
                            out.push_str(env);
                            return out;
                        }
                    }
                }
            }
        }
    }
}
