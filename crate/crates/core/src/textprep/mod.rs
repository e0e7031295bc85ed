//! Text normalization, vocabulary fitting, and fixed-length sequence
//! encoding.

mod porter;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use porter::stem;

pub const PAD_INDEX: u32 = 0;
pub const OOV_INDEX: u32 = 1;
const RESERVED: usize = 2;

/// Token placed between the caption, hashtag and biography segments of a
/// post. It can never be produced by [`normalize_text`] or by hashtag
/// extraction.
pub const SEPARATOR: &str = "<sep>";

const ENGLISH_STOPWORDS: &str = include_str!("../../data/stopwords_en.txt");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stopwords(HashSet<String>);

impl Stopwords {
    /// The bundled 127-word English list.
    pub fn english() -> Self {
        Self::parse(ENGLISH_STOPWORDS)
    }

    pub fn empty() -> Self {
        Stopwords(HashSet::new())
    }

    /// One word per line; blank lines and surrounding whitespace ignored.
    pub fn parse(text: &str) -> Self {
        Stopwords(
            text.lines()
                .map(|l| l.trim().to_lowercase())
                .filter(|l| !l.is_empty())
                .collect(),
        )
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&text))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(word)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<S: Into<String>> FromIterator<S> for Stopwords {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Stopwords(iter.into_iter().map(|s| s.into().to_lowercase()).collect())
    }
}

/// Stems until the word stops changing. Plain Porter stemming is not
/// idempotent (`agreed` → `agre` → `agr`), and normalized output must be.
fn stem_to_fixpoint(word: &str) -> String {
    let mut current = word.to_owned();
    loop {
        let next = stem(&current);
        if next == current {
            return current;
        }
        current = next;
    }
}

/// Lowercases, replaces every non-alphanumeric character with a space,
/// splits on whitespace, drops stopwords, and stems. Tokens that stem to a
/// stopword are dropped as well.
pub fn normalize_text(text: &str, stopwords: &Stopwords) -> Vec<String> {
    let cleaned: String = text
        .to_lowercase()
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect();
    cleaned
        .split_whitespace()
        .filter(|w| !stopwords.contains(w))
        .map(stem_to_fixpoint)
        .filter(|w| !stopwords.contains(w))
        .collect()
}

/// Token-to-index map. Index 0 is padding, 1 is out-of-vocabulary, and real
/// tokens occupy `2..len()` ranked by corpus frequency (ties broken
/// lexicographically).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "BTreeMap<String, u32>", into = "BTreeMap<String, u32>")]
pub struct Vocabulary {
    index: HashMap<String, u32>,
    max_size: usize,
}

impl Vocabulary {
    pub fn build<D, T>(corpus: &[D], max_size: usize) -> Result<Self>
    where
        D: AsRef<[T]>,
        T: AsRef<str>,
    {
        if max_size < RESERVED + 1 {
            return Err(Error::Config(format!(
                "vocabulary max_size must be at least 3, got {max_size}"
            )));
        }
        let mut counts: HashMap<&str, u64> = HashMap::new();
        for doc in corpus {
            for token in doc.as_ref() {
                *counts.entry(token.as_ref()).or_default() += 1;
            }
        }
        let mut ranked: Vec<(&str, u64)> = counts.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        ranked.truncate(max_size - RESERVED);
        let index = ranked
            .into_iter()
            .enumerate()
            .map(|(i, (tok, _))| (tok.to_owned(), (i + RESERVED) as u32))
            .collect();
        Ok(Vocabulary { index, max_size })
    }

    /// Number of indices in use, including the two reserved ones.
    pub fn len(&self) -> usize {
        self.index.len() + RESERVED
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn max_size(&self) -> usize {
        self.max_size
    }

    pub fn get(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn index_of(&self, token: &str) -> u32 {
        self.get(token).unwrap_or(OOV_INDEX)
    }

    /// Real tokens in index order.
    pub fn tokens(&self) -> Vec<&str> {
        let mut out: Vec<(&str, u32)> = self.index.iter().map(|(t, i)| (t.as_str(), *i)).collect();
        out.sort_by_key(|(_, i)| *i);
        out.into_iter().map(|(t, _)| t).collect()
    }
}

impl From<BTreeMap<String, u32>> for Vocabulary {
    fn from(map: BTreeMap<String, u32>) -> Self {
        let max_size = map.len() + RESERVED;
        Vocabulary {
            index: map.into_iter().collect(),
            max_size,
        }
    }
}

impl From<Vocabulary> for BTreeMap<String, u32> {
    fn from(vocab: Vocabulary) -> Self {
        vocab.index.into_iter().collect()
    }
}

/// Maps tokens to indices, keeps the last `max_len`, and left-pads with
/// [`PAD_INDEX`] to exactly `max_len`.
pub fn encode_sequence<T: AsRef<str>>(tokens: &[T], vocab: &Vocabulary, max_len: usize) -> Vec<u32> {
    let tail = &tokens[tokens.len().saturating_sub(max_len)..];
    let mut out = vec![PAD_INDEX; max_len - tail.len()];
    out.extend(tail.iter().map(|t| vocab.index_of(t.as_ref())));
    out
}
