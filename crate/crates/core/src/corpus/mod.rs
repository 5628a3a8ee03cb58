//! Sentences annotated with typed, possibly overlapping mention spans.
//!
//! Spans are 0-based and inclusive on both ends. A sentence stores its
//! mentions as a sorted, duplicate-free list so that set semantics hold for
//! equality and evaluation.

mod conll;
mod olner;
mod stats;

use std::collections::BTreeSet;
use std::fmt;
use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use flate2::read::GzDecoder;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use conll::{parse_conll_bio, write_conll, ConllDocument, ConllRepair, TagEncoding};
pub use olner::{parse_olner, write_olner};
pub use stats::{compute_stats, overlapping_flags, split_by_overlap, CorpusStats};

/// A word with its part-of-speech tag (`-` when unknown).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub pos: String,
}

impl Token {
    pub fn new(surface: impl Into<String>, pos: impl Into<String>) -> Self {
        Self {
            surface: surface.into(),
            pos: pos.into(),
        }
    }

    fn check(&self) -> std::result::Result<(), String> {
        for (what, s) in [("surface", &self.surface), ("POS tag", &self.pos)] {
            if s.is_empty() {
                return Err(format!("empty {what}"));
            }
            if s.contains(['\t', '\n', '\r']) {
                return Err(format!("{what} {s:?} contains a tab or newline"));
            }
        }
        Ok(())
    }
}

/// A typed token span `[start, end]` (inclusive).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Mention {
    pub start: usize,
    pub end: usize,
    pub label: String,
}

impl Mention {
    pub fn new(start: usize, end: usize, label: impl Into<String>) -> Self {
        Self {
            start,
            end,
            label: label.into(),
        }
    }

    /// True when the two spans share at least one token.
    pub fn overlaps(&self, other: &Mention) -> bool {
        self.start <= other.end && other.start <= self.end
    }

    pub fn len(&self) -> usize {
        self.end + 1 - self.start
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl fmt::Display for Mention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.start, self.end, self.label)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub id: String,
    pub tokens: Vec<Token>,
    mentions: Vec<Mention>,
}

impl Sentence {
    /// Builds a sentence, checking token and span invariants. Duplicate
    /// mentions collapse to one.
    pub fn new(id: impl Into<String>, tokens: Vec<Token>, mentions: Vec<Mention>) -> Result<Self> {
        for t in &tokens {
            t.check().map_err(Error::InvalidArgument)?;
        }
        let n = tokens.len();
        for m in &mentions {
            if m.end < m.start {
                return Err(Error::InvalidArgument(format!("end < start in mention {m}")));
            }
            if m.end >= n {
                return Err(Error::InvalidArgument(format!(
                    "mention {m} out of range for {n} tokens"
                )));
            }
            if m.label.is_empty() || m.label.contains([';', '\t', '\n', '\r']) {
                return Err(Error::InvalidArgument(format!("bad label in mention {m}")));
            }
        }
        Ok(Self {
            id: id.into(),
            tokens,
            mentions: normalize(mentions),
        })
    }

    /// Fixture helper: whitespace-separated words with placeholder POS tags.
    ///
    /// Panics when a span is invalid.
    pub fn from_words(words: &str, mentions: &[(usize, usize, &str)]) -> Self {
        let tokens = words.split_whitespace().map(|w| Token::new(w, "-")).collect();
        let mentions = mentions
            .iter()
            .map(|&(s, e, l)| Mention::new(s, e, l))
            .collect();
        Self::new("", tokens, mentions).expect("invalid fixture sentence")
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Mentions sorted by `(start, end, label)`.
    pub fn mentions(&self) -> &[Mention] {
        &self.mentions
    }

    pub fn set_mentions(&mut self, mentions: Vec<Mention>) {
        self.mentions = normalize(mentions);
    }

    pub fn with_mentions(&self, mentions: Vec<Mention>) -> Self {
        Self {
            id: self.id.clone(),
            tokens: self.tokens.clone(),
            mentions: normalize(mentions),
        }
    }

    /// Spans of one type as `(start, end)` pairs.
    pub fn spans_of(&self, label: &str) -> Vec<(usize, usize)> {
        self.mentions
            .iter()
            .filter(|m| m.label == label)
            .map(|m| (m.start, m.end))
            .collect()
    }
}

fn normalize(mut mentions: Vec<Mention>) -> Vec<Mention> {
    mentions.sort();
    mentions.dedup();
    mentions
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Corpus {
    pub sentences: Vec<Sentence>,
    labels: Vec<String>,
}

impl Corpus {
    /// Label set is the sorted union of labels used by the sentences.
    pub fn new(sentences: Vec<Sentence>) -> Self {
        Self::with_labels(sentences, std::iter::empty::<String>())
    }

    /// Like [`Corpus::new`] but also declares labels that may not occur.
    pub fn with_labels<I, S>(sentences: Vec<Sentence>, declared: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut set: BTreeSet<String> = declared.into_iter().map(Into::into).collect();
        for s in &sentences {
            for m in s.mentions() {
                set.insert(m.label.clone());
            }
        }
        Self {
            sentences,
            labels: set.into_iter().collect(),
        }
    }

    /// Ordered label set; position defines the type index.
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn num_words(&self) -> usize {
        self.sentences.iter().map(Sentence::len).sum()
    }
}

/// Corpus file formats understood by the readers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Olner,
    Conll,
}

/// Reads a corpus file, transparently decompressing `*.gz`.
pub fn read_corpus(path: &Path, format: Format) -> Result<Corpus> {
    let file = File::open(path)?;
    let mut bytes = Vec::new();
    if path.extension().is_some_and(|e| e == "gz") {
        GzDecoder::new(BufReader::new(file)).read_to_end(&mut bytes)?;
    } else {
        BufReader::new(file).read_to_end(&mut bytes)?;
    }
    match format {
        Format::Olner => parse_olner(&bytes),
        Format::Conll => {
            let doc = parse_conll_bio(&bytes)?;
            for r in &doc.repairs {
                log::warn!("{}: {}", path.display(), r);
            }
            Ok(doc.corpus)
        }
    }
}

pub(crate) fn utf8(bytes: &[u8]) -> Result<&str> {
    std::str::from_utf8(bytes).map_err(|e| {
        let line = bytes[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count() + 1;
        Error::parse(line, "invalid UTF-8")
    })
}
