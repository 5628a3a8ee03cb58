//! Seeded generator of small two-type corpora with nested mentions.
//!
//! Sentences mix filler words with noun phrases built from names, modifiers
//! and head nouns. A name followed by a head, or wrapped by a modifier and a
//! head, yields a phrase mention that contains the name mention of the same
//! type; a protein name before a DNA modifier and head nests across types.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Corpus, Mention, Sentence, Token};

pub const PROT: &str = "PROT";
pub const DNA: &str = "DNA";

const FILLERS: [&str; 24] = [
    "the", "a", "of", "in", "and", "we", "found", "that", "is", "was", "expression", "cells",
    "level", "by", "with", "to", "induced", "observed", "binds", "activates", "shows", "this",
    "its", "high",
];

struct Lexicon {
    label: &'static str,
    names: [&'static str; 4],
    mods: [&'static str; 3],
    heads: [&'static str; 3],
}

const PROT_LEX: Lexicon = Lexicon {
    label: PROT,
    names: ["tcf1", "il2", "nfat", "p53"],
    mods: ["human", "mouse", "active"],
    heads: ["protein", "factor", "kinase"],
};

const DNA_LEX: Lexicon = Lexicon {
    label: DNA,
    names: ["cd4", "gata3", "bcl2", "myc"],
    mods: ["regulatory", "promoter", "binding"],
    heads: ["region", "site", "element"],
};

/// Probability that a nested name is left unannotated.
pub const INNER_OMISSION: f64 = 0.1;

/// Number of distinct word forms the generator can emit.
pub fn vocabulary_size() -> usize {
    FILLERS.len() + 2 * (4 + 3 + 3)
}

struct Builder {
    tokens: Vec<Token>,
    mentions: Vec<Mention>,
}

impl Builder {
    fn word(&mut self, w: &str, pos: &str) -> usize {
        self.tokens.push(Token::new(w, pos));
        self.tokens.len() - 1
    }

    fn fillers(&mut self, rng: &mut ChaCha8Rng, lo: usize, hi: usize) {
        for _ in 0..rng.gen_range(lo..=hi) {
            let w = FILLERS.choose(rng).expect("non-empty");
            self.word(w, "X");
        }
    }

    /// Annotates a name nested inside a phrase, except for an occasional
    /// annotator omission.
    fn inner(&mut self, rng: &mut ChaCha8Rng, k: usize, label: &str) {
        if !rng.gen_bool(INNER_OMISSION) {
            self.mentions.push(Mention::new(k, k, label));
        }
    }

    fn phrase(&mut self, rng: &mut ChaCha8Rng) {
        let lex = if rng.gen_bool(0.5) { &PROT_LEX } else { &DNA_LEX };
        let name = |rng: &mut ChaCha8Rng, l: &Lexicon| *l.names.choose(rng).expect("non-empty");
        let r: f64 = rng.gen();
        if r < 0.35 {
            // [name]
            let k = self.word(name(rng, lex), "NNP");
            self.mentions.push(Mention::new(k, k, lex.label));
        } else if r < 0.53 {
            // [[name] head]
            let k = self.word(name(rng, lex), "NNP");
            self.word(lex.heads.choose(rng).expect("non-empty"), "NN");
            self.inner(rng, k, lex.label);
            self.mentions.push(Mention::new(k, k + 1, lex.label));
        } else if r < 0.71 {
            // [mod [name] head]
            let s = self.word(lex.mods.choose(rng).expect("non-empty"), "JJ");
            self.word(name(rng, lex), "NNP");
            self.word(lex.heads.choose(rng).expect("non-empty"), "NN");
            self.inner(rng, s + 1, lex.label);
            self.mentions.push(Mention::new(s, s + 2, lex.label));
        } else if r < 0.82 {
            // [[protein name] dna-mod dna-head]
            let k = self.word(name(rng, &PROT_LEX), "NNP");
            self.word(DNA_LEX.mods.choose(rng).expect("non-empty"), "JJ");
            self.word(DNA_LEX.heads.choose(rng).expect("non-empty"), "NN");
            self.inner(rng, k, PROT);
            self.mentions.push(Mention::new(k, k + 2, DNA));
        } else {
            // A bare head noun is not a mention.
            self.word(lex.heads.choose(rng).expect("non-empty"), "NN");
        }
    }
}

fn sentence(rng: &mut ChaCha8Rng, id: String) -> Sentence {
    let mut b = Builder {
        tokens: Vec::new(),
        mentions: Vec::new(),
    };
    let phrases = match rng.gen_range(0..10) {
        0 => 0,
        1..=5 => 1,
        _ => 2,
    };
    b.fillers(rng, 1, 3);
    for _ in 0..phrases {
        b.phrase(rng);
        b.fillers(rng, 1, 3);
    }
    Sentence::new(id, b.tokens, b.mentions).expect("generated spans are in range")
}

/// `count` sentences from `seed`. Both labels are declared even if unused.
pub fn generate(count: usize, seed: u64) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sentences = (0..count).map(|i| sentence(&mut rng, i.to_string())).collect();
    Corpus::with_labels(sentences, [DNA, PROT])
}

/// Train, dev and test corpora drawn from independent streams of `seed`.
pub fn generate_splits(train: usize, dev: usize, test: usize, seed: u64) -> (Corpus, Corpus, Corpus) {
    (
        generate(train, seed),
        generate(dev, seed.wrapping_add(1)),
        generate(test, seed.wrapping_add(2)),
    )
}

/// One sentence of exactly `n` tokens made by concatenating generated
/// sentences; mentions cut by the truncation are dropped.
pub fn long_sentence(n: usize, seed: u64) -> Sentence {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tokens = Vec::new();
    let mut mentions = Vec::new();
    while tokens.len() < n {
        let s = sentence(&mut rng, String::new());
        let base = tokens.len();
        mentions.extend(
            s.mentions()
                .iter()
                .map(|m| Mention::new(base + m.start, base + m.end, m.label.clone())),
        );
        tokens.extend(s.tokens);
    }
    tokens.truncate(n);
    mentions.retain(|m| m.end < n);
    Sentence::new(format!("long{n}"), tokens, mentions).expect("spans kept in range")
}

/// Fraction of sentences with two overlapping mentions of the same type.
pub fn same_type_nested_fraction(corpus: &Corpus) -> f64 {
    if corpus.is_empty() {
        return 0.0;
    }
    let hits = corpus
        .sentences
        .iter()
        .filter(|s| crate::corpus::overlapping_flags(s).iter().any(|f| f.1))
        .count();
    hits as f64 / corpus.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn deterministic_and_shaped() {
        let a = generate(500, 11);
        assert_eq!(a, generate(500, 11));
        assert_ne!(a, generate(500, 12));
        assert_eq!(a.labels(), [DNA, PROT]);
        let frac = same_type_nested_fraction(&a);
        assert!((0.3..=0.5).contains(&frac), "{frac}");
        let words: BTreeSet<&str> = a
            .sentences
            .iter()
            .flat_map(|s| s.tokens.iter().map(|t| t.surface.as_str()))
            .collect();
        assert!(words.len() <= vocabulary_size());
        assert!(vocabulary_size() >= 40 && vocabulary_size() <= 60);
    }

    #[test]
    fn long_sentences() {
        let s = long_sentence(400, 3);
        assert_eq!(s.len(), 400);
        assert!(s.mentions().iter().all(|m| m.end < 400));
    }
}
