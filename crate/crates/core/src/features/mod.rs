//! String-template features, the feature dictionary and Brown clusters.
//!
//! Input features describe a word position; edges concatenate them with an
//! output descriptor (separator label, transition, hyperedge kind).

mod brown;
mod dictionary;
mod edge;

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Sentence;
use crate::error::{Error, Result};

pub use brown::{load_brown_clusters, parse_brown_clusters, BrownClusters, UNK_CLUSTER};
pub use dictionary::{FeatureDictionary, PENALTY_FEATURE};
pub use edge::{
    build_dictionary, edge_feature_strings, edge_features, EdgeFeatureTable, SentenceInputs,
    SparseFeatureVector,
};

pub const BEGIN: &str = "<BEGIN>";
pub const END: &str = "<END>";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Template {
    /// Surface forms at offsets `-window..=window`.
    Word { window: usize },
    Pos { window: usize },
    /// Word and POS n-grams of length 2 up to `max` containing the current
    /// word.
    Ngram { max: usize },
    /// Lowercased words within `window`, position-free.
    BagOfWords { window: usize },
    Ortho,
    Shape { window: usize },
    /// Prefixes and suffixes of the current word up to `max` characters.
    Affix { max: usize },
    Brown { window: usize },
    Bias,
}

impl Template {
    pub fn name(&self) -> &'static str {
        match self {
            Template::Word { .. } => "word",
            Template::Pos { .. } => "pos",
            Template::Ngram { .. } => "ngram",
            Template::BagOfWords { .. } => "bag_of_words",
            Template::Ortho => "ortho",
            Template::Shape { .. } => "shape",
            Template::Affix { .. } => "affix",
            Template::Brown { .. } => "brown",
            Template::Bias => "bias",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub name: String,
    pub templates: Vec<Template>,
}

impl FeatureConfig {
    pub fn preset(name: &str) -> Result<Self> {
        use Template::*;
        let templates = match name {
            "ace" => vec![
                Word { window: 3 },
                Pos { window: 3 },
                Ngram { max: 4 },
                BagOfWords { window: 5 },
                Ortho,
                Shape { window: 1 },
                Bias,
            ],
            "genia" => vec![
                Word { window: 2 },
                Pos { window: 2 },
                Ngram { max: 4 },
                BagOfWords { window: 5 },
                Ortho,
                Shape { window: 1 },
                Affix { max: 6 },
                Brown { window: 1 },
                Bias,
            ],
            "conll" => vec![
                Word { window: 2 },
                Pos { window: 2 },
                Ngram { max: 4 },
                Ortho,
                Shape { window: 1 },
                Affix { max: 5 },
                Bias,
            ],
            _ => return Err(Error::InvalidArgument(format!("unknown feature preset {name:?}"))),
        };
        Ok(Self {
            name: name.to_string(),
            templates,
        })
    }

    pub fn new(name: impl Into<String>, templates: Vec<Template>) -> Result<Self> {
        let cfg = Self {
            name: name.into(),
            templates,
        };
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for t in &self.templates {
            if !seen.insert(t.name()) {
                return Err(Error::InvalidArgument(format!("duplicate template {}", t.name())));
            }
        }
        Ok(())
    }

    pub fn uses_brown(&self) -> bool {
        self.templates.iter().any(|t| matches!(t, Template::Brown { .. }))
    }

    /// Reads a TOML config: either `preset = "genia"` or a list of
    /// `[[template]]` tables (`kind = "word"`, `window = 2`, ...). A preset
    /// combined with templates replaces the preset's list.
    pub fn from_toml(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct File {
            name: Option<String>,
            preset: Option<String>,
            template: Option<Vec<Template>>,
        }
        let file: File = toml::from_str(text).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        let mut cfg = match &file.preset {
            Some(p) => Self::preset(p)?,
            None => Self {
                name: "custom".into(),
                templates: Vec::new(),
            },
        };
        if let Some(t) = file.template {
            cfg.templates = t;
        }
        if let Some(n) = file.name {
            cfg.name = n;
        }
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }
}

fn clean(s: &str) -> String {
    s.chars().map(|c| if c.is_whitespace() { '_' } else { c }).collect()
}

fn offset(d: isize) -> String {
    if d > 0 {
        format!("+{d}")
    } else {
        d.to_string()
    }
}

/// Upper to `A`, lower to `a`, digit to `0`, anything else kept.
pub fn word_shape(word: &str) -> String {
    word.chars()
        .map(|c| {
            if c.is_uppercase() {
                'A'
            } else if c.is_lowercase() {
                'a'
            } else if c.is_numeric() {
                '0'
            } else {
                c
            }
        })
        .collect()
}

/// [`word_shape`] with runs of the same symbol collapsed.
pub fn compressed_shape(word: &str) -> String {
    let mut out = String::new();
    for c in word_shape(word).chars() {
        if !out.ends_with(c) {
            out.push(c);
        }
    }
    out
}

pub fn ortho_flags(word: &str) -> Vec<&'static str> {
    let letters: Vec<char> = word.chars().filter(|c| c.is_alphabetic()).collect();
    let mut out = Vec::new();
    if !letters.is_empty() && letters.iter().all(|c| c.is_uppercase()) {
        out.push("allCaps");
    }
    if word.chars().next().is_some_and(|c| c.is_uppercase()) {
        out.push("initCap");
    }
    if word.chars().any(|c| c.is_numeric()) {
        out.push("hasDigit");
    }
    if word.contains('-') {
        out.push("hasHyphen");
    }
    if word.chars().all(|c| c.is_numeric()) {
        out.push("allDigits");
    }
    if word.chars().any(|c| c.is_ascii_punctuation()) {
        out.push("hasPunct");
    }
    out
}

/// Feature strings for word position `k`, in template order.
pub fn input_features(
    sentence: &Sentence,
    k: usize,
    config: &FeatureConfig,
    brown: Option<&BrownClusters>,
) -> Vec<String> {
    let n = sentence.len() as isize;
    let at = |d: isize| -> Option<usize> {
        let j = k as isize + d;
        (0..n).contains(&j).then_some(j as usize)
    };
    let word = |d: isize| match at(d) {
        Some(j) => clean(&sentence.tokens[j].surface),
        None if d < 0 => BEGIN.to_string(),
        None => END.to_string(),
    };
    let pos = |d: isize| match at(d) {
        Some(j) => clean(&sentence.tokens[j].pos),
        None if d < 0 => BEGIN.to_string(),
        None => END.to_string(),
    };
    let current = &sentence.tokens[k].surface;
    let mut out = Vec::new();
    for t in &config.templates {
        match *t {
            Template::Word { window } => {
                let w = window as isize;
                for d in -w..=w {
                    out.push(format!("W[{}]={}", offset(d), word(d)));
                }
            }
            Template::Pos { window } => {
                let w = window as isize;
                for d in -w..=w {
                    out.push(format!("P[{}]={}", offset(d), pos(d)));
                }
            }
            Template::Ngram { max } => {
                for len in 2..=max as isize {
                    for a in (1 - len)..=0 {
                        let b = a + len - 1;
                        if at(a).is_none() || at(b).is_none() {
                            continue;
                        }
                        let ws: Vec<String> = (a..=b).map(word).collect();
                        let ps: Vec<String> = (a..=b).map(pos).collect();
                        out.push(format!("WN[{},{}]={}", offset(a), offset(b), ws.join("|")));
                        out.push(format!("PN[{},{}]={}", offset(a), offset(b), ps.join("|")));
                    }
                }
            }
            Template::BagOfWords { window } => {
                let w = window as isize;
                let bag: BTreeSet<String> = (-w..=w)
                    .filter_map(at)
                    .map(|j| clean(&sentence.tokens[j].surface.to_lowercase()))
                    .collect();
                out.extend(bag.into_iter().map(|b| format!("BOW={b}")));
            }
            Template::Ortho => {
                out.extend(ortho_flags(current).into_iter().map(|f| format!("OR={f}")));
            }
            Template::Shape { window } => {
                let w = window as isize;
                for d in -w..=w {
                    match at(d) {
                        Some(j) => {
                            let s = &sentence.tokens[j].surface;
                            out.push(format!("SH[{}]={}", offset(d), clean(&word_shape(s))));
                            out.push(format!("SHC[{}]={}", offset(d), clean(&compressed_shape(s))));
                        }
                        None => out.push(format!("SH[{}]={}", offset(d), word(d))),
                    }
                }
            }
            Template::Affix { max } => {
                let chars: Vec<char> = current.chars().collect();
                for len in 1..=max.min(chars.len()) {
                    let pre: String = chars[..len].iter().collect();
                    let suf: String = chars[chars.len() - len..].iter().collect();
                    out.push(format!("PRE{len}={}", clean(&pre)));
                    out.push(format!("SUF{len}={}", clean(&suf)));
                }
            }
            Template::Brown { window } => {
                let w = window as isize;
                for d in -w..=w {
                    let Some(j) = at(d) else {
                        out.push(format!("BC[{}]={}", offset(d), word(d)));
                        continue;
                    };
                    let bits = brown.map_or(UNK_CLUSTER, |b| b.cluster(&sentence.tokens[j].surface));
                    out.push(format!("BC[{}]={bits}", offset(d)));
                    for p in [4, 6] {
                        if bits != UNK_CLUSTER && bits.len() > p {
                            out.push(format!("BC{p}[{}]={}", offset(d), &bits[..p]));
                        }
                    }
                }
            }
            Template::Bias => out.push("BIAS".into()),
        }
    }
    out
}

/// Gap `g` features: the word before (prefixed `L|`) and after (`R|`), with
/// sentinels at the sentence boundary.
pub fn gap_features(words: &[Vec<String>], g: usize) -> Vec<String> {
    let mut out = Vec::new();
    let mut push = |side: &str, feats: Option<&Vec<String>>, sentinel: &str| match feats {
        Some(fs) => {
            for f in fs {
                let mut s = String::with_capacity(side.len() + f.len());
                s.push_str(side);
                s.push_str(f);
                out.push(s);
            }
        }
        None => {
            let mut s = String::new();
            let _ = write!(s, "{side}{sentinel}");
            out.push(s);
        }
    };
    push("L|", g.checked_sub(1).and_then(|j| words.get(j)), BEGIN);
    push("R|", words.get(g), END);
    out
}
