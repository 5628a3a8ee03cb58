//! CoNLL column files: `surface pos chunk netag`, one token per line, blank
//! line between sentences. NE tags may use BIO or BILOU.
//!
//! The normalized form written by [`write_conll`] uses single spaces, a `-`
//! chunk column and BIO tags, and roundtrips byte-exactly.

use std::fmt;

use super::{utf8, Corpus, Mention, Sentence, Token};
use crate::error::{Error, Result};

/// A lenient fix applied while reading NE tags.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConllRepair {
    pub line: usize,
    pub tag: String,
    pub action: &'static str,
}

impl fmt::Display for ConllRepair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: dangling {} {}", self.line, self.tag, self.action)
    }
}

#[derive(Debug, Clone)]
pub struct ConllDocument {
    pub corpus: Corpus,
    pub repairs: Vec<ConllRepair>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TagEncoding {
    #[default]
    Bio,
    Bilou,
}

struct Open {
    start: usize,
    label: String,
}

pub fn parse_conll_bio(text: &[u8]) -> Result<ConllDocument> {
    let text = utf8(text)?;
    let mut sentences = Vec::new();
    let mut repairs = Vec::new();

    let mut tokens: Vec<Token> = Vec::new();
    let mut mentions: Vec<Mention> = Vec::new();
    let mut open: Option<Open> = None;

    let flush = |tokens: &mut Vec<Token>,
                     mentions: &mut Vec<Mention>,
                     open: &mut Option<Open>,
                     sentences: &mut Vec<Sentence>| {
        if let Some(o) = open.take() {
            mentions.push(Mention::new(o.start, tokens.len() - 1, o.label));
        }
        if !tokens.is_empty() {
            let id = sentences.len().to_string();
            let s = Sentence::new(id, std::mem::take(tokens), std::mem::take(mentions))
                .expect("spans built from tag runs are in range");
            sentences.push(s);
        }
    };

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim_end();
        if line.is_empty() {
            flush(&mut tokens, &mut mentions, &mut open, &mut sentences);
            continue;
        }
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols[0] == "-DOCSTART-" {
            continue;
        }
        if cols.len() < 2 {
            return Err(Error::parse(lineno, "expected at least surface and NE tag columns"));
        }
        let surface = cols[0];
        let pos = if cols.len() >= 3 { cols[1] } else { "-" };
        let tag = cols[cols.len() - 1];
        let k = tokens.len();
        tokens.push(Token::new(surface, pos));

        let close = |open: &mut Option<Open>, mentions: &mut Vec<Mention>, end: usize| {
            if let Some(o) = open.take() {
                mentions.push(Mention::new(o.start, end, o.label));
            }
        };

        if tag == "O" {
            close(&mut open, &mut mentions, k.saturating_sub(1));
            continue;
        }
        let Some((prefix, label)) = tag.split_once('-') else {
            return Err(Error::parse(lineno, format!("bad NE tag {tag:?}")));
        };
        if label.is_empty() {
            return Err(Error::parse(lineno, format!("bad NE tag {tag:?}")));
        }
        let continues = open.as_ref().is_some_and(|o| o.label == label);
        match prefix {
            "B" => {
                close(&mut open, &mut mentions, k.saturating_sub(1));
                open = Some(Open { start: k, label: label.into() });
            }
            "I" | "L" => {
                if !continues {
                    close(&mut open, &mut mentions, k.saturating_sub(1));
                    let r = ConllRepair {
                        line: lineno,
                        tag: tag.into(),
                        action: "treated as B",
                    };
                    log::warn!("{r}");
                    repairs.push(r);
                    open = Some(Open { start: k, label: label.into() });
                }
                if prefix == "L" {
                    close(&mut open, &mut mentions, k);
                }
            }
            "U" => {
                close(&mut open, &mut mentions, k.saturating_sub(1));
                mentions.push(Mention::new(k, k, label));
            }
            _ => return Err(Error::parse(lineno, format!("bad NE tag prefix in {tag:?}"))),
        }
    }
    flush(&mut tokens, &mut mentions, &mut open, &mut sentences);

    Ok(ConllDocument {
        corpus: Corpus::new(sentences),
        repairs,
    })
}

/// Writes normalized CoNLL. Fails on overlapping mentions, which a flat tag
/// sequence cannot hold.
pub fn write_conll(corpus: &Corpus, encoding: TagEncoding) -> Result<Vec<u8>> {
    let mut out = String::new();
    for s in &corpus.sentences {
        let mut tags = vec![String::from("O"); s.len()];
        let ms = s.mentions();
        for (i, m) in ms.iter().enumerate() {
            if let Some(other) = ms[..i].iter().find(|o| o.overlaps(m)) {
                return Err(Error::Capacity {
                    scheme: "conll".into(),
                    first: other.clone(),
                    second: m.clone(),
                });
            }
            for (k, tag) in tags.iter_mut().enumerate().take(m.end + 1).skip(m.start) {
                let prefix = match encoding {
                    TagEncoding::Bio if k == m.start => "B",
                    TagEncoding::Bio => "I",
                    TagEncoding::Bilou if m.start == m.end => "U",
                    TagEncoding::Bilou if k == m.start => "B",
                    TagEncoding::Bilou if k == m.end => "L",
                    TagEncoding::Bilou => "I",
                };
                *tag = format!("{prefix}-{}", m.label);
            }
        }
        for (t, tag) in s.tokens.iter().zip(&tags) {
            out.push_str(&format!("{} {} - {}\n", t.surface, t.pos, tag));
        }
        out.push('\n');
    }
    Ok(out.into_bytes())
}
