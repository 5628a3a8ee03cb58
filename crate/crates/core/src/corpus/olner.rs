//! OLNER: three lines per sentence (tokens, POS tags, mentions) and a blank
//! separator line. Fields on the first two lines are tab-separated; mentions
//! are `start,end,LABEL` joined by `;`.

use super::{utf8, Corpus, Mention, Sentence, Token};
use crate::error::{Error, Result};

pub fn parse_olner(text: &[u8]) -> Result<Corpus> {
    let text = utf8(text)?;
    let lines: Vec<&str> = text
        .split('\n')
        .map(|l| l.strip_suffix('\r').unwrap_or(l))
        .collect();
    // `split` yields a trailing empty piece for LF-terminated input.
    let total = if text.ends_with('\n') {
        lines.len() - 1
    } else {
        lines.len()
    };

    let mut sentences = Vec::new();
    let mut i = 0;
    while i < total {
        if lines[i].is_empty() {
            i += 1;
            continue;
        }
        if i + 2 >= total {
            return Err(Error::parse(
                i + 1,
                "malformed block: expected 3 lines (tokens, POS tags, mentions)",
            ));
        }
        let (tok_line, pos_line, men_line) = (lines[i], lines[i + 1], lines[i + 2]);
        let surfaces: Vec<&str> = tok_line.split('\t').collect();
        let tags: Vec<&str> = pos_line.split('\t').collect();
        if surfaces.len() != tags.len() {
            return Err(Error::parse(
                i + 2,
                format!(
                    "malformed block: {} tokens but {} POS tags",
                    surfaces.len(),
                    tags.len()
                ),
            ));
        }
        if let Some(k) = surfaces.iter().position(|s| s.is_empty()) {
            return Err(Error::parse(i + 1, format!("empty token at index {k}")));
        }
        if let Some(k) = tags.iter().position(|s| s.is_empty()) {
            return Err(Error::parse(i + 2, format!("empty POS tag at index {k}")));
        }
        let n = surfaces.len();
        let mentions = parse_mentions(men_line, n, i + 3)?;
        if i + 3 < total && !lines[i + 3].is_empty() {
            return Err(Error::parse(
                i + 4,
                "malformed block: expected a blank line after 3 lines",
            ));
        }
        let tokens = surfaces
            .iter()
            .zip(&tags)
            .map(|(s, p)| Token::new(*s, *p))
            .collect();
        let id = sentences.len().to_string();
        sentences.push(Sentence::new(id, tokens, mentions).map_err(|e| Error::parse(i + 1, e.to_string()))?);
        i += 4;
    }
    Ok(Corpus::new(sentences))
}

fn parse_mentions(line: &str, n: usize, lineno: usize) -> Result<Vec<Mention>> {
    if line.is_empty() {
        return Ok(Vec::new());
    }
    line.split(';')
        .map(|field| {
            let mut parts = field.splitn(3, ',');
            let (Some(s), Some(e), Some(label)) = (parts.next(), parts.next(), parts.next())
            else {
                return Err(Error::parse(lineno, format!("bad mention field {field:?}")));
            };
            let start: usize = s
                .parse()
                .map_err(|_| Error::parse(lineno, format!("bad start index {s:?}")))?;
            let end: usize = e
                .parse()
                .map_err(|_| Error::parse(lineno, format!("bad end index {e:?}")))?;
            if end < start {
                return Err(Error::parse(lineno, format!("end < start in {field:?}")));
            }
            if end >= n {
                return Err(Error::parse(
                    lineno,
                    format!("span index out of range in {field:?} ({n} tokens)"),
                ));
            }
            if label.is_empty() {
                return Err(Error::parse(lineno, format!("empty label in {field:?}")));
            }
            Ok(Mention::new(start, end, label))
        })
        .collect()
}

pub fn write_olner(corpus: &Corpus) -> Vec<u8> {
    let mut out = String::new();
    for s in &corpus.sentences {
        let surfaces: Vec<&str> = s.tokens.iter().map(|t| t.surface.as_str()).collect();
        let tags: Vec<&str> = s.tokens.iter().map(|t| t.pos.as_str()).collect();
        out.push_str(&surfaces.join("\t"));
        out.push('\n');
        out.push_str(&tags.join("\t"));
        out.push('\n');
        let mentions: Vec<String> = s
            .mentions()
            .iter()
            .map(|m| format!("{},{},{}", m.start, m.end, m.label))
            .collect();
        out.push_str(&mentions.join(";"));
        out.push_str("\n\n");
    }
    out.into_bytes()
}

#[cfg(test)]
mod tests {
    use super::*;

    const TCF: &str = "the\thuman\tTCF-1\tprotein\nDT\tNN\tNN\tNN\n1,3,PROT;2,2,PROT\n\n";

    #[test]
    fn parses_overlapping_block() {
        let c = parse_olner(TCF.as_bytes()).unwrap();
        assert_eq!(c.len(), 1);
        let s = &c.sentences[0];
        assert_eq!(s.len(), 4);
        assert_eq!(
            s.mentions(),
            [Mention::new(1, 3, "PROT"), Mention::new(2, 2, "PROT")]
        );
        assert_eq!(c.labels(), ["PROT"]);
    }

    #[test]
    fn empty_mention_line() {
        let c = parse_olner(b"a\tb\n-\t-\n\n\n").unwrap();
        assert!(c.sentences[0].mentions().is_empty());
    }

    #[test]
    fn end_before_start_reports_line() {
        let text = format!("{TCF}x\ty\tz\tw\n-\t-\t-\t-\n3,1,PROT\n\n");
        let err = parse_olner(text.as_bytes()).unwrap_err();
        match err {
            Error::Parse { line, message } => {
                assert_eq!(line, 7);
                assert!(message.contains("end < start"), "{message}");
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn out_of_range_and_wrong_line_count() {
        assert!(matches!(
            parse_olner(b"a\n-\n0,1,A\n\n"),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(matches!(
            parse_olner(b"a\tb\n-\n\n\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_olner(b"a\n-\n\nextra\n\n"),
            Err(Error::Parse { line: 4, .. })
        ));
        assert!(matches!(parse_olner(b"a\n-\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn write_sorts_mentions() {
        let s = Sentence::from_words("a b c d", &[(2, 2, "A"), (1, 3, "A")]);
        let out = String::from_utf8(write_olner(&Corpus::new(vec![s]))).unwrap();
        assert_eq!(out.lines().nth(2), Some("1,3,A;2,2,A"));
    }

    #[test]
    fn empty_corpus_writes_nothing() {
        assert!(write_olner(&Corpus::default()).is_empty());
        assert!(parse_olner(b"").unwrap().is_empty());
    }

    #[test]
    fn normalized_text_roundtrips_bytewise() {
        let c = parse_olner(TCF.as_bytes()).unwrap();
        assert_eq!(write_olner(&c), TCF.as_bytes());
        let unsorted = "a\tb\n-\t-\n1,1,B;0,1,A\n\n";
        let c = parse_olner(unsorted.as_bytes()).unwrap();
        assert_eq!(write_olner(&c), b"a\tb\n-\t-\n0,1,A;1,1,B\n\n");
    }
}
