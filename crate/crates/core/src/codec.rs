//! Mention separators: labels on the `n + 1` gaps of an `n`-token sentence.
//!
//! Each gap carries three flags: a mention starts at the next word (`S`),
//! a mention ends at the previous word (`E`), a mention continues across the
//! gap (`C`). One sequence encodes the spans of a single mention type.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Inclusive token span `(start, end)`.
pub type Span = (usize, usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Separator {
    X,
    S,
    E,
    ES,
    C,
    CS,
    EC,
    ECS,
}

impl Separator {
    /// All eight symbols in canonical order.
    pub const ALL: [Separator; 8] = [
        Separator::X,
        Separator::S,
        Separator::E,
        Separator::ES,
        Separator::C,
        Separator::CS,
        Separator::EC,
        Separator::ECS,
    ];

    pub fn from_flags(s: bool, e: bool, c: bool) -> Self {
        match (e, c, s) {
            (false, false, false) => Separator::X,
            (false, false, true) => Separator::S,
            (true, false, false) => Separator::E,
            (true, false, true) => Separator::ES,
            (false, true, false) => Separator::C,
            (false, true, true) => Separator::CS,
            (true, true, false) => Separator::EC,
            (true, true, true) => Separator::ECS,
        }
    }

    pub fn has_s(self) -> bool {
        matches!(self, Separator::S | Separator::ES | Separator::CS | Separator::ECS)
    }

    pub fn has_e(self) -> bool {
        matches!(self, Separator::E | Separator::ES | Separator::EC | Separator::ECS)
    }

    pub fn has_c(self) -> bool {
        matches!(self, Separator::C | Separator::CS | Separator::EC | Separator::ECS)
    }

    /// The word after the gap lies inside a mention.
    pub fn next_in(self) -> bool {
        self.has_s() || self.has_c()
    }

    /// The word before the gap lies inside a mention.
    pub fn prev_in(self) -> bool {
        self.has_e() || self.has_c()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Separator::X => "X",
            Separator::S => "S",
            Separator::E => "E",
            Separator::ES => "ES",
            Separator::C => "C",
            Separator::CS => "CS",
            Separator::EC => "EC",
            Separator::ECS => "ECS",
        }
    }

    /// Symbols allowed at the first gap.
    pub fn allowed_first(self) -> bool {
        !self.has_e() && !self.has_c()
    }

    /// Symbols allowed at the last gap.
    pub fn allowed_last(self) -> bool {
        !self.has_s() && !self.has_c()
    }

    /// Whether `next` may follow `self` on the adjacent gap.
    pub fn can_precede(self, next: Separator) -> bool {
        self.next_in() == next.prev_in()
    }
}

impl fmt::Display for Separator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Separator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Separator::ALL
            .into_iter()
            .find(|sep| sep.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown separator {s:?}")))
    }
}

/// Gap labels for one mention type over an `n`-token sentence (`n + 1` gaps).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SeparatorSequence {
    pub gaps: Vec<Separator>,
    pub label: String,
}

impl SeparatorSequence {
    pub fn new(gaps: Vec<Separator>) -> Self {
        Self {
            gaps,
            label: String::new(),
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Number of tokens covered by the sequence.
    pub fn num_tokens(&self) -> usize {
        self.gaps.len().saturating_sub(1)
    }

    /// First violated constraint as `(gap, reason)`.
    pub fn violation(&self) -> Option<(usize, String)> {
        let gaps = &self.gaps;
        let Some((&first, &last)) = gaps.first().zip(gaps.last()) else {
            return Some((0, "empty sequence".into()));
        };
        if gaps.len() < 2 {
            return Some((0, "a sequence needs at least two gaps".into()));
        }
        if !first.allowed_first() {
            return Some((0, format!("{first} cannot open a sentence")));
        }
        for (g, w) in gaps.windows(2).enumerate() {
            if !w[0].can_precede(w[1]) {
                return Some((
                    g + 1,
                    format!("{} followed by {} disagrees on word {g}", w[0], w[1]),
                ));
            }
        }
        if !last.allowed_last() {
            return Some((gaps.len() - 1, format!("{last} cannot close a sentence")));
        }
        None
    }

    pub fn is_valid(&self) -> bool {
        self.violation().is_none()
    }

    /// Per-token "inside some mention" profile read from the gap after each
    /// word's left boundary.
    pub fn in_mention_from_next(&self) -> Vec<bool> {
        let n = self.num_tokens();
        self.gaps[..n].iter().map(|s| s.next_in()).collect()
    }

    /// Same profile read from the gap to the right of each word.
    pub fn in_mention_from_prev(&self) -> Vec<bool> {
        self.gaps[1..].iter().map(|s| s.prev_in()).collect()
    }
}

impl fmt::Display for SeparatorSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.gaps.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

impl FromStr for SeparatorSequence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let gaps = s
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<Vec<_>>>()?;
        Ok(SeparatorSequence::new(gaps))
    }
}

/// Encodes a same-type span set; any in-range set has exactly one encoding.
///
/// Panics if a span is out of range.
pub fn encode(n: usize, spans: &[Span]) -> SeparatorSequence {
    let mut s = vec![false; n + 1];
    let mut e = vec![false; n + 1];
    let mut c = vec![false; n + 1];
    for &(start, end) in spans {
        assert!(start <= end && end < n, "span ({start},{end}) out of range for {n} tokens");
        s[start] = true;
        e[end + 1] = true;
        for flag in &mut c[start + 1..=end] {
            *flag = true;
        }
    }
    let gaps = (0..=n)
        .map(|g| Separator::from_flags(s[g], e[g], c[g]))
        .collect();
    SeparatorSequence::new(gaps)
}

pub fn is_valid(seq: &SeparatorSequence) -> bool {
    seq.is_valid()
}

/// Reads a valid sequence back as a nested span set.
///
/// Scans gaps left to right with a stack of open starts. An `E` without `C`
/// closes every open start. An `E` with `C` closes the most recent start,
/// but the last remaining start stays open (shared start). An `S` opens a
/// start after any closing at the same gap. The output is sorted.
pub fn interpret(seq: &SeparatorSequence) -> Result<Vec<Span>> {
    if let Some((gap, reason)) = seq.violation() {
        return Err(Error::InvalidSequence { gap, reason });
    }
    let mut open: Vec<usize> = Vec::new();
    let mut spans = Vec::new();
    for (g, sep) in seq.gaps.iter().enumerate() {
        if sep.has_e() {
            if sep.has_c() {
                let top = *open.last().expect("valid sequence has an open start");
                spans.push((top, g - 1));
                if open.len() > 1 {
                    open.pop();
                }
            } else {
                spans.extend(open.drain(..).map(|s| (s, g - 1)));
            }
        }
        if sep.has_s() {
            open.push(g);
        }
    }
    debug_assert!(open.is_empty());
    spans.sort_unstable();
    spans.dedup();
    Ok(spans)
}

/// `interpret(encode(n, spans))`: the nested reading of a span set.
pub fn canonicalize_nested(n: usize, spans: &[Span]) -> Vec<Span> {
    interpret(&encode(n, spans)).expect("encode always yields a valid sequence")
}

/// Largest `n` accepted by [`enumerate_valid_sequences`].
pub const MAX_ENUMERATION_TOKENS: usize = 8;

/// Every valid sequence for `n` tokens in lexicographic order.
pub fn enumerate_valid_sequences(n: usize) -> Result<Vec<SeparatorSequence>> {
    if n > MAX_ENUMERATION_TOKENS {
        return Err(Error::BoundExceeded {
            what: format!("sequence enumeration for {n} tokens"),
            limit: MAX_ENUMERATION_TOKENS,
        });
    }
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(n + 1);
    extend(n, &mut cur, &mut out);
    Ok(out)
}

fn extend(n: usize, cur: &mut Vec<Separator>, out: &mut Vec<SeparatorSequence>) {
    let g = cur.len();
    for sep in Separator::ALL {
        let ok = match cur.last() {
            None => sep.allowed_first(),
            Some(prev) => prev.can_precede(sep),
        } && (g < n || sep.allowed_last());
        if !ok {
            continue;
        }
        cur.push(sep);
        if g == n {
            out.push(SeparatorSequence::new(cur.clone()));
        } else {
            extend(n, cur, out);
        }
        cur.pop();
    }
}

/// Number of valid sequences for `n >= 1` tokens from the two-state
/// (outside, inside) transfer matrix `[[1, 1], [1, 5]]`.
pub fn transfer_matrix_count(n: usize) -> u128 {
    if n == 0 {
        return 0;
    }
    // First word: X leads outside, S leads inside.
    let mut v = [1u128, 1u128];
    for _ in 1..n {
        v = [v[0] + v[1], v[0] + 5 * v[1]];
    }
    // Last gap: X after an outside word, E after an inside word.
    v[0] + v[1]
}

#[cfg(test)]
mod tests {
    use super::*;
    use Separator::*;

    fn seq(s: &str) -> SeparatorSequence {
        s.parse().unwrap()
    }

    #[test]
    fn flag_bijection() {
        for sep in Separator::ALL {
            assert_eq!(Separator::from_flags(sep.has_s(), sep.has_e(), sep.has_c()), sep);
            assert_eq!(sep.as_str().parse::<Separator>().unwrap(), sep);
        }
    }

    #[test]
    fn encode_examples() {
        assert_eq!(encode(4, &[(1, 3), (2, 2)]).gaps, [X, S, CS, EC, E]);
        assert_eq!(encode(3, &[]).gaps, [X, X, X, X]);
        assert_eq!(encode(4, &[(1, 1), (1, 3)]).gaps, [X, S, EC, C, E]);
    }

    #[test]
    fn validity_examples() {
        assert!(seq("X S EC C E").is_valid());
        assert!(!seq("E X").is_valid());
        assert!(!seq("S X").is_valid());
        assert_eq!(seq("S X").violation().unwrap().0, 1);
        assert!(!seq("X").is_valid());
    }

    #[test]
    fn interpret_examples() {
        assert_eq!(interpret(&seq("X S CS EC E")).unwrap(), [(1, 3), (2, 2)]);
        assert_eq!(interpret(&seq("X X X X")).unwrap(), []);
        assert_eq!(interpret(&seq("S CS E")).unwrap(), [(0, 1), (1, 1)]);
        assert_eq!(interpret(&seq("X S EC C E")).unwrap(), [(1, 1), (1, 3)]);
    }

    #[test]
    fn interpret_rejects_invalid_with_gap() {
        match interpret(&seq("X S X X")) {
            Err(Error::InvalidSequence { gap, .. }) => assert_eq!(gap, 2),
            r => panic!("unexpected {r:?}"),
        }
    }

    #[test]
    fn canonicalize_examples() {
        assert_eq!(canonicalize_nested(4, &[(1, 3), (2, 2)]), [(1, 3), (2, 2)]);
        assert_eq!(encode(3, &[(0, 1), (1, 2)]).gaps, [S, CS, EC, E]);
        assert_eq!(canonicalize_nested(3, &[(0, 1), (1, 2)]), [(0, 2), (1, 1)]);
        assert_eq!(canonicalize_nested(3, &[]), []);
    }

    #[test]
    fn enumeration_small_cases() {
        let one = enumerate_valid_sequences(1).unwrap();
        assert_eq!(one, [seq("X X"), seq("S E")]);
        assert_eq!(enumerate_valid_sequences(2).unwrap().len(), 8);
        assert_eq!(enumerate_valid_sequences(3).unwrap().len(), 40);
        assert!(enumerate_valid_sequences(9).is_err());
    }

    #[test]
    fn enumeration_is_sorted() {
        let all = enumerate_valid_sequences(4).unwrap();
        assert!(all.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn transfer_counts() {
        assert_eq!(transfer_matrix_count(1), 2);
        assert_eq!(transfer_matrix_count(2), 8);
        assert_eq!(transfer_matrix_count(3), 40);
    }

    #[test]
    fn display_is_space_joined() {
        assert_eq!(encode(4, &[(1, 3), (2, 2)]).to_string(), "X S CS EC E");
    }
}
