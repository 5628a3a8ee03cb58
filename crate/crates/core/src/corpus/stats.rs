use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{Corpus, Sentence};

/// Counts in the layout of a dataset statistics table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CorpusStats {
    pub num_sentences: usize,
    pub num_sentences_with_overlap: usize,
    pub num_mentions: usize,
    pub num_overlapping_mentions: usize,
    pub num_same_type_overlapping_mentions: usize,
}

impl CorpusStats {
    /// Line-oriented text report followed by a `key=value` block.
    pub fn report(&self) -> String {
        let pct = |a: usize, b: usize| {
            if b == 0 {
                0.0
            } else {
                100.0 * a as f64 / b as f64
            }
        };
        let mut out = String::new();
        out.push_str(&format!("# sentences          {:>8}\n", self.num_sentences));
        out.push_str(&format!(
            "  w/ o.l.            {:>8} ({:.0})\n",
            self.num_sentences_with_overlap,
            pct(self.num_sentences_with_overlap, self.num_sentences)
        ));
        out.push_str(&format!("# mentions           {:>8}\n", self.num_mentions));
        out.push_str(&format!(
            "  o.l.               {:>8} ({:.0})\n",
            self.num_overlapping_mentions,
            pct(self.num_overlapping_mentions, self.num_mentions)
        ));
        out.push_str(&format!(
            "  o.l. (s)           {:>8} ({:.0})\n",
            self.num_same_type_overlapping_mentions,
            pct(self.num_same_type_overlapping_mentions, self.num_mentions)
        ));
        out.push_str("[stats]\n");
        out.push_str(&format!("sentences={}\n", self.num_sentences));
        out.push_str(&format!("sentences_with_overlap={}\n", self.num_sentences_with_overlap));
        out.push_str(&format!("mentions={}\n", self.num_mentions));
        out.push_str(&format!("overlapping_mentions={}\n", self.num_overlapping_mentions));
        out.push_str(&format!(
            "same_type_overlapping_mentions={}\n",
            self.num_same_type_overlapping_mentions
        ));
        out
    }
}

/// Per-mention `(overlapping, same_type_overlapping)` flags, aligned with
/// `sentence.mentions()`.
///
/// A mention overlaps another exactly when some token it covers is covered
/// at least twice, so coverage counts decide both flags.
pub fn overlapping_flags(sentence: &Sentence) -> Vec<(bool, bool)> {
    let n = sentence.len();
    let mut all = vec![0u32; n];
    let mut by_type: HashMap<&str, Vec<u32>> = HashMap::new();
    for m in sentence.mentions() {
        let typed = by_type.entry(&m.label).or_insert_with(|| vec![0; n]);
        for k in m.start..=m.end {
            all[k] += 1;
            typed[k] += 1;
        }
    }
    sentence
        .mentions()
        .iter()
        .map(|m| {
            let typed = &by_type[m.label.as_str()];
            let any = (m.start..=m.end).any(|k| all[k] >= 2);
            let same = (m.start..=m.end).any(|k| typed[k] >= 2);
            (any, same)
        })
        .collect()
}

fn has_overlap(sentence: &Sentence) -> bool {
    overlapping_flags(sentence).iter().any(|&(o, _)| o)
}

pub fn compute_stats(corpus: &Corpus) -> CorpusStats {
    let mut st = CorpusStats {
        num_sentences: corpus.len(),
        ..Default::default()
    };
    for s in &corpus.sentences {
        let flags = overlapping_flags(s);
        st.num_mentions += flags.len();
        let ol = flags.iter().filter(|f| f.0).count();
        st.num_overlapping_mentions += ol;
        st.num_same_type_overlapping_mentions += flags.iter().filter(|f| f.1).count();
        if ol > 0 {
            st.num_sentences_with_overlap += 1;
        }
    }
    st
}

/// Splits into `(sentences with an overlapping mention, the rest)`, keeping
/// order and the label set.
pub fn split_by_overlap(corpus: &Corpus) -> (Corpus, Corpus) {
    let (ol, plain): (Vec<Sentence>, Vec<Sentence>) =
        corpus.sentences.iter().cloned().partition(has_overlap);
    let labels = corpus.labels().to_vec();
    (
        Corpus::with_labels(ol, labels.clone()),
        Corpus::with_labels(plain, labels),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three() -> Corpus {
        Corpus::new(vec![
            Sentence::from_words("a b c d", &[(1, 3, "P"), (2, 2, "P")]),
            Sentence::from_words("a b c", &[(0, 0, "A"), (2, 2, "B")]),
            Sentence::from_words("a b c", &[(0, 2, "A"), (1, 1, "B")]),
        ])
    }

    #[test]
    fn table_examples() {
        let c = three();
        let one = |i: usize| compute_stats(&Corpus::new(vec![c.sentences[i].clone()]));
        assert_eq!(
            one(0),
            CorpusStats {
                num_sentences: 1,
                num_sentences_with_overlap: 1,
                num_mentions: 2,
                num_overlapping_mentions: 2,
                num_same_type_overlapping_mentions: 2,
            }
        );
        assert_eq!(one(1).num_overlapping_mentions, 0);
        assert_eq!(one(1).num_same_type_overlapping_mentions, 0);
        assert_eq!(one(2).num_overlapping_mentions, 2);
        assert_eq!(one(2).num_same_type_overlapping_mentions, 0);
    }

    #[test]
    fn split_examples() {
        let (ol, plain) = split_by_overlap(&three());
        assert_eq!(ol.sentences, [three().sentences[0].clone(), three().sentences[2].clone()]);
        assert_eq!(plain.sentences, [three().sentences[1].clone()]);

        let none = Corpus::new(vec![Sentence::from_words("x y", &[])]);
        let (ol, plain) = split_by_overlap(&none);
        assert!(ol.is_empty());
        assert_eq!(plain, none);

        let nested = Corpus::new(vec![three().sentences[0].clone()]);
        assert!(split_by_overlap(&nested).1.is_empty());
    }
}
