use std::collections::BTreeSet;

use proptest::prelude::*;

use sepmark::codec::{self, Separator, SeparatorSequence, Span};
use sepmark::corpus::{compute_stats, parse_olner, write_olner, Corpus, Mention, Sentence, Token};
use sepmark::network::{build, gold_structure, read_structure, reduce_to_capacity, Scheme};

const LABELS: [&str; 2] = ["DNA", "PROT"];

fn crossing(a: Span, b: Span) -> bool {
    a.0 < b.0 && b.0 <= a.1 && a.1 < b.1
}

/// Random walk over the separator transition rules.
fn valid_sequence(n: usize) -> impl Strategy<Value = SeparatorSequence> {
    proptest::collection::vec(0usize..8, n + 1).prop_filter_map("dead end", move |picks| {
        let mut gaps: Vec<Separator> = Vec::with_capacity(n + 1);
        for (g, pick) in picks.into_iter().enumerate() {
            let options: Vec<Separator> = Separator::ALL
                .into_iter()
                .filter(|s| match gaps.last() {
                    None => s.allowed_first(),
                    Some(p) => p.can_precede(*s),
                })
                .filter(|s| g < n || s.allowed_last())
                .collect();
            if options.is_empty() {
                return None;
            }
            gaps.push(options[pick % options.len()]);
        }
        Some(SeparatorSequence::new(gaps))
    })
}

fn sentence(max_len: usize) -> impl Strategy<Value = Sentence> {
    (1..=max_len)
        .prop_flat_map(|n| {
            let words = proptest::collection::vec(
                (proptest::sample::select(vec!["a", "b", "p53", "Gene-1", "x.y"]), proptest::sample::select(vec!["NN", "JJ"])),
                n,
            );
            let mentions = proptest::collection::btree_set((0..n, 0..n, 0..2usize), 0..6);
            (words, mentions)
        })
        .prop_map(|(words, mentions)| {
            let tokens = words.into_iter().map(|(w, p)| Token::new(w, p)).collect();
            let mentions: BTreeSet<(usize, usize, usize)> = mentions
                .into_iter()
                .map(|(a, b, t)| (a.min(b), a.max(b), t))
                .collect();
            let mentions = mentions
                .into_iter()
                .map(|(s, e, t)| Mention::new(s, e, LABELS[t]))
                .collect();
            Sentence::new("s", tokens, mentions).unwrap()
        })
}

proptest! {
    #[test]
    fn encoding_is_valid_and_interpretation_nested(n in 1usize..=7, seed in any::<u64>()) {
        let all: Vec<Span> = (0..n).flat_map(|s| (s..n).map(move |e| (s, e))).collect();
        let chosen: Vec<Span> = all.iter().enumerate().filter(|(i, _)| seed >> (i % 64) & 1 == 1).map(|(_, s)| *s).collect();
        let seq = codec::encode(n, &chosen);
        prop_assert!(seq.is_valid());
        let read = codec::interpret(&seq).unwrap();
        for &a in &read {
            for &b in &read {
                prop_assert!(!crossing(a, b), "{:?} {:?}", a, b);
            }
        }
        prop_assert_eq!(codec::encode(n, &read), seq);
        prop_assert_eq!(codec::canonicalize_nested(n, &read), read);
    }

    #[test]
    fn valid_sequences_roundtrip(seq in (1usize..=10).prop_flat_map(valid_sequence)) {
        prop_assert!(seq.is_valid());
        let n = seq.num_tokens();
        let read = codec::interpret(&seq).unwrap();
        prop_assert_eq!(codec::encode(n, &read), seq.clone());
        let text = seq.to_string();
        prop_assert_eq!(text.parse::<SeparatorSequence>().unwrap(), seq);
    }

    #[test]
    fn olner_roundtrip(mut sentences in proptest::collection::vec(sentence(6), 1..5)) {
        // The format has no id field; readers number sentences from zero.
        for (i, s) in sentences.iter_mut().enumerate() {
            s.id = i.to_string();
        }
        let corpus = Corpus::with_labels(sentences, LABELS);
        let bytes = write_olner(&corpus);
        let back = parse_olner(&bytes).unwrap();
        prop_assert_eq!(&back.sentences, &corpus.sentences);
        prop_assert_eq!(write_olner(&back), bytes);
    }

    #[test]
    fn stats_match_pairwise_count(sentences in proptest::collection::vec(sentence(8), 1..6)) {
        let corpus = Corpus::with_labels(sentences, LABELS);
        let st = compute_stats(&corpus);
        let (mut ol, mut same, mut with) = (0, 0, 0);
        for s in &corpus.sentences {
            let ms = s.mentions();
            let hits = |typed: bool| ms.iter().enumerate().filter(|(i, a)| {
                ms.iter().enumerate().any(|(j, b)| {
                    *i != j && a.start <= b.end && b.start <= a.end && (!typed || a.label == b.label)
                })
            }).count();
            let o = hits(false);
            ol += o;
            same += hits(true);
            with += usize::from(o > 0);
        }
        prop_assert_eq!(st.num_overlapping_mentions, ol);
        prop_assert_eq!(st.num_same_type_overlapping_mentions, same);
        prop_assert_eq!(st.num_sentences_with_overlap, with);
        prop_assert_eq!(st.num_mentions, corpus.sentences.iter().map(|s| s.mentions().len()).sum::<usize>());
    }

    #[test]
    fn gold_structures_read_back(s in sentence(5)) {
        let labels: Vec<String> = LABELS.iter().map(|l| l.to_string()).collect();
        for scheme in Scheme::ALL {
            let (reduced, _) = reduce_to_capacity(scheme, &s);
            let net = build(scheme, s.len(), &labels).unwrap();
            let st = gold_structure(&net, reduced.mentions()).unwrap();
            prop_assert!(st.is_valid(&net));
            let read = read_structure(&net, &st).unwrap();
            let mut expected: Vec<Mention> = match scheme {
                Scheme::LcrfSingle | Scheme::LcrfMulti => reduced.mentions().to_vec(),
                _ => LABELS
                    .iter()
                    .flat_map(|l| {
                        codec::canonicalize_nested(s.len(), &s.spans_of(l))
                            .into_iter()
                            .map(|(a, b)| Mention::new(a, b, *l))
                    })
                    .collect(),
            };
            expected.sort();
            prop_assert_eq!(read, expected, "{:?}", scheme);
        }
    }
}
