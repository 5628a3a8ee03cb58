use std::cmp::Reverse;

use super::{BilouTag, EdgeLabel, HyperKind, Network, Node, NodeRole, Scheme, Structure, Tag};
use crate::codec::{self, Separator, SeparatorSequence};
use crate::corpus::{Mention, Sentence};
use crate::error::{Error, Result};

/// Marks the edges that introduce a mention: into `B`/`U` states, into
/// separator states or `I` nodes opened by `S`, and `T -> I` hyperedges.
/// Idempotent.
pub fn attach_penalty(net: &mut Network) {
    for i in 0..net.edges.len() {
        let e = &net.edges[i];
        let marked = match (net.scheme, e.label) {
            (Scheme::LcrfSingle | Scheme::LcrfMulti, EdgeLabel::Transition { to: Some(tag), .. }) => {
                matches!(tag.tag, BilouTag::B | BilouTag::U)
            }
            (Scheme::State, EdgeLabel::StateTransition { to: Some(s), .. }) => s.has_s(),
            (Scheme::Edge, EdgeLabel::Sep(_)) => {
                matches!(net.nodes[e.children[0]].role, NodeRole::I(_))
            }
            (Scheme::Hypergraph, EdgeLabel::Hyper(HyperKind::TI)) => true,
            _ => false,
        };
        net.edges[i].penalty = marked;
    }
}

fn type_index(net: &Network, m: &Mention) -> Result<usize> {
    net.labels()
        .iter()
        .position(|l| *l == m.label)
        .ok_or_else(|| Error::InvalidArgument(format!("mention label {:?} not in label set", m.label)))
}

fn bilou_tags(
    n: usize,
    mentions: &[&Mention],
    outside: Option<usize>,
    ty: impl Fn(&Mention) -> Option<usize>,
) -> Vec<Tag> {
    let mut tags = vec![Tag { tag: BilouTag::O, ty: outside }; n];
    for m in mentions {
        let ty = ty(m);
        for (k, tag) in tags.iter_mut().enumerate().take(m.end + 1).skip(m.start) {
            let t = if m.start == m.end {
                BilouTag::U
            } else if k == m.start {
                BilouTag::B
            } else if k == m.end {
                BilouTag::L
            } else {
                BilouTag::I
            };
            *tag = Tag { tag: t, ty };
        }
    }
    tags
}

fn first_overlap<'a>(ms: &[&'a Mention]) -> Option<(&'a Mention, &'a Mention)> {
    for (i, m) in ms.iter().enumerate() {
        if let Some(o) = ms[..i].iter().find(|o| o.overlaps(m)) {
            return Some((o, m));
        }
    }
    None
}

fn capacity(net: &Network, pair: (&Mention, &Mention)) -> Error {
    Error::Capacity {
        scheme: net.scheme().to_string(),
        first: pair.0.clone(),
        second: pair.1.clone(),
    }
}

/// The structure encoding `mentions`. The BILOU baselines fail with a
/// capacity error on mentions they cannot hold together.
pub fn gold_structure(net: &Network, mentions: &[Mention]) -> Result<Structure> {
    let n = net.num_tokens();
    let types = net.labels().len();
    let mut by_type: Vec<Vec<&Mention>> = vec![Vec::new(); types];
    for m in mentions {
        if m.end >= n {
            return Err(Error::Misaligned(format!("mention {m} beyond {n} tokens")));
        }
        by_type[type_index(net, m)?].push(m);
    }
    let chain_of = |node: &Node| match node.role {
        NodeRole::Root => 0,
        _ => node.chain.expect("chain nodes carry their type"),
    };

    match net.scheme() {
        Scheme::LcrfSingle => {
            let all: Vec<&Mention> = by_type.iter().flatten().copied().collect();
            if let Some(pair) = first_overlap(&all) {
                return Err(capacity(net, pair));
            }
            let tags = bilou_tags(n, &all, None, |m| type_index(net, m).ok());
            walk(net, |node| match node.role {
                NodeRole::Root => EdgeLabel::Transition { from: None, to: Some(tags[0]) },
                NodeRole::BilouState(k, tag) => EdgeLabel::Transition {
                    from: Some(tag),
                    to: tags.get(k + 1).copied(),
                },
                _ => unreachable!(),
            })
        }
        Scheme::LcrfMulti => {
            let mut chains = Vec::with_capacity(types);
            for (t, ms) in by_type.iter().enumerate() {
                if let Some(pair) = first_overlap(ms) {
                    return Err(capacity(net, pair));
                }
                chains.push(bilou_tags(n, ms, Some(t), |_| Some(t)));
            }
            walk(net, |node| match node.role {
                NodeRole::Root if types > 1 => EdgeLabel::Fanout,
                NodeRole::Root | NodeRole::ChainRoot(_) => EdgeLabel::Transition {
                    from: None,
                    to: Some(chains[chain_of(node)][0]),
                },
                NodeRole::BilouState(k, tag) => EdgeLabel::Transition {
                    from: Some(tag),
                    to: chains[chain_of(node)].get(k + 1).copied(),
                },
                _ => unreachable!(),
            })
        }
        Scheme::State | Scheme::Edge => {
            let seqs: Vec<SeparatorSequence> = by_type
                .iter()
                .map(|ms| {
                    let spans: Vec<_> = ms.iter().map(|m| (m.start, m.end)).collect();
                    codec::encode(n, &spans)
                })
                .collect();
            let state = net.scheme() == Scheme::State;
            walk(net, |node| {
                if node.role == NodeRole::Root && types > 1 {
                    return EdgeLabel::Fanout;
                }
                let seq = &seqs[chain_of(node)].gaps;
                match node.role {
                    NodeRole::Root | NodeRole::ChainRoot(_) if state => {
                        EdgeLabel::StateTransition { from: None, to: Some(seq[0]) }
                    }
                    NodeRole::Root | NodeRole::ChainRoot(_) => EdgeLabel::Sep(seq[0]),
                    NodeRole::SepState(g, s) => EdgeLabel::StateTransition {
                        from: Some(s),
                        to: seq.get(g + 1).copied(),
                    },
                    NodeRole::O(k) | NodeRole::I(k) => EdgeLabel::Sep(seq[k + 1]),
                    _ => unreachable!(),
                }
            })
        }
        Scheme::Hypergraph => walk(net, |node| {
            let kind = match node.role {
                NodeRole::HgA(_) => HyperKind::AE,
                NodeRole::HgE(_) => HyperKind::ET,
                NodeRole::HgT(k, t) => {
                    if by_type[t].iter().any(|m| m.start == k) {
                        HyperKind::TI
                    } else {
                        HyperKind::TX
                    }
                }
                NodeRole::HgI(k, t) => {
                    let ends = by_type[t].iter().any(|m| m.end == k);
                    let goes_on = by_type[t].iter().any(|m| m.start <= k && k < m.end);
                    match (ends, goes_on) {
                        (true, true) => HyperKind::IIX,
                        (false, true) => HyperKind::II,
                        _ => HyperKind::IX,
                    }
                }
                _ => unreachable!(),
            };
            EdgeLabel::Hyper(kind)
        }),
    }
}

/// Follows the network from the root, taking at every reached node the
/// outgoing edge whose label is `desired(node)`.
fn walk(net: &Network, desired: impl Fn(&Node) -> EdgeLabel) -> Result<Structure> {
    let mut st = Structure::empty(net);
    let mut reached = vec![false; net.nodes().len()];
    reached[net.root()] = true;
    for v in 0..net.nodes().len() {
        if !reached[v] || v == net.leaf() {
            continue;
        }
        let want = desired(net.node(v));
        let e = net
            .out_edges(v)
            .find(|&e| net.edge(e).label == want)
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "no edge {want} out of {} in the {} network",
                    net.node(v).role,
                    net.scheme()
                ))
            })?;
        st.set(v, Some(e));
        for &c in &net.edge(e).children {
            reached[c] = true;
        }
    }
    Ok(st)
}

/// Mentions encoded by a valid structure, sorted.
pub fn read_structure(net: &Network, st: &Structure) -> Result<Vec<Mention>> {
    let n = net.num_tokens();
    let types = net.labels().len();
    let mut out = Vec::new();
    match net.scheme() {
        Scheme::LcrfSingle | Scheme::LcrfMulti => {
            let chains = if net.scheme() == Scheme::LcrfSingle { 1 } else { types };
            let mut tags = vec![vec![None; n]; chains];
            for e in st.edges() {
                let edge = net.edge(e);
                if let (EdgeLabel::Transition { to: Some(tag), .. }, super::Anchor::Word(k)) =
                    (edge.label, edge.anchor)
                {
                    let c = if chains == 1 { 0 } else { tag.ty.unwrap_or(0) };
                    tags[c][k] = Some(tag);
                }
            }
            for chain in &tags {
                let mut open: Option<(usize, usize)> = None;
                for (k, tag) in chain.iter().enumerate() {
                    let Some(tag) = tag else { continue };
                    let ty = tag.ty.unwrap_or(0);
                    match tag.tag {
                        BilouTag::B => open = Some((k, ty)),
                        BilouTag::L => {
                            if let Some((s, t)) = open.take() {
                                out.push(Mention::new(s, k, net.labels()[t].clone()));
                            }
                        }
                        BilouTag::U => out.push(Mention::new(k, k, net.labels()[ty].clone())),
                        BilouTag::I => {}
                        BilouTag::O => open = None,
                    }
                }
            }
        }
        Scheme::State | Scheme::Edge => {
            let mut seqs = vec![vec![Separator::X; n + 1]; types];
            for e in st.edges() {
                let edge = net.edge(e);
                let sep = match edge.label {
                    EdgeLabel::Sep(s) => s,
                    EdgeLabel::StateTransition { to: Some(s), .. } => s,
                    _ => continue,
                };
                if let super::Anchor::Gap(g) = edge.anchor {
                    seqs[edge.chain.expect("chain edges carry their type")][g] = sep;
                }
            }
            for (t, gaps) in seqs.into_iter().enumerate() {
                push_spans(&mut out, SeparatorSequence::new(gaps), &net.labels()[t])?;
            }
        }
        Scheme::Hypergraph => {
            let mut flags = vec![vec![(false, false, false); n + 1]; types];
            for e in st.edges() {
                let edge = net.edge(e);
                let (EdgeLabel::Hyper(kind), super::Anchor::Gap(g)) = (edge.label, edge.anchor) else {
                    continue;
                };
                let f = &mut flags[edge.chain.expect("typed hyperedge")][g];
                match kind {
                    HyperKind::TI => f.0 = true,
                    HyperKind::IX => f.1 = true,
                    HyperKind::II => f.2 = true,
                    HyperKind::IIX => {
                        f.1 = true;
                        f.2 = true;
                    }
                    _ => {}
                }
            }
            for (t, gaps) in flags.into_iter().enumerate() {
                let seq = gaps
                    .into_iter()
                    .map(|(s, e, c)| Separator::from_flags(s, e, c))
                    .collect();
                push_spans(&mut out, SeparatorSequence::new(seq), &net.labels()[t])?;
            }
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

fn push_spans(out: &mut Vec<Mention>, seq: SeparatorSequence, label: &str) -> Result<()> {
    for (s, e) in codec::interpret(&seq)? {
        out.push(Mention::new(s, e, label));
    }
    Ok(())
}

/// Drops mentions a BILOU baseline cannot hold, keeping earlier-starting and
/// then longer mentions first. Other schemes keep everything. Returns the
/// reduced sentence and the dropped mentions.
pub fn reduce_to_capacity(scheme: Scheme, sentence: &Sentence) -> (Sentence, Vec<Mention>) {
    let per_type = match scheme {
        Scheme::LcrfSingle => false,
        Scheme::LcrfMulti => true,
        _ => return (sentence.clone(), Vec::new()),
    };
    let mut order: Vec<&Mention> = sentence.mentions().iter().collect();
    order.sort_by_key(|m| (m.start, Reverse(m.end), m.label.clone()));
    let mut kept: Vec<Mention> = Vec::new();
    let mut dropped = Vec::new();
    for m in order {
        let clash = kept
            .iter()
            .any(|k| k.overlaps(m) && (!per_type || k.label == m.label));
        if clash {
            dropped.push(m.clone());
        } else {
            kept.push(m.clone());
        }
    }
    dropped.sort();
    (sentence.with_mentions(kept), dropped)
}
