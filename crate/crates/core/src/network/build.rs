use super::{
    Anchor, BilouTag, EdgeLabel, HyperKind, Network, NetworkBuilder, NodeRole, Scheme, Tag, LEAF,
};
use crate::codec::Separator;
use crate::error::{Error, Result};

/// Builds the unlabeled network of `scheme` for a sentence of `num_tokens`
/// tokens over `labels`. Penalty marks are not attached.
pub fn build(scheme: Scheme, num_tokens: usize, labels: &[String]) -> Result<Network> {
    if num_tokens == 0 {
        return Err(Error::EmptySentence);
    }
    if labels.is_empty() {
        return Err(Error::InvalidArgument("empty label set".into()));
    }
    let mut b = NetworkBuilder::new(scheme, num_tokens, labels.to_vec());
    match scheme {
        Scheme::LcrfSingle => {
            let mut tags = vec![Tag { tag: BilouTag::O, ty: None }];
            for t in 0..labels.len() {
                for tag in [BilouTag::B, BilouTag::I, BilouTag::L, BilouTag::U] {
                    tags.push(Tag { tag, ty: Some(t) });
                }
            }
            let root = b.root();
            bilou_chain(&mut b, root, None, &tags);
        }
        Scheme::LcrfMulti => {
            let roots = chain_roots(&mut b, labels.len());
            for (t, &r) in roots.iter().enumerate() {
                let tags: Vec<Tag> = [BilouTag::O, BilouTag::B, BilouTag::I, BilouTag::L, BilouTag::U]
                    .into_iter()
                    .map(|tag| Tag { tag, ty: Some(t) })
                    .collect();
                bilou_chain(&mut b, r, Some(t), &tags);
            }
        }
        Scheme::State => {
            let roots = chain_roots(&mut b, labels.len());
            for (t, &r) in roots.iter().enumerate() {
                state_chain(&mut b, r, t);
            }
        }
        Scheme::Edge => {
            let roots = chain_roots(&mut b, labels.len());
            for (t, &r) in roots.iter().enumerate() {
                edge_chain(&mut b, r, t);
            }
        }
        Scheme::Hypergraph => hypergraph(&mut b, labels.len()),
    }
    Ok(b.finish())
}

/// One start node per type: the root itself for a single type, otherwise
/// fresh chain roots fanned out from the root by one hyperedge.
fn chain_roots(b: &mut NetworkBuilder, types: usize) -> Vec<usize> {
    if types == 1 {
        return vec![b.root()];
    }
    let roots: Vec<usize> = (0..types)
        .map(|t| b.add_node(NodeRole::ChainRoot(t), Some(t)))
        .collect();
    let root = b.root();
    b.add_edge(root, roots.clone(), EdgeLabel::Fanout, None, Anchor::None);
    roots
}

fn bilou_chain(b: &mut NetworkBuilder, start: usize, chain: Option<usize>, tags: &[Tag]) {
    let n = b.num_tokens;
    let mut prev: Vec<usize> = Vec::new();
    for k in 0..n {
        let cur: Vec<usize> = tags
            .iter()
            .map(|&tag| b.add_node(NodeRole::BilouState(k, tag), chain.or(tag.ty)))
            .collect();
        if k == 0 {
            for (j, &tag) in tags.iter().enumerate() {
                if tag.can_start() {
                    let label = EdgeLabel::Transition { from: None, to: Some(tag) };
                    b.add_edge(start, vec![cur[j]], label, chain.or(tag.ty), Anchor::Word(0));
                }
            }
        } else {
            for (i, &from) in tags.iter().enumerate() {
                for (j, &to) in tags.iter().enumerate() {
                    if from.can_precede(to) {
                        let label = EdgeLabel::Transition { from: Some(from), to: Some(to) };
                        b.add_edge(prev[i], vec![cur[j]], label, chain.or(to.ty), Anchor::Word(k));
                    }
                }
            }
        }
        prev = cur;
    }
    for (i, &from) in tags.iter().enumerate() {
        if from.can_end() {
            let label = EdgeLabel::Transition { from: Some(from), to: None };
            b.add_edge(prev[i], vec![LEAF], label, chain.or(from.ty), Anchor::None);
        }
    }
}

fn state_chain(b: &mut NetworkBuilder, start: usize, t: usize) {
    let n = b.num_tokens;
    let mut prev: Vec<(Separator, usize)> = Vec::new();
    for g in 0..=n {
        let cur: Vec<(Separator, usize)> = Separator::ALL
            .into_iter()
            .filter(|s| (g > 0 || s.allowed_first()) && (g < n || s.allowed_last()))
            .map(|s| (s, b.add_node(NodeRole::SepState(g, s), Some(t))))
            .collect();
        if g == 0 {
            for &(s, v) in &cur {
                let label = EdgeLabel::StateTransition { from: None, to: Some(s) };
                b.add_edge(start, vec![v], label, Some(t), Anchor::Gap(0));
            }
        } else {
            for &(a, u) in &prev {
                for &(s, v) in &cur {
                    if a.can_precede(s) {
                        let label = EdgeLabel::StateTransition { from: Some(a), to: Some(s) };
                        b.add_edge(u, vec![v], label, Some(t), Anchor::Gap(g));
                    }
                }
            }
        }
        prev = cur;
    }
    for &(a, u) in &prev {
        let label = EdgeLabel::StateTransition { from: Some(a), to: None };
        b.add_edge(u, vec![LEAF], label, Some(t), Anchor::None);
    }
}

fn edge_chain(b: &mut NetworkBuilder, start: usize, t: usize) {
    let n = b.num_tokens;
    let mut outside = Vec::with_capacity(n);
    let mut inside = Vec::with_capacity(n);
    for k in 0..n {
        outside.push(b.add_node(NodeRole::O(k), Some(t)));
        inside.push(b.add_node(NodeRole::I(k), Some(t)));
    }
    for s in Separator::ALL.into_iter().filter(|s| s.allowed_first()) {
        let to = if s.next_in() { inside[0] } else { outside[0] };
        b.add_edge(start, vec![to], EdgeLabel::Sep(s), Some(t), Anchor::Gap(0));
    }
    for k in 0..n.saturating_sub(1) {
        for from_in in [false, true] {
            for s in Separator::ALL.into_iter().filter(|s| s.prev_in() == from_in) {
                let from = if from_in { inside[k] } else { outside[k] };
                let to = if s.next_in() { inside[k + 1] } else { outside[k + 1] };
                b.add_edge(from, vec![to], EdgeLabel::Sep(s), Some(t), Anchor::Gap(k + 1));
            }
        }
    }
    for s in Separator::ALL.into_iter().filter(|s| s.allowed_last()) {
        let from = if s.prev_in() { inside[n - 1] } else { outside[n - 1] };
        b.add_edge(from, vec![LEAF], EdgeLabel::Sep(s), Some(t), Anchor::Gap(n));
    }
}

fn hypergraph(b: &mut NetworkBuilder, types: usize) {
    let n = b.num_tokens;
    b.set_root_role(NodeRole::HgA(0));
    let mut a = vec![b.root()];
    let mut e = Vec::with_capacity(n);
    let mut tnodes = Vec::with_capacity(n);
    let mut inodes = Vec::with_capacity(n);
    for k in 0..n {
        if k > 0 {
            a.push(b.add_node(NodeRole::HgA(k), None));
        }
        e.push(b.add_node(NodeRole::HgE(k), None));
        tnodes.push((0..types).map(|t| b.add_node(NodeRole::HgT(k, t), Some(t))).collect::<Vec<_>>());
        inodes.push((0..types).map(|t| b.add_node(NodeRole::HgI(k, t), Some(t))).collect::<Vec<_>>());
    }
    let hyper = |k| EdgeLabel::Hyper(k);
    for k in 0..n {
        let kids = if k + 1 < n { vec![a[k + 1], e[k]] } else { vec![e[k]] };
        b.add_edge(a[k], kids, hyper(HyperKind::AE), None, Anchor::None);
    }
    for k in 0..n {
        b.add_edge(e[k], tnodes[k].clone(), hyper(HyperKind::ET), None, Anchor::None);
        for t in 0..types {
            let (tn, inode) = (tnodes[k][t], inodes[k][t]);
            b.add_edge(tn, vec![LEAF], hyper(HyperKind::TX), Some(t), Anchor::Gap(k));
            b.add_edge(tn, vec![inode], hyper(HyperKind::TI), Some(t), Anchor::Gap(k));
        }
    }
    for k in 0..n {
        for (t, &inode) in inodes[k].iter().enumerate() {
            b.add_edge(inode, vec![LEAF], hyper(HyperKind::IX), Some(t), Anchor::Gap(k + 1));
            if k + 1 < n {
                let next = inodes[k + 1][t];
                b.add_edge(inode, vec![next], hyper(HyperKind::II), Some(t), Anchor::Gap(k + 1));
                b.add_edge(inode, vec![next, LEAF], hyper(HyperKind::IIX), Some(t), Anchor::Gap(k + 1));
            }
        }
    }
}
