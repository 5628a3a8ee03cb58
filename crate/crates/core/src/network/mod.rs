//! Scoring networks: directed acyclic (hyper)graphs over sentence positions.
//!
//! Every scheme builds a [`Network`] whose nodes are stored in topological
//! order (parents before children, root first, leaf last) and whose edges are
//! grouped by parent in declaration order. A [`Structure`] picks exactly one
//! outgoing edge for every node it includes.

mod build;
mod gold;

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::codec::Separator;
use crate::error::{Error, Result};

pub use build::build;
pub use gold::{attach_penalty, gold_structure, read_structure, reduce_to_capacity};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "lcrf-single")]
    LcrfSingle,
    #[serde(rename = "lcrf-multi")]
    LcrfMulti,
    #[serde(rename = "state")]
    State,
    #[serde(rename = "edge")]
    Edge,
    #[serde(rename = "hypergraph")]
    Hypergraph,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::LcrfSingle,
        Scheme::LcrfMulti,
        Scheme::State,
        Scheme::Edge,
        Scheme::Hypergraph,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::LcrfSingle => "lcrf-single",
            Scheme::LcrfMulti => "lcrf-multi",
            Scheme::State => "state",
            Scheme::Edge => "edge",
            Scheme::Hypergraph => "hypergraph",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown scheme {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BilouTag {
    B,
    I,
    L,
    U,
    O,
}

impl BilouTag {
    pub fn as_str(self) -> &'static str {
        match self {
            BilouTag::B => "B",
            BilouTag::I => "I",
            BilouTag::L => "L",
            BilouTag::U => "U",
            BilouTag::O => "O",
        }
    }
}

/// A BILOU tag together with its mention type (`None` for the untyped `O`
/// of the single-chain baseline).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Tag {
    pub tag: BilouTag,
    pub ty: Option<usize>,
}

impl Tag {
    fn can_start(self) -> bool {
        matches!(self.tag, BilouTag::O | BilouTag::B | BilouTag::U)
    }

    fn can_end(self) -> bool {
        matches!(self.tag, BilouTag::O | BilouTag::L | BilouTag::U)
    }

    fn can_precede(self, next: Tag) -> bool {
        match self.tag {
            BilouTag::B | BilouTag::I => {
                matches!(next.tag, BilouTag::I | BilouTag::L) && next.ty == self.ty
            }
            _ => next.can_start(),
        }
    }
}

/// Semantic role of a node. Positions are token indices, except for
/// `SepState` where the position is a gap index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeRole {
    Root,
    Leaf,
    /// Start of the per-type chain `t` when several chains share the root.
    ChainRoot(usize),
    O(usize),
    I(usize),
    SepState(usize, Separator),
    BilouState(usize, Tag),
    HgA(usize),
    HgE(usize),
    HgT(usize, usize),
    HgI(usize, usize),
}

impl fmt::Display for NodeRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            NodeRole::Root => write!(f, "Root"),
            NodeRole::Leaf => write!(f, "Leaf"),
            NodeRole::ChainRoot(t) => write!(f, "Chain{t}"),
            NodeRole::O(k) => write!(f, "O{k}"),
            NodeRole::I(k) => write!(f, "I{k}"),
            NodeRole::SepState(g, s) => write!(f, "{s}@{g}"),
            NodeRole::BilouState(k, tag) => match tag.ty {
                Some(t) => write!(f, "{}-{t}@{k}", tag.tag.as_str()),
                None => write!(f, "{}@{k}", tag.tag.as_str()),
            },
            NodeRole::HgA(k) => write!(f, "A{k}"),
            NodeRole::HgE(k) => write!(f, "E{k}"),
            NodeRole::HgT(k, t) => write!(f, "T{k}_{t}"),
            NodeRole::HgI(k, t) => write!(f, "I{k}_{t}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HyperKind {
    /// `A^k -> (A^{k+1}, E^k)`
    AE,
    /// `E^k -> (T^k_1 .. T^k_T)`
    ET,
    TI,
    TX,
    II,
    IX,
    /// `I^k -> (I^{k+1}, X)`
    IIX,
}

impl HyperKind {
    pub fn as_str(self) -> &'static str {
        match self {
            HyperKind::AE => "A>AE",
            HyperKind::ET => "E>T",
            HyperKind::TI => "T>I",
            HyperKind::TX => "T>X",
            HyperKind::II => "I>I",
            HyperKind::IX => "I>X",
            HyperKind::IIX => "I>IX",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeLabel {
    /// Root to the per-type chain roots.
    Fanout,
    /// LCRF transition; `None` marks sentence start or end.
    Transition { from: Option<Tag>, to: Option<Tag> },
    /// STATE transition between separator states.
    StateTransition {
        from: Option<Separator>,
        to: Option<Separator>,
    },
    /// EDGE multigraph edge carrying a separator.
    Sep(Separator),
    Hyper(HyperKind),
}

impl fmt::Display for EdgeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = |t: &Option<Tag>, edge: &str| match t {
            None => edge.to_string(),
            Some(t) => match t.ty {
                Some(ty) => format!("{}-{ty}", t.tag.as_str()),
                None => t.tag.as_str().to_string(),
            },
        };
        let sep = |s: &Option<Separator>, edge: &str| s.map_or(edge.to_string(), |s| s.to_string());
        match self {
            EdgeLabel::Fanout => write!(f, "fanout"),
            EdgeLabel::Transition { from, to } => {
                write!(f, "{}>{}", tag(from, "<S>"), tag(to, "</S>"))
            }
            EdgeLabel::StateTransition { from, to } => {
                write!(f, "{}>{}", sep(from, "<S>"), sep(to, "</S>"))
            }
            EdgeLabel::Sep(s) => write!(f, "{s}"),
            EdgeLabel::Hyper(k) => write!(f, "{}", k.as_str()),
        }
    }
}

/// Which input position an edge reads its features from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Anchor {
    None,
    Word(usize),
    Gap(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub role: NodeRole,
    pub chain: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub parent: usize,
    pub children: Vec<usize>,
    pub label: EdgeLabel,
    pub chain: Option<usize>,
    pub anchor: Anchor,
    pub penalty: bool,
}

#[derive(Debug, Clone)]
pub struct Network {
    scheme: Scheme,
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    out_start: Vec<usize>,
    root: usize,
    leaf: usize,
    num_tokens: usize,
    labels: Vec<String>,
}

impl Network {
    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn leaf(&self) -> usize {
        self.leaf
    }

    pub fn num_tokens(&self) -> usize {
        self.num_tokens
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Outgoing edge ids of `node`, in declaration order.
    pub fn out_edges(&self, node: usize) -> Range<usize> {
        self.out_start[node]..self.out_start[node + 1]
    }

    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    pub fn node(&self, v: usize) -> &Node {
        &self.nodes[v]
    }

    /// Checks topological order, reachability and co-reachability.
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.root != 0 || self.leaf + 1 != self.nodes.len() {
            return Err("root must be first and leaf last".into());
        }
        let mut reached = vec![false; self.nodes.len()];
        reached[self.root] = true;
        for v in 0..self.nodes.len() {
            let out = self.out_edges(v);
            if v == self.leaf {
                if !out.is_empty() {
                    return Err("leaf has outgoing edges".into());
                }
                continue;
            }
            if out.is_empty() {
                return Err(format!("node {} is a dead end", self.nodes[v].role));
            }
            if !reached[v] {
                return Err(format!("node {} unreachable", self.nodes[v].role));
            }
            for e in out {
                let edge = &self.edges[e];
                if edge.parent != v || edge.children.is_empty() {
                    return Err(format!("malformed edge {e}"));
                }
                for &c in &edge.children {
                    if c <= v {
                        return Err(format!("edge {e} breaks topological order"));
                    }
                    reached[c] = true;
                }
            }
        }
        Ok(())
    }

    /// One line per edge: `parent -> [children] label typeIndex`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for e in &self.edges {
            let kids: Vec<String> = e
                .children
                .iter()
                .map(|&c| self.nodes[c].role.to_string())
                .collect();
            let chain = e.chain.map_or("-".to_string(), |t| t.to_string());
            let pen = if e.penalty { " *" } else { "" };
            out.push_str(&format!(
                "{} -> [{}] {} {}{}\n",
                self.nodes[e.parent].role,
                kids.join(","),
                e.label,
                chain,
                pen
            ));
        }
        out
    }
}

/// Incremental construction of a [`Network`]. Nodes must be added in
/// topological order; the leaf is appended by [`NetworkBuilder::finish`].
pub struct NetworkBuilder {
    scheme: Scheme,
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    num_tokens: usize,
    labels: Vec<String>,
}

/// Placeholder id for the leaf while building.
pub const LEAF: usize = usize::MAX;

impl NetworkBuilder {
    pub fn new(scheme: Scheme, num_tokens: usize, labels: Vec<String>) -> Self {
        Self {
            scheme,
            nodes: vec![Node {
                role: NodeRole::Root,
                chain: None,
            }],
            edges: Vec::new(),
            num_tokens,
            labels,
        }
    }

    pub fn root(&self) -> usize {
        0
    }

    pub fn set_root_role(&mut self, role: NodeRole) {
        self.nodes[0].role = role;
    }

    pub fn add_node(&mut self, role: NodeRole, chain: Option<usize>) -> usize {
        self.nodes.push(Node { role, chain });
        self.nodes.len() - 1
    }

    pub fn add_edge(
        &mut self,
        parent: usize,
        children: Vec<usize>,
        label: EdgeLabel,
        chain: Option<usize>,
        anchor: Anchor,
    ) -> usize {
        self.edges.push(Edge {
            parent,
            children,
            label,
            chain,
            anchor,
            penalty: false,
        });
        self.edges.len() - 1
    }

    /// Appends the leaf, drops nodes that are unreachable or cannot reach
    /// the leaf, and re-indexes. Returns the network and the old-to-new edge
    /// id map (`None` for pruned edges).
    pub fn finish_with_map(self) -> (Network, Vec<Option<usize>>) {
        let NetworkBuilder {
            scheme,
            mut nodes,
            edges,
            num_tokens,
            labels,
        } = self;
        let leaf = nodes.len();
        nodes.push(Node {
            role: NodeRole::Leaf,
            chain: None,
        });
        let edges: Vec<Edge> = edges
            .into_iter()
            .map(|mut e| {
                for c in &mut e.children {
                    if *c == LEAF {
                        *c = leaf;
                    }
                }
                e
            })
            .collect();
        let nn = nodes.len();

        let mut by_parent: Vec<Vec<usize>> = vec![Vec::new(); nn];
        for (i, e) in edges.iter().enumerate() {
            by_parent[e.parent].push(i);
        }
        let mut alive = vec![false; nn];
        alive[leaf] = true;
        for v in (0..nn).rev() {
            if v != leaf {
                alive[v] = by_parent[v]
                    .iter()
                    .any(|&e| edges[e].children.iter().all(|&c| alive[c]));
            }
        }
        let usable = |e: &Edge, alive: &[bool]| e.children.iter().all(|&c| alive[c]);
        let mut reached = vec![false; nn];
        reached[0] = alive[0];
        for v in 0..nn {
            if !reached[v] {
                continue;
            }
            for &e in &by_parent[v] {
                if usable(&edges[e], &alive) {
                    for &c in &edges[e].children {
                        reached[c] = true;
                    }
                }
            }
        }
        let keep: Vec<bool> = (0..nn).map(|v| alive[v] && reached[v]).collect();
        let mut new_id = vec![usize::MAX; nn];
        let mut kept_nodes = Vec::new();
        for v in 0..nn {
            if keep[v] {
                new_id[v] = kept_nodes.len();
                kept_nodes.push(nodes[v].clone());
            }
        }
        let mut edge_map = vec![None; edges.len()];
        let mut kept_edges = Vec::new();
        let mut out_start = vec![0; kept_nodes.len() + 1];
        for v in 0..nn {
            if !keep[v] {
                continue;
            }
            for &e in &by_parent[v] {
                if !usable(&edges[e], &alive) {
                    continue;
                }
                let mut edge = edges[e].clone();
                edge.parent = new_id[v];
                for c in &mut edge.children {
                    *c = new_id[*c];
                }
                edge_map[e] = Some(kept_edges.len());
                kept_edges.push(edge);
            }
            out_start[new_id[v] + 1] = kept_edges.len();
        }
        let net = Network {
            scheme,
            root: 0,
            leaf: kept_nodes.len() - 1,
            nodes: kept_nodes,
            edges: kept_edges,
            out_start,
            num_tokens,
            labels,
        };
        debug_assert_eq!(net.validate(), Ok(()));
        (net, edge_map)
    }

    pub fn finish(self) -> Network {
        self.finish_with_map().0
    }
}

/// One chosen outgoing edge per included node.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Structure {
    choice: Vec<Option<usize>>,
}

impl Structure {
    pub fn empty(net: &Network) -> Self {
        Self {
            choice: vec![None; net.nodes().len()],
        }
    }

    pub fn from_choices(choice: Vec<Option<usize>>) -> Self {
        Self { choice }
    }

    pub fn choice(&self, node: usize) -> Option<usize> {
        self.choice[node]
    }

    pub fn set(&mut self, node: usize, edge: Option<usize>) {
        self.choice[node] = edge;
    }

    pub fn choices(&self) -> &[Option<usize>] {
        &self.choice
    }

    /// Chosen edges in topological (node) order.
    pub fn edges(&self) -> impl Iterator<Item = usize> + '_ {
        self.choice.iter().flatten().copied()
    }

    /// How many times each node occurs when the structure is unfolded from
    /// the root: 1 on chains, more when a node is shared by two included
    /// parents in a hypergraph.
    pub fn multiplicities(&self, net: &Network) -> Vec<u64> {
        let mut mult = vec![0u64; net.nodes().len()];
        mult[net.root()] = 1;
        for v in 0..mult.len() {
            if mult[v] == 0 {
                continue;
            }
            if let Some(e) = self.choice[v] {
                for &c in &net.edge(e).children {
                    mult[c] += mult[v];
                }
            }
        }
        mult
    }

    /// `(edge, occurrences)` for every chosen edge.
    pub fn edge_counts(&self, net: &Network) -> Vec<(usize, u64)> {
        let mult = self.multiplicities(net);
        self.choice
            .iter()
            .enumerate()
            .filter_map(|(v, c)| c.map(|e| (e, mult[v])))
            .collect()
    }

    /// Score of the unfolded structure: each edge weighted by how often its
    /// parent occurs.
    pub fn score(&self, net: &Network, potentials: &[f64]) -> f64 {
        self.edge_counts(net)
            .into_iter()
            .map(|(e, m)| m as f64 * potentials[e])
            .sum()
    }

    /// Rooted at the root, closed under children, and exactly the reached
    /// non-leaf nodes carry a choice.
    pub fn is_valid(&self, net: &Network) -> bool {
        if self.choice.len() != net.nodes().len() {
            return false;
        }
        let mut reached = vec![false; self.choice.len()];
        reached[net.root()] = true;
        for v in 0..self.choice.len() {
            match (reached[v], self.choice[v]) {
                (true, None) => {
                    if v != net.leaf() {
                        return false;
                    }
                }
                (true, Some(e)) => {
                    if !net.out_edges(v).contains(&e) {
                        return false;
                    }
                    for &c in &net.edge(e).children {
                        reached[c] = true;
                    }
                }
                (false, Some(_)) => return false,
                (false, None) => {}
            }
        }
        true
    }
}
