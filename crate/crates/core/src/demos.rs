//! Executable demonstrations: spurious structures counted by the hypergraph
//! dynamic program, and uniqueness of separator encodings.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::codec::{self, Span};
use crate::error::{Error, Result};
use crate::inference;
use crate::network::{Anchor, EdgeLabel, HyperKind, Network, NetworkBuilder, NodeRole, Scheme, LEAF};

/// Names of the six edges of the restricted graph, in weight order.
pub const EDGE_NAMES: [char; 6] = ['A', 'B', 'C', 'D', 'E', 'F'];

/// The three-token mention hypergraph restricted to edges
/// A = T1->I1, B = I0->I1, C = I1->I2, D = I1->X, E = I1->(I2,X), F = I2->X,
/// plus the scaffolding that reaches both T1 and I0 from the root. Node I1
/// has two parents.
#[derive(Debug, Clone)]
pub struct RestrictedHypergraph {
    pub network: Network,
    /// Edge id of each named edge, in [`EDGE_NAMES`] order.
    pub named: [usize; 6],
}

impl RestrictedHypergraph {
    pub fn build() -> Self {
        let mut b = NetworkBuilder::new(Scheme::Hypergraph, 3, vec!["M".to_string()]);
        b.set_root_role(NodeRole::HgA(0));
        let a0 = b.root();
        let a1 = b.add_node(NodeRole::HgA(1), None);
        let e0 = b.add_node(NodeRole::HgE(0), None);
        let e1 = b.add_node(NodeRole::HgE(1), None);
        let t0 = b.add_node(NodeRole::HgT(0, 0), Some(0));
        let t1 = b.add_node(NodeRole::HgT(1, 0), Some(0));
        let i0 = b.add_node(NodeRole::HgI(0, 0), Some(0));
        let i1 = b.add_node(NodeRole::HgI(1, 0), Some(0));
        let i2 = b.add_node(NodeRole::HgI(2, 0), Some(0));
        let h = EdgeLabel::Hyper;
        let c = Some(0);
        b.add_edge(a0, vec![a1, e0], h(HyperKind::AE), None, Anchor::None);
        b.add_edge(a1, vec![e1], h(HyperKind::AE), None, Anchor::None);
        b.add_edge(e0, vec![t0], h(HyperKind::ET), None, Anchor::None);
        b.add_edge(e1, vec![t1], h(HyperKind::ET), None, Anchor::None);
        b.add_edge(t0, vec![i0], h(HyperKind::TI), c, Anchor::Gap(0));
        let ea = b.add_edge(t1, vec![i1], h(HyperKind::TI), c, Anchor::Gap(1));
        let eb = b.add_edge(i0, vec![i1], h(HyperKind::II), c, Anchor::Gap(1));
        let ec = b.add_edge(i1, vec![i2], h(HyperKind::II), c, Anchor::Gap(2));
        let ed = b.add_edge(i1, vec![LEAF], h(HyperKind::IX), c, Anchor::Gap(2));
        let ee = b.add_edge(i1, vec![i2, LEAF], h(HyperKind::IIX), c, Anchor::Gap(2));
        let ef = b.add_edge(i2, vec![LEAF], h(HyperKind::IX), c, Anchor::Gap(3));
        let (network, map) = b.finish_with_map();
        let named = [ea, eb, ec, ed, ee, ef].map(|e| map[e].expect("named edges survive pruning"));
        Self { network, named }
    }

    pub fn name_of(&self, edge: usize) -> Option<char> {
        self.named.iter().position(|&e| e == edge).map(|i| EDGE_NAMES[i])
    }

    /// Potentials with the six named weights and zero on scaffolding.
    pub fn potentials(&self, weights: &[f64; 6]) -> Vec<f64> {
        let mut pot = vec![0.0; self.network.edges().len()];
        for (i, &e) in self.named.iter().enumerate() {
            pot[e] = weights[i];
        }
        pot
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Combination {
    /// `a` through `i`.
    pub tag: char,
    /// Edges below T1 (through A) and below I0 (through B).
    pub first: String,
    pub second: String,
    /// Both branches agree on the shared node, so the pair is a hyperpath.
    pub valid: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpuriousReport {
    pub weights: [f64; 6],
    pub dp_log_z: f64,
    pub true_log_z: f64,
    pub spurious_mass: f64,
    /// Named edges of every hyperpath, in enumeration order.
    pub hyperpaths: Vec<String>,
    pub combinations: Vec<Combination>,
    pub dp_terms: u128,
}

impl SpuriousReport {
    pub fn report(&self) -> String {
        let mut out = String::new();
        out.push_str("restricted hypergraph: A=T1>I1 B=I0>I1 C=I1>I2 D=I1>X E=I1>(I2,X) F=I2>X\n");
        out.push_str(&format!("weights A..F: {:?}\n", self.weights));
        out.push_str(&format!("DP combinations: {}\n", self.dp_terms));
        for c in &self.combinations {
            out.push_str(&format!(
                "  ({}) {} and {}{}\n",
                c.tag,
                c.first,
                c.second,
                if c.valid { "  valid" } else { "" }
            ));
        }
        out.push_str(&format!("hyperpaths: {}\n", self.hyperpaths.len()));
        for p in &self.hyperpaths {
            out.push_str(&format!("  {{{p}}}\n"));
        }
        out.push_str(&format!(
            "Z' (dynamic program) = {:.6}\nZ  (hyperpaths)      = {:.6}\n",
            self.dp_log_z.exp(),
            self.true_log_z.exp()
        ));
        out.push_str(&format!(
            "[spurious]\ndp_log_z={}\ntrue_log_z={}\ndp_z={}\ntrue_z={}\nspurious_mass={}\nhyperpaths={}\ndp_terms={}\n",
            self.dp_log_z,
            self.true_log_z,
            self.dp_log_z.exp(),
            self.true_log_z.exp(),
            self.spurious_mass,
            self.hyperpaths.len(),
            self.dp_terms
        ));
        out
    }
}

/// Runs the dynamic program and explicit enumeration on the restricted
/// graph with the given weights for A..F (all zero when `None`).
pub fn demo_spurious(weights: Option<[f64; 6]>) -> Result<SpuriousReport> {
    let weights = weights.unwrap_or([0.0; 6]);
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::InvalidArgument("weights must be finite".into()));
    }
    let g = RestrictedHypergraph::build();
    let pot = g.potentials(&weights);
    let dp_log_z = inference::inside(&g.network, &pot).log_z;
    let true_log_z = inference::brute_force_log_z(&g.network, &pot)?;
    let mut hyperpaths = Vec::new();
    inference::for_each_structure(&g.network, inference::BRUTE_FORCE_LIMIT, |st| {
        let mut names: Vec<char> = st.edges().filter_map(|e| g.name_of(e)).collect();
        names.sort();
        hyperpaths.push(names.iter().map(char::to_string).collect::<Vec<_>>().join(","));
    })?;
    let branches = ["C-F", "D", "E-F"];
    let mut combinations = Vec::new();
    for (i, x) in branches.iter().enumerate() {
        for (j, y) in branches.iter().enumerate() {
            combinations.push(Combination {
                tag: (b'a' + (3 * i + j) as u8) as char,
                first: format!("A-{x}"),
                second: format!("B-{y}"),
                valid: i == j,
            });
        }
    }
    Ok(SpuriousReport {
        weights,
        dp_log_z,
        true_log_z,
        spurious_mass: dp_log_z.exp() - true_log_z.exp(),
        hyperpaths,
        combinations,
        dp_terms: inference::count_derivations(&g.network),
    })
}

pub const MAX_UNIQUENESS_TOKENS: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UniquenessReport {
    pub n: usize,
    pub span_sets: usize,
    /// Distinct sequences produced by encoding every span set.
    pub image: usize,
    pub valid_sequences: usize,
    pub transfer_count: u128,
    /// Every span set encoded to exactly one valid sequence.
    pub total: bool,
    pub bijective: bool,
}

impl UniquenessReport {
    pub fn report(&self) -> String {
        format!(
            "n={}: {} span sets -> {} distinct sequences; {} valid sequences (transfer matrix {}); encode total: {}; bijective: {}\n[uniqueness]\nn={}\nspan_sets={}\nimage={}\nvalid_sequences={}\ntransfer_count={}\ntotal={}\nbijective={}\n",
            self.n,
            self.span_sets,
            self.image,
            self.valid_sequences,
            self.transfer_count,
            self.total,
            self.bijective,
            self.n,
            self.span_sets,
            self.image,
            self.valid_sequences,
            self.transfer_count,
            self.total,
            self.bijective
        )
    }
}

/// All spans of an `n`-token sentence, ordered by start then end.
pub fn all_spans(n: usize) -> Vec<Span> {
    (0..n).flat_map(|s| (s..n).map(move |e| (s, e))).collect()
}

/// Encodes every subset of the spans of an `n`-token sentence.
pub fn demo_uniqueness(n: usize) -> Result<UniquenessReport> {
    if n > MAX_UNIQUENESS_TOKENS {
        return Err(Error::BoundExceeded {
            what: format!("uniqueness enumeration for {n} tokens"),
            limit: MAX_UNIQUENESS_TOKENS,
        });
    }
    if n == 0 {
        return Err(Error::EmptySentence);
    }
    let spans = all_spans(n);
    let span_sets = 1usize << spans.len();
    let mut image = BTreeSet::new();
    let mut total = true;
    for mask in 0..span_sets {
        let subset: Vec<Span> = spans
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, s)| *s)
            .collect();
        let seq = codec::encode(n, &subset);
        total &= seq.is_valid() && codec::encode(n, &subset) == seq;
        image.insert(seq.to_string());
    }
    let valid_sequences = codec::enumerate_valid_sequences(n)?.len();
    Ok(UniquenessReport {
        n,
        span_sets,
        image: image.len(),
        valid_sequences,
        transfer_count: codec::transfer_matrix_count(n),
        total,
        bijective: image.len() == span_sets,
    })
}
