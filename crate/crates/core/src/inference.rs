//! Exact inference on a [`Network`]: inside scores and the log-partition,
//! outside scores and edge marginals, max-product decoding, and brute-force
//! enumeration used as an oracle.
//!
//! A hyperedge multiplies the inside scores of all its children, so on
//! hypergraphs the partition function counts every combination of child
//! sub-derivations, including those that choose differently at a node
//! shared by two parents.

use crate::error::{Error, Result};
use crate::features::EdgeFeatureTable;
use crate::network::{Network, Structure};

/// Largest number of structures the brute-force oracles will visit.
pub const BRUTE_FORCE_LIMIT: usize = 1_000_000;

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

#[derive(Debug, Clone, PartialEq)]
pub struct InsideTable {
    /// Log inside score per node; 0 at the leaf.
    pub inside: Vec<f64>,
    pub log_z: f64,
}

pub fn inside(net: &Network, potentials: &[f64]) -> InsideTable {
    let nn = net.nodes().len();
    let mut ins = vec![f64::NEG_INFINITY; nn];
    ins[net.leaf()] = 0.0;
    for v in (0..nn).rev() {
        if v == net.leaf() {
            continue;
        }
        let mut acc = f64::NEG_INFINITY;
        for e in net.out_edges(v) {
            let score = potentials[e] + net.edge(e).children.iter().map(|&c| ins[c]).sum::<f64>();
            acc = log_add(acc, score);
        }
        ins[v] = acc;
    }
    InsideTable {
        log_z: ins[net.root()],
        inside: ins,
    }
}

/// Log outside score per node.
pub fn outside(net: &Network, potentials: &[f64], table: &InsideTable) -> Vec<f64> {
    let nn = net.nodes().len();
    let mut out = vec![f64::NEG_INFINITY; nn];
    out[net.root()] = 0.0;
    for v in 0..nn {
        if out[v] == f64::NEG_INFINITY {
            continue;
        }
        for e in net.out_edges(v) {
            let edge = net.edge(e);
            let total: f64 = edge.children.iter().map(|&c| table.inside[c]).sum();
            for &c in &edge.children {
                let contribution = out[v] + potentials[e] + total - table.inside[c];
                out[c] = log_add(out[c], contribution);
            }
        }
    }
    out
}

/// Expected number of times each edge is used. On chain networks these are
/// probabilities; on hypergraphs an edge below a shared node can be used
/// more than once per derivation.
pub fn edge_marginals(net: &Network, potentials: &[f64], table: &InsideTable) -> Vec<f64> {
    let out = outside(net, potentials, table);
    (0..net.edges().len())
        .map(|e| {
            let edge = net.edge(e);
            let ins: f64 = edge.children.iter().map(|&c| table.inside[c]).sum();
            (out[edge.parent] + potentials[e] + ins - table.log_z).exp()
        })
        .collect()
}

/// `sum_e p(e) f(e)`, dense over `dim` features.
pub fn expected_features(marginals: &[f64], features: &EdgeFeatureTable, dim: usize) -> Vec<f64> {
    let mut out = vec![0.0; dim];
    for (e, &p) in marginals.iter().enumerate() {
        if p != 0.0 {
            features.add_scaled(e, p, &mut out);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub structure: Structure,
    pub score: f64,
}

/// Max-product decoding. Among equal-scoring edges the first declared wins.
pub fn decode(net: &Network, potentials: &[f64]) -> Decoded {
    let nn = net.nodes().len();
    let mut best = vec![f64::NEG_INFINITY; nn];
    let mut arg = vec![None; nn];
    best[net.leaf()] = 0.0;
    for v in (0..nn).rev() {
        if v == net.leaf() {
            continue;
        }
        for e in net.out_edges(v) {
            let s = potentials[e] + net.edge(e).children.iter().map(|&c| best[c]).sum::<f64>();
            if arg[v].is_none() || s > best[v] {
                best[v] = s;
                arg[v] = Some(e);
            }
        }
    }
    let mut st = Structure::empty(net);
    let mut reached = vec![false; nn];
    reached[net.root()] = true;
    for v in 0..nn {
        if reached[v] && v != net.leaf() {
            let e = arg[v].expect("every non-leaf node has an outgoing edge");
            st.set(v, Some(e));
            for &c in &net.edge(e).children {
                reached[c] = true;
            }
        }
    }
    Decoded {
        structure: st,
        score: best[net.root()],
    }
}

/// Number of derivations the dynamic program sums over, saturating.
pub fn count_derivations(net: &Network) -> u128 {
    let nn = net.nodes().len();
    let mut cnt = vec![0u128; nn];
    cnt[net.leaf()] = 1;
    for v in (0..nn).rev() {
        if v == net.leaf() {
            continue;
        }
        cnt[v] = net.out_edges(v).fold(0u128, |acc, e| {
            let prod = net
                .edge(e)
                .children
                .iter()
                .fold(1u128, |p, &c| p.saturating_mul(cnt[c]));
            acc.saturating_add(prod)
        });
    }
    cnt[net.root()]
}

/// Visits every structure (hyperpath) in lexicographic order of its edge
/// choices, taken in topological node order. Fails once more than `limit`
/// structures exist.
pub fn for_each_structure(
    net: &Network,
    limit: usize,
    mut visit: impl FnMut(&Structure),
) -> Result<usize> {
    struct Walk<'a, F> {
        net: &'a Network,
        reached: Vec<u32>,
        st: Structure,
        count: usize,
        limit: usize,
        visit: F,
    }
    impl<F: FnMut(&Structure)> Walk<'_, F> {
        fn go(&mut self, from: usize) -> Result<()> {
            let net = self.net;
            let next = (from..net.nodes().len()).find(|&v| self.reached[v] > 0 && v != net.leaf());
            let Some(v) = next else {
                self.count += 1;
                if self.count > self.limit {
                    return Err(Error::BoundExceeded {
                        what: "number of structures".into(),
                        limit: self.limit,
                    });
                }
                (self.visit)(&self.st);
                return Ok(());
            };
            for e in net.out_edges(v) {
                self.st.set(v, Some(e));
                for &c in &net.edge(e).children {
                    self.reached[c] += 1;
                }
                let r = self.go(v + 1);
                for &c in &net.edge(e).children {
                    self.reached[c] -= 1;
                }
                r?;
            }
            self.st.set(v, None);
            Ok(())
        }
    }
    let mut reached = vec![0; net.nodes().len()];
    reached[net.root()] = 1;
    let mut w = Walk {
        net,
        reached,
        st: Structure::empty(net),
        count: 0,
        limit,
        visit: &mut visit,
    };
    w.go(0)?;
    Ok(w.count)
}

/// Log of the sum of exponentiated structure scores over explicitly
/// enumerated structures.
pub fn brute_force_log_z(net: &Network, potentials: &[f64]) -> Result<f64> {
    let mut acc = f64::NEG_INFINITY;
    for_each_structure(net, BRUTE_FORCE_LIMIT, |st| {
        acc = log_add(acc, st.score(net, potentials));
    })?;
    Ok(acc)
}

/// Highest-scoring enumerated structure; the lexicographically first wins
/// ties.
pub fn brute_force_best(net: &Network, potentials: &[f64]) -> Result<Decoded> {
    let mut best: Option<Decoded> = None;
    for_each_structure(net, BRUTE_FORCE_LIMIT, |st| {
        let score = st.score(net, potentials);
        if best.as_ref().is_none_or(|b| score > b.score) {
            best = Some(Decoded {
                structure: st.clone(),
                score,
            });
        }
    })?;
    Ok(best.expect("every network has at least one structure"))
}
