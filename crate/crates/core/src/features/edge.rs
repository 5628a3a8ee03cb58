use super::{gap_features, input_features, BrownClusters, FeatureConfig, FeatureDictionary};
use crate::corpus::{Corpus, Sentence};
use crate::error::Result;
use crate::network::{self, Anchor, EdgeLabel, Network, Scheme, Tag};

/// Sorted `(index, count)` pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SparseFeatureVector {
    pub entries: Vec<(u32, u32)>,
}

impl SparseFeatureVector {
    fn from_indices(mut idx: Vec<u32>) -> Self {
        idx.sort_unstable();
        let mut entries: Vec<(u32, u32)> = Vec::new();
        for i in idx {
            match entries.last_mut() {
                Some((j, c)) if *j == i => *c += 1,
                _ => entries.push((i, 1)),
            }
        }
        Self { entries }
    }

    pub fn dot(&self, weights: &[f64]) -> f64 {
        self.entries
            .iter()
            .map(|&(i, c)| weights[i as usize] * c as f64)
            .sum()
    }
}

/// Input feature strings of one sentence, per word and per gap.
#[derive(Debug, Clone)]
pub struct SentenceInputs {
    pub words: Vec<Vec<String>>,
    pub gaps: Vec<Vec<String>>,
}

impl SentenceInputs {
    pub fn new(sentence: &Sentence, config: &FeatureConfig, brown: Option<&BrownClusters>) -> Self {
        let words: Vec<Vec<String>> = (0..sentence.len())
            .map(|k| input_features(sentence, k, config, brown))
            .collect();
        let gaps = (0..=sentence.len()).map(|g| gap_features(&words, g)).collect();
        Self { words, gaps }
    }

    fn at(&self, anchor: Anchor) -> &[String] {
        match anchor {
            Anchor::None => &[],
            Anchor::Word(k) => &self.words[k],
            Anchor::Gap(g) => &self.gaps[g],
        }
    }
}

fn tag_name(tag: Option<Tag>, labels: &[String], edge: &str) -> String {
    match tag {
        None => edge.to_string(),
        Some(t) => match t.ty {
            Some(ty) => format!("{}-{}", t.tag.as_str(), labels[ty]),
            None => t.tag.as_str().to_string(),
        },
    }
}

/// The output half of an edge's features: a suffix joined to every input
/// string, and a stand-alone transition feature.
fn describe(net: &Network, e: usize) -> (Option<String>, Option<String>) {
    let edge = net.edge(e);
    let labels = net.labels();
    let chain = edge.chain.map(|t| labels[t].as_str()).unwrap_or("");
    match edge.label {
        EdgeLabel::Fanout => (None, None),
        EdgeLabel::Sep(s) => (Some(format!("#label={s}#chain={chain}")), None),
        EdgeLabel::StateTransition { from, to } => {
            let name = |s: Option<crate::codec::Separator>, edge: &str| {
                s.map_or(edge.to_string(), |s| s.to_string())
            };
            let suffix = to.map(|s| format!("#to={s}#chain={chain}"));
            let trans = format!("TR={}>{}#chain={chain}", name(from, "<S>"), name(to, "</S>"));
            (suffix, Some(trans))
        }
        EdgeLabel::Transition { from, to } => {
            let suffix = to.map(|_| format!("#to={}", tag_name(to, labels, "")));
            let trans = format!(
                "TR={}>{}",
                tag_name(from, labels, "<S>"),
                tag_name(to, labels, "</S>")
            );
            (suffix, Some(trans))
        }
        EdgeLabel::Hyper(kind) => match edge.chain {
            Some(_) => (Some(format!("#{}#chain={chain}", kind.as_str())), None),
            None => (None, None),
        },
    }
}

/// Calls `sink` with every feature string of edge `e`, in a fixed order.
/// The penalty feature is not included.
pub fn edge_feature_strings(
    net: &Network,
    e: usize,
    inputs: &SentenceInputs,
    mut sink: impl FnMut(&str),
) {
    let (suffix, trans) = describe(net, e);
    if let Some(suffix) = suffix {
        let mut buf = String::new();
        for f in inputs.at(net.edge(e).anchor) {
            buf.clear();
            buf.push_str(f);
            buf.push_str(&suffix);
            sink(&buf);
        }
    }
    if let Some(t) = trans {
        sink(&t);
    }
}

/// Feature vector of one edge; strings absent from a frozen dictionary are
/// skipped, and index 0 is added for penalty-marked edges.
pub fn edge_features(
    net: &Network,
    e: usize,
    inputs: &SentenceInputs,
    dict: &mut FeatureDictionary,
) -> SparseFeatureVector {
    let mut idx = Vec::new();
    if net.edge(e).penalty {
        idx.push(0);
    }
    edge_feature_strings(net, e, inputs, |s| idx.extend(dict.intern(s)));
    SparseFeatureVector::from_indices(idx)
}

/// Feature indices of every edge of one network, flattened.
#[derive(Debug, Clone, Default)]
pub struct EdgeFeatureTable {
    offsets: Vec<u32>,
    indices: Vec<u32>,
}

impl EdgeFeatureTable {
    /// Resolves through `dict`, growing it only while it is open.
    pub fn new(net: &Network, inputs: &SentenceInputs, dict: &mut FeatureDictionary) -> Self {
        let mut offsets = Vec::with_capacity(net.edges().len() + 1);
        let mut indices = Vec::new();
        offsets.push(0);
        for e in 0..net.edges().len() {
            if net.edge(e).penalty {
                indices.push(0);
            }
            edge_feature_strings(net, e, inputs, |s| indices.extend(dict.intern(s)));
            offsets.push(indices.len() as u32);
        }
        Self { offsets, indices }
    }

    /// Like [`EdgeFeatureTable::new`] for a dictionary that must not grow.
    pub fn frozen(net: &Network, inputs: &SentenceInputs, dict: &FeatureDictionary) -> Self {
        let mut offsets = Vec::with_capacity(net.edges().len() + 1);
        let mut indices = Vec::new();
        offsets.push(0);
        for e in 0..net.edges().len() {
            if net.edge(e).penalty {
                indices.push(0);
            }
            edge_feature_strings(net, e, inputs, |s| indices.extend(dict.get(s)));
            offsets.push(indices.len() as u32);
        }
        Self { offsets, indices }
    }

    pub fn edge(&self, e: usize) -> &[u32] {
        &self.indices[self.offsets[e] as usize..self.offsets[e + 1] as usize]
    }

    pub fn num_edges(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn num_entries(&self) -> usize {
        self.indices.len()
    }

    /// Per-edge scores `w . f(e)`, with `penalty_offset` added to the
    /// penalty weight.
    pub fn potentials(&self, weights: &[f64], penalty_offset: f64) -> Vec<f64> {
        (0..self.num_edges())
            .map(|e| {
                self.edge(e)
                    .iter()
                    .map(|&i| {
                        if i == 0 {
                            weights[0] + penalty_offset
                        } else {
                            weights[i as usize]
                        }
                    })
                    .sum()
            })
            .collect()
    }

    /// `out += scale * f(e)`.
    pub fn add_scaled(&self, e: usize, scale: f64, out: &mut [f64]) {
        for &i in self.edge(e) {
            out[i as usize] += scale;
        }
    }
}

/// Indexes the features of all edges of all training networks, then
/// freezes. Sentences are visited in order, so the result is deterministic.
pub fn build_dictionary(
    corpus: &Corpus,
    scheme: Scheme,
    config: &FeatureConfig,
    brown: Option<&BrownClusters>,
) -> Result<FeatureDictionary> {
    let mut dict = FeatureDictionary::new();
    for s in &corpus.sentences {
        let mut net = network::build(scheme, s.len(), corpus.labels())?;
        network::attach_penalty(&mut net);
        let inputs = SentenceInputs::new(s, config, brown);
        for e in 0..net.edges().len() {
            edge_feature_strings(&net, e, &inputs, |f| {
                dict.intern(f);
            });
        }
    }
    dict.freeze();
    Ok(dict)
}
