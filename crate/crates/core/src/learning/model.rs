use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Mention, Sentence};
use crate::error::{Error, Result};
use crate::features::{BrownClusters, EdgeFeatureTable, FeatureConfig, FeatureDictionary, SentenceInputs};
use crate::inference;
use crate::network::{self, Network, Scheme};

pub const FORMAT_VERSION: u32 = 1;

/// A trained scorer: everything needed to decode new sentences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub format_version: u32,
    pub scheme: Scheme,
    pub labels: Vec<String>,
    pub features: FeatureConfig,
    pub brown: Option<BrownClusters>,
    pub dictionary: FeatureDictionary,
    pub weights: Vec<f64>,
    /// Added to the penalty weight at decode time.
    pub penalty_offset: f64,
}

/// A sentence's network and feature table, ready for repeated decoding.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub network: Option<Network>,
    pub table: EdgeFeatureTable,
}

impl Model {
    pub fn to_json(&self) -> Result<Vec<u8>> {
        if let Some(i) = self.weights.iter().position(|w| !w.is_finite()) {
            return Err(Error::Model(format!("weight {i} is not finite")));
        }
        let mut out = serde_json::to_vec(self)?;
        out.push(b'\n');
        Ok(out)
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let m: Model = serde_json::from_slice(bytes)?;
        if m.format_version != FORMAT_VERSION {
            return Err(Error::Model(format!(
                "unsupported format version {} (expected {FORMAT_VERSION})",
                m.format_version
            )));
        }
        if m.weights.len() != m.dictionary.len() {
            return Err(Error::Model(format!(
                "{} weights for {} features",
                m.weights.len(),
                m.dictionary.len()
            )));
        }
        if m.labels.is_empty() {
            return Err(Error::Model("empty label set".into()));
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read(path)?)
    }

    pub fn prepare(&self, sentence: &Sentence) -> Result<Prepared> {
        if sentence.is_empty() {
            return Ok(Prepared {
                network: None,
                table: EdgeFeatureTable::default(),
            });
        }
        let mut net = network::build(self.scheme, sentence.len(), &self.labels)?;
        network::attach_penalty(&mut net);
        let inputs = SentenceInputs::new(sentence, &self.features, self.brown.as_ref());
        let table = EdgeFeatureTable::frozen(&net, &inputs, &self.dictionary);
        Ok(Prepared {
            network: Some(net),
            table,
        })
    }

    /// Decodes a prepared sentence with `extra_offset` added on top of the
    /// model's own penalty offset.
    pub fn decode_prepared(&self, p: &Prepared, extra_offset: f64) -> Result<Vec<Mention>> {
        let Some(net) = &p.network else {
            return Ok(Vec::new());
        };
        let pot = p.table.potentials(&self.weights, self.penalty_offset + extra_offset);
        let best = inference::decode(net, &pot);
        network::read_structure(net, &best.structure)
    }

    pub fn predict(&self, sentence: &Sentence) -> Result<Vec<Mention>> {
        self.decode_prepared(&self.prepare(sentence)?, 0.0)
    }

    /// Predictions for every sentence, in order.
    pub fn predict_all(&self, sentences: &[Sentence]) -> Result<Vec<Vec<Mention>>> {
        sentences.par_iter().map(|s| self.predict(s)).collect()
    }
}
