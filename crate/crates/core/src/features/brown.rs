use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::utf8;
use crate::error::{Error, Result};

/// Cluster id returned for words absent from the map.
pub const UNK_CLUSTER: &str = "<UNK>";

/// Word to bit-string cluster map, as produced by Brown clustering tools.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BrownClusters {
    map: BTreeMap<String, String>,
}

impl BrownClusters {
    pub fn cluster(&self, word: &str) -> &str {
        self.map.get(word).map_or(UNK_CLUSTER, String::as_str)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn num_clusters(&self) -> usize {
        let mut ids: Vec<&String> = self.map.values().collect();
        ids.sort();
        ids.dedup();
        ids.len()
    }
}

/// Parses `bitstring<TAB>word<TAB>freq` lines.
pub fn parse_brown_clusters(text: &[u8]) -> Result<BrownClusters> {
    let text = utf8(text)?;
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let [bits, word, freq] = cols[..] else {
            return Err(Error::parse(i + 1, "expected bitstring, word and frequency"));
        };
        if bits.is_empty() || !bits.chars().all(|c| c == '0' || c == '1') {
            return Err(Error::parse(i + 1, format!("bad cluster bit string {bits:?}")));
        }
        if word.is_empty() {
            return Err(Error::parse(i + 1, "empty word"));
        }
        freq.parse::<u64>()
            .map_err(|_| Error::parse(i + 1, format!("bad frequency {freq:?}")))?;
        map.insert(word.to_string(), bits.to_string());
    }
    Ok(BrownClusters { map })
}

pub fn load_brown_clusters(path: &Path) -> Result<BrownClusters> {
    parse_brown_clusters(&std::fs::read(path)?)
}
