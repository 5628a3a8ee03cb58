use std::collections::HashMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Name of the reserved index 0 feature.
pub const PENALTY_FEATURE: &str = "<PENALTY>";

/// Feature string to dense index. Index 0 is always the mention penalty.
/// Once frozen, unseen strings are reported absent instead of indexed.
#[derive(Debug, Clone)]
pub struct FeatureDictionary {
    names: Vec<String>,
    index: HashMap<String, u32>,
    frozen: bool,
}

impl Default for FeatureDictionary {
    fn default() -> Self {
        Self::new()
    }
}

impl PartialEq for FeatureDictionary {
    fn eq(&self, other: &Self) -> bool {
        self.names == other.names && self.frozen == other.frozen
    }
}

impl FeatureDictionary {
    pub fn new() -> Self {
        Self::from_names(vec![PENALTY_FEATURE.to_string()], false)
    }

    fn from_names(names: Vec<String>, frozen: bool) -> Self {
        let index = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i as u32))
            .collect();
        Self {
            names,
            index,
            frozen,
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    pub fn get(&self, name: &str) -> Option<u32> {
        self.index.get(name).copied()
    }

    /// Looks `name` up, adding it when the dictionary is still open.
    pub fn intern(&mut self, name: &str) -> Option<u32> {
        if let Some(&i) = self.index.get(name) {
            return Some(i);
        }
        if self.frozen {
            return None;
        }
        let i = self.names.len() as u32;
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), i);
        Some(i)
    }

    pub fn name(&self, index: u32) -> &str {
        &self.names[index as usize]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

/// Serialized as the list of names in index order.
impl Serialize for FeatureDictionary {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.names.serialize(s)
    }
}

impl<'de> Deserialize<'de> for FeatureDictionary {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let names = Vec::<String>::deserialize(d)?;
        if names.first().map(String::as_str) != Some(PENALTY_FEATURE) {
            return Err(serde::de::Error::custom("index 0 must be the penalty feature"));
        }
        let dict = Self::from_names(names, true);
        if dict.index.len() != dict.names.len() {
            return Err(serde::de::Error::custom("duplicate feature names"));
        }
        Ok(dict)
    }
}
