//! Versioned JSON container for trained associative memories.

use std::path::Path;

use serde::{Deserialize, Serialize};
use tcamhd_core::{AssociativeMemory, Hypervector};

use crate::error::{Error, Result};

pub const MODEL_VERSION: u32 = 1;

/// How the model's item memory and tie streams were seeded.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedInfo {
    pub master: u64,
    pub item_memory: u64,
    pub tie_break: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassEntry {
    pub label: String,
    /// Bits little-index-first, two hex digits per byte.
    pub hex: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub version: u32,
    pub tool_version: String,
    pub task: String,
    pub dimension: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ngram: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<u8>,
    pub seed: SeedInfo,
    pub config_hash: String,
    pub classes: Vec<ClassEntry>,
}

impl ModelFile {
    pub fn from_memory(am: &AssociativeMemory, task: &str, seed: SeedInfo, config_hash: String) -> Self {
        ModelFile {
            version: MODEL_VERSION,
            tool_version: crate::VERSION.to_string(),
            task: task.to_string(),
            dimension: am.dimension(),
            ngram: None,
            threshold: None,
            seed,
            config_hash,
            classes: am
                .classes()
                .iter()
                .map(|(label, hv)| ClassEntry { label: label.clone(), hex: hv.to_hex() })
                .collect(),
        }
    }

    pub fn to_memory(&self) -> Result<AssociativeMemory> {
        let mut am = AssociativeMemory::new(self.dimension)?;
        for (i, c) in self.classes.iter().enumerate() {
            let hv = Hypervector::from_hex(self.dimension, &c.hex)
                .map_err(|e| Error::Config(format!("classes[{i}].hex: {e}")))?;
            am.insert(c.label.clone(), hv).map_err(|e| Error::Config(format!("classes[{i}]: {e}")))?;
        }
        Ok(am)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn from_json(path: &Path, text: &str) -> Result<Self> {
        let m: ModelFile = crate::io::from_json(path, text)?;
        if m.version != MODEL_VERSION {
            return Err(Error::Config(format!(
                "{}: model version {} is not supported (expected {MODEL_VERSION})",
                path.display(),
                m.version
            )));
        }
        Ok(m)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(path, &text)
    }
}
