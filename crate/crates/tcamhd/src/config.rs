//! Experiment configuration files.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tcamhd_core::encoding::{DEFAULT_NGRAM, DEFAULT_THRESHOLD};
use tcamhd_core::hwmodel::{default_catalog, Catalog};

use crate::datasets::{encode_csv, Encoded, LanguageCorpus, MnistData};
use crate::error::{Error, Result};
use crate::explorer::SweepSpace;
use crate::io::hvcsv;
use tcamhd_core::LabeledSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Language,
    Mnist,
    Csv,
}

/// Dataset locations. Language: `train`/`test` are directories of
/// `<label>.txt`. MNIST: IDX image files plus the `*_labels` files. CSV:
/// hypervector CSV files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataPaths {
    pub train: PathBuf,
    pub test: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_labels: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_labels: Option<PathBuf>,
}

fn default_dimension() -> usize {
    10_000
}

fn default_ngram() -> usize {
    DEFAULT_NGRAM
}

fn default_threshold() -> u8 {
    DEFAULT_THRESHOLD
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: TaskKind,
    pub data: DataPaths,
    #[serde(default = "default_dimension")]
    pub dimension: usize,
    #[serde(default = "default_ngram")]
    pub ngram: usize,
    #[serde(default = "default_threshold")]
    pub threshold: u8,
    /// Caps the language queries per class.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub queries_per_class: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpace>,
    /// Hardware tables; the built-in defaults when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hw_catalog: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
}

impl ExperimentConfig {
    /// Parses a config; relative paths are taken from the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: ExperimentConfig = crate::io::from_json(path, &text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.data.train);
        fix(&mut self.data.test);
        self.data.train_labels.as_mut().map(fix);
        self.data.test_labels.as_mut().map(fix);
        self.hw_catalog.as_mut().map(fix);
        self.output.as_mut().map(fix);
    }

    /// Checks sizes and that every referenced input exists.
    pub fn validate(&self) -> Result<()> {
        if self.dimension == 0 {
            return Err(Error::Config("dimension must be at least 1".into()));
        }
        if self.ngram == 0 {
            return Err(Error::Config("ngram must be at least 1".into()));
        }
        let mut inputs = vec![("data.train", &self.data.train), ("data.test", &self.data.test)];
        if self.task == TaskKind::Mnist {
            for (name, p) in [("data.train_labels", &self.data.train_labels), ("data.test_labels", &self.data.test_labels)] {
                match p {
                    Some(p) => inputs.push((name, p)),
                    None => return Err(Error::Config(format!("{name} is required for the mnist task"))),
                }
            }
        }
        if let Some(c) = &self.hw_catalog {
            inputs.push(("hw_catalog", c));
        }
        for (name, p) in inputs {
            if !p.exists() {
                return Err(Error::Config(format!("{name}: {} does not exist", p.display())));
            }
        }
        if let Some(s) = &self.sweep {
            s.validate()?;
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form. Where the results go is not part
    /// of the experiment, so `output` is left out.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output = None;
        crate::report::hash_hex(serde_json::to_string(&c).expect("config serializes").as_bytes())
    }

    pub fn catalog(&self) -> Result<Catalog> {
        match &self.hw_catalog {
            Some(p) => crate::io::catalog::load(p),
            None => Ok(default_catalog()),
        }
    }

    /// Reads the raw dataset once; encode it per dimension afterwards.
    pub fn load_task(&self) -> Result<Task> {
        Ok(match self.task {
            TaskKind::Language => {
                let mut c = LanguageCorpus::load(&self.data.train, &self.data.test)?;
                if let Some(n) = self.queries_per_class {
                    c.limit_queries(n);
                }
                Task::Language(c)
            }
            TaskKind::Mnist => Task::Mnist(MnistData::load(
                &self.data.train,
                self.data.train_labels.as_ref().expect("validated"),
                &self.data.test,
                self.data.test_labels.as_ref().expect("validated"),
            )?),
            TaskKind::Csv => Task::Csv(hvcsv::load(&self.data.train)?, hvcsv::load(&self.data.test)?),
        })
    }
}

/// Raw data of a task.
#[derive(Clone, Debug)]
pub enum Task {
    Language(LanguageCorpus),
    Mnist(MnistData),
    Csv(LabeledSet, LabeledSet),
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Language(_) => "language",
            Task::Mnist(_) => "mnist",
            Task::Csv(..) => "csv",
        }
    }

    pub fn encode(&self, cfg: &ExperimentConfig, dim: usize) -> Result<Encoded> {
        match self {
            Task::Language(c) => c.encode(dim, cfg.ngram, cfg.seed),
            Task::Mnist(m) => m.encode(dim, cfg.threshold, cfg.seed),
            Task::Csv(train, test) => {
                if train.dimension() != dim {
                    return Err(Error::Config(format!(
                        "pre-encoded vectors have dimension {}, {dim} requested",
                        train.dimension()
                    )));
                }
                encode_csv(train, test, cfg.seed)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_relative_paths() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::create_dir_all(dir.path().join("tr")).unwrap();
        std::fs::create_dir_all(dir.path().join("te")).unwrap();
        let p = dir.path().join("cfg.json");
        std::fs::write(&p, r#"{"task":"language","data":{"train":"tr","test":"te"},"seed":5}"#).unwrap();
        let c = ExperimentConfig::load(&p).unwrap();
        assert_eq!((c.dimension, c.ngram, c.threshold, c.seed), (10_000, 4, 128, 5));
        assert_eq!(c.data.train, dir.path().join("tr"));
        c.validate().unwrap();
        let mut moved = c.clone();
        moved.output = Some("elsewhere.csv".into());
        assert_eq!(c.hash(), moved.hash());
        moved.seed += 1;
        assert_ne!(c.hash(), moved.hash());
    }

    #[test]
    fn missing_inputs_and_unknown_keys_fail() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("cfg.json");
        std::fs::write(&p, r#"{"task":"language","data":{"train":"nope","test":"nope"}}"#).unwrap();
        let err = ExperimentConfig::load(&p).unwrap().validate().unwrap_err().to_string();
        assert!(err.contains("data.train") && err.contains("nope"), "{err}");

        std::fs::write(&p, r#"{"task":"language","data":{"train":"a","test":"b"},"dimesion":3}"#).unwrap();
        assert!(ExperimentConfig::load(&p).is_err());

        std::fs::write(&p, r#"{"task":"mnist","data":{"train":"cfg.json","test":"cfg.json"}}"#).unwrap();
        let err = ExperimentConfig::load(&p).unwrap().validate().unwrap_err().to_string();
        assert!(err.contains("train_labels"), "{err}");
    }
}
