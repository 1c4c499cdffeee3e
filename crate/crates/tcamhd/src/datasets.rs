//! Loading raw datasets and encoding them into trained memories and query
//! sets.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use tcamhd_core::encoding::{encode_image, ItemMemory, TextEncoder};
use tcamhd_core::seed::{derive, substream};
use tcamhd_core::{AssociativeMemory, BundleAccumulator, Hypervector, LabeledSet};

use crate::error::{Error, Result};
use crate::io::idx::{self, LabeledImages};

// Seed path tags; each consumer of randomness gets its own branch.
const ITEM_MEMORY: u64 = 1;
const CLASS_TIES: u64 = 2;
const QUERY_TIES: u64 = 3;
const SAMPLE_TIES: u64 = 4;

/// Seed of the item memory for a master seed.
pub fn item_memory_seed(master: u64) -> u64 {
    derive(master, &[ITEM_MEMORY])
}

/// Encoded queries with their class indices in the memory.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TestSet {
    pub queries: Vec<Hypervector>,
    pub labels: Vec<usize>,
}

impl TestSet {
    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    /// Maps a labeled set onto the class order of `am`.
    pub fn from_labeled(am: &AssociativeMemory, set: &LabeledSet) -> Result<Self> {
        let mut t = TestSet { queries: Vec::with_capacity(set.len()), labels: Vec::with_capacity(set.len()) };
        for (hv, label) in set.items() {
            let c = am
                .index_of(label)
                .ok_or_else(|| Error::Config(format!("test label {label:?} is not a trained class")))?;
            t.queries.push(hv.clone());
            t.labels.push(c);
        }
        Ok(t)
    }

    pub fn to_labeled(&self, am: &AssociativeMemory) -> Result<LabeledSet> {
        let dim = self.queries.first().map_or(am.dimension(), Hypervector::dimension);
        let mut set = LabeledSet::new(dim)?;
        for (q, &c) in self.queries.iter().zip(&self.labels) {
            set.push(q.clone(), am.label(c))?;
        }
        Ok(set)
    }
}

/// A trained memory together with its encoded queries.
#[derive(Clone, Debug)]
pub struct Encoded {
    pub am: AssociativeMemory,
    pub test: TestSet,
}

/// One training text per language and one query sentence per line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LanguageCorpus {
    pub train: Vec<(String, String)>,
    pub test: Vec<(String, String)>,
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn txt_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let rd = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    for entry in rd {
        let p = entry.map_err(|e| Error::io(dir, e))?.path();
        if p.extension().is_some_and(|x| x == "txt") {
            files.push(p);
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(Error::Config(format!("{}: no .txt corpus files", dir.display())));
    }
    Ok(files)
}

fn stem(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

impl LanguageCorpus {
    /// Reads `<train_dir>/<label>.txt` and `<test_dir>/<label>.txt`. Classes
    /// are ordered by file name.
    pub fn load(train_dir: impl AsRef<Path>, test_dir: impl AsRef<Path>) -> Result<Self> {
        let train = txt_files(train_dir.as_ref())?
            .iter()
            .map(|p| Ok((stem(p), read_text(p)?)))
            .collect::<Result<Vec<_>>>()?;
        let mut test = Vec::new();
        for p in txt_files(test_dir.as_ref())? {
            let label = stem(&p);
            for line in read_text(&p)?.lines() {
                if !line.trim().is_empty() {
                    test.push((label.clone(), line.to_string()));
                }
            }
        }
        Ok(Self { train, test })
    }

    /// Keeps at most `per_class` queries of each label.
    pub fn limit_queries(&mut self, per_class: usize) {
        let mut seen = std::collections::HashMap::<String, usize>::new();
        self.test.retain(|(l, _)| {
            let n = seen.entry(l.clone()).or_default();
            *n += 1;
            *n <= per_class
        });
    }

    pub fn encode(&self, dim: usize, n: usize, master: u64) -> Result<Encoded> {
        let enc = TextEncoder::new(n, ItemMemory::alphabet(dim, item_memory_seed(master))?)?;
        let classes = self
            .train
            .par_iter()
            .enumerate()
            .map(|(c, (label, text))| {
                let mut acc = BundleAccumulator::new(dim)?;
                enc.accumulate(text, &mut acc)
                    .map_err(|e| Error::Config(format!("training text for {label:?}: {e}")))?;
                Ok((label.clone(), acc.finalize(&mut substream(master, &[CLASS_TIES, c as u64]))?))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut am = AssociativeMemory::new(dim)?;
        for (label, hv) in classes {
            am.insert(label, hv)?;
        }
        let queries = self
            .test
            .par_iter()
            .enumerate()
            .map(|(i, (label, s))| {
                enc.encode(s, &mut substream(master, &[QUERY_TIES, i as u64]))
                    .map_err(|e| Error::Config(format!("query {i} ({label}): {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let labels = self
            .test
            .iter()
            .map(|(l, _)| am.index_of(l).ok_or_else(|| Error::Config(format!("query label {l:?} has no training corpus"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(Encoded { am, test: TestSet { queries, labels } })
    }
}

/// Training and test images.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MnistData {
    pub train: LabeledImages,
    pub test: LabeledImages,
}

impl MnistData {
    pub fn load(
        train_images: impl AsRef<Path>,
        train_labels: impl AsRef<Path>,
        test_images: impl AsRef<Path>,
        test_labels: impl AsRef<Path>,
    ) -> Result<Self> {
        let train = idx::load_mnist(train_images, train_labels)?;
        let test = idx::load_mnist(test_images, test_labels)?;
        if (train.images.rows, train.images.cols) != (test.images.rows, test.images.cols) {
            return Err(Error::Config("training and test images differ in size".into()));
        }
        Ok(Self { train, test })
    }

    /// Loads the four conventional file names from one directory.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let d = dir.as_ref();
        Self::load(
            d.join("train-images.idx3-ubyte"),
            d.join("train-labels.idx1-ubyte"),
            d.join("test-images.idx3-ubyte"),
            d.join("test-labels.idx1-ubyte"),
        )
    }

    pub fn encode(&self, dim: usize, threshold: u8, master: u64) -> Result<Encoded> {
        let (w, h) = (self.train.images.cols, self.train.images.rows);
        let positions = ItemMemory::positions(dim, (w * h) as u32, item_memory_seed(master))?;
        let encode_set = |set: &LabeledImages, tag: u64| -> Result<Vec<Hypervector>> {
            (0..set.labels.len())
                .into_par_iter()
                .map(|i| {
                    let mut rng = substream(master, &[tag, i as u64]);
                    Ok(encode_image(set.images.image(i), w, h, threshold, &positions, &mut rng)?)
                })
                .collect()
        };
        let train = encode_set(&self.train, SAMPLE_TIES)?;
        let mut digits: Vec<u8> = self.train.labels.clone();
        digits.sort_unstable();
        digits.dedup();
        let classes = digits
            .par_iter()
            .map(|&d| {
                let mut acc = BundleAccumulator::new(dim)?;
                for (hv, _) in train.iter().zip(&self.train.labels).filter(|(_, &l)| l == d) {
                    acc.add(hv)?;
                }
                Ok((d.to_string(), acc.finalize(&mut substream(master, &[CLASS_TIES, d as u64]))?))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut am = AssociativeMemory::new(dim)?;
        for (label, hv) in classes {
            am.insert(label, hv)?;
        }
        let queries = encode_set(&self.test, QUERY_TIES)?;
        let labels = self
            .test
            .labels
            .iter()
            .map(|l| am.index_of(&l.to_string()).ok_or_else(|| Error::Config(format!("test digit {l} never trained"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(Encoded { am, test: TestSet { queries, labels } })
    }
}

/// Pre-encoded vectors: class vectors are the majority of each label's
/// training vectors.
pub fn encode_csv(train: &LabeledSet, test: &LabeledSet, master: u64) -> Result<Encoded> {
    if train.dimension() != test.dimension() {
        return Err(Error::Config(format!(
            "training vectors have dimension {}, test vectors {}",
            train.dimension(),
            test.dimension()
        )));
    }
    let am = AssociativeMemory::train(&train.grouped(), &mut substream(master, &[CLASS_TIES]))?;
    let test = TestSet::from_labeled(&am, test)?;
    Ok(Encoded { am, test })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> LanguageCorpus {
        LanguageCorpus {
            train: vec![
                ("aa".into(), "the cat sat on the mat and the dog ran to the cat ".repeat(40)),
                ("bb".into(), "zyx wvu zyx qqq wvu zzz yyy xxx wvu zyx ".repeat(40)),
            ],
            test: vec![
                ("aa".into(), "the dog sat on the cat".into()),
                ("bb".into(), "zyx wvu qqq zzz".into()),
            ],
        }
    }

    #[test]
    fn toy_language_model_has_two_classes_and_classifies() {
        let e = toy().encode(2048, 3, 9).unwrap();
        assert_eq!(e.am.len(), 2);
        for (q, &c) in e.test.queries.iter().zip(&e.test.labels) {
            assert_eq!(e.am.infer_ideal(q).unwrap().class, c);
        }
    }

    #[test]
    fn encoding_is_deterministic() {
        let a = toy().encode(512, 3, 1).unwrap();
        let b = toy().encode(512, 3, 1).unwrap();
        assert_eq!(a.am.classes(), b.am.classes());
        assert_eq!(a.test, b.test);
        let c = toy().encode(512, 3, 2).unwrap();
        assert_ne!(a.am.classes(), c.am.classes());
    }

    #[test]
    fn same_language_is_closer_than_other_language() {
        let e = toy().encode(4096, 3, 3).unwrap();
        let d = |q: &Hypervector, c| q.normalized_hamming(e.am.class_vector(c)).unwrap();
        assert!(d(&e.test.queries[0], 0) < d(&e.test.queries[0], 1));
        assert!(d(&e.test.queries[1], 1) < d(&e.test.queries[1], 0));
    }

    #[test]
    fn csv_task_trains_by_majority() {
        let mut rng = tcamhd_core::seed::stream(0);
        let protos: Vec<Hypervector> = (0..3).map(|_| Hypervector::random(256, &mut rng).unwrap()).collect();
        let mut train = LabeledSet::new(256).unwrap();
        for (i, p) in protos.iter().enumerate() {
            train.push(p.clone(), format!("c{i}")).unwrap();
        }
        let e = encode_csv(&train, &train, 0).unwrap();
        assert_eq!(e.am.class_vector(1), &protos[1]);
        assert_eq!(e.test.labels, vec![0, 1, 2]);
    }
}
