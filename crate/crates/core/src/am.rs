//! Associative memory: class storage, ideal inference and blocked inference.
//!
//! Blocked inference is the software view of a TCAM array. A hypervector of
//! dimension `D` is cut into contiguous blocks of `N` bits (the last block
//! may be shorter). Each block reports its partial Hamming distance clamped
//! to the precision `P`, optionally passed through a hardware read-out
//! model, and the per-block reports are summed per class.

use alloc::string::String;
use alloc::vec::Vec;
use core::ops::Range;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{invalid_arg, Error, Result};
use crate::hwmodel::{BlockReader, Reading};
use crate::hypervector::{bundle, Hypervector};

/// Partition of a hypervector into TCAM blocks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BlockConfig {
    dimension: usize,
    block_size: usize,
    precision: usize,
}

impl BlockConfig {
    pub fn new(dimension: usize, block_size: usize, precision: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(invalid_arg!("dimension must be at least 1"));
        }
        if block_size < 2 {
            return Err(invalid_arg!("block size must be at least 2, got {block_size}"));
        }
        if precision == 0 || precision > block_size {
            return Err(invalid_arg!(
                "precision must lie in 1..={block_size}, got {precision}"
            ));
        }
        Ok(Self { dimension, block_size, precision })
    }

    /// One block spanning the whole vector at full precision.
    pub fn full(dimension: usize) -> Result<Self> {
        Self::new(dimension, dimension.max(2), dimension.max(2))
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn precision(&self) -> usize {
        self.precision
    }

    pub fn num_blocks(&self) -> usize {
        self.dimension.div_ceil(self.block_size)
    }

    pub fn block_range(&self, b: usize) -> Range<usize> {
        let start = b * self.block_size;
        start..(start + self.block_size).min(self.dimension)
    }

    /// `min(P, size of block b)`.
    pub fn effective_precision(&self, b: usize) -> usize {
        self.precision.min(self.block_range(b).len())
    }

    /// `(range, effective precision)` for every block in order.
    pub fn blocks(&self) -> impl Iterator<Item = (Range<usize>, usize)> + '_ {
        (0..self.num_blocks()).map(move |b| {
            let r = self.block_range(b);
            let p = self.precision.min(r.len());
            (r, p)
        })
    }
}

/// Result of one inference.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prediction {
    /// Position of the winning class in storage order.
    pub class: usize,
    /// Total (reported) distance of the winner.
    pub distance: u32,
}

/// Per-class outcome of a blocked comparison.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ClassScore {
    /// Sum of reported block distances.
    pub distance: u32,
    /// Slowest block read-out of this comparison, in nanoseconds.
    pub latency_ns: f64,
}

/// Labeled class hypervectors in insertion order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AssociativeMemory {
    dim: usize,
    classes: Vec<(String, Hypervector)>,
}

impl AssociativeMemory {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(invalid_arg!("dimension must be at least 1"));
        }
        Ok(Self { dim, classes: Vec::new() })
    }

    /// Builds a memory by bundling each class's training vectors in one pass.
    pub fn train<R: RngCore + ?Sized>(
        groups: &[(String, Vec<Hypervector>)],
        tie_rng: &mut R,
    ) -> Result<Self> {
        let dim = groups
            .first()
            .and_then(|(_, vs)| vs.first())
            .map(Hypervector::dimension)
            .ok_or_else(|| invalid_arg!("training needs at least one non-empty class"))?;
        let mut am = Self::new(dim)?;
        for (label, vectors) in groups {
            if vectors.is_empty() {
                return Err(invalid_arg!("class {label:?} has no training vectors"));
            }
            if am.index_of(label).is_some() {
                return Err(invalid_arg!("duplicate class label {label:?}"));
            }
            am.insert(label.clone(), bundle(vectors, tie_rng)?)?;
        }
        Ok(am)
    }

    pub fn insert(&mut self, label: impl Into<String>, hv: Hypervector) -> Result<()> {
        let label = label.into();
        if label.is_empty() {
            return Err(invalid_arg!("class labels must be non-empty"));
        }
        if hv.dimension() != self.dim {
            return Err(invalid_arg!(
                "class {label:?} has dimension {}, memory has {}",
                hv.dimension(),
                self.dim
            ));
        }
        if self.index_of(&label).is_some() {
            return Err(invalid_arg!("duplicate class label {label:?}"));
        }
        self.classes.push((label, hv));
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn label(&self, class: usize) -> &str {
        &self.classes[class].0
    }

    pub fn class_vector(&self, class: usize) -> &Hypervector {
        &self.classes[class].1
    }

    pub fn classes(&self) -> &[(String, Hypervector)] {
        &self.classes
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.classes.iter().position(|(l, _)| l == label)
    }

    fn check_query(&self, query: &Hypervector) -> Result<()> {
        if self.classes.is_empty() {
            return Err(Error::InvalidState("associative memory holds no classes".into()));
        }
        if query.dimension() != self.dim {
            return Err(invalid_arg!(
                "query has dimension {}, memory has {}",
                query.dimension(),
                self.dim
            ));
        }
        Ok(())
    }

    /// Full-Hamming nearest class; ties go to the earliest stored class.
    pub fn infer_ideal(&self, query: &Hypervector) -> Result<Prediction> {
        self.check_query(query)?;
        let mut best = Prediction { class: 0, distance: u32::MAX };
        for (i, (_, hv)) in self.classes.iter().enumerate() {
            let d = query.hamming(hv)?;
            if d < best.distance {
                best = Prediction { class: i, distance: d };
            }
        }
        Ok(best)
    }

    /// Scores every class through blocked comparison and writes the results
    /// into `out` (resized to the class count).
    ///
    /// Without a hardware model each block reports its true clamped distance
    /// with zero latency. The random stream is consumed class by class and
    /// block by block in order.
    pub fn score_blocked<M, R>(
        &self,
        query: &Hypervector,
        cfg: &BlockConfig,
        hw: Option<&M>,
        rng: &mut R,
        out: &mut Vec<ClassScore>,
    ) -> Result<()>
    where
        M: BlockReader + ?Sized,
        R: RngCore + ?Sized,
    {
        self.check_query(query)?;
        if cfg.dimension() != self.dim {
            return Err(invalid_arg!(
                "block configuration covers {} bits, memory has {}",
                cfg.dimension(),
                self.dim
            ));
        }
        out.clear();
        for (_, class) in &self.classes {
            let mut score = ClassScore::default();
            for (range, p) in cfg.blocks() {
                let h = query.hamming_range(class, range.start, range.end).min(p as u32);
                let Reading { distance, latency_ns } = match hw {
                    Some(m) => m.read(h, p as u32, rng),
                    None => Reading { distance: h, latency_ns: 0.0 },
                };
                score.distance += distance;
                if latency_ns > score.latency_ns {
                    score.latency_ns = latency_ns;
                }
            }
            out.push(score);
        }
        Ok(())
    }

    /// Blocked nearest class; ties go to the earliest stored class.
    pub fn infer_blocked<M, R>(
        &self,
        query: &Hypervector,
        cfg: &BlockConfig,
        hw: Option<&M>,
        rng: &mut R,
    ) -> Result<Prediction>
    where
        M: BlockReader + ?Sized,
        R: RngCore + ?Sized,
    {
        let mut scores = Vec::with_capacity(self.classes.len());
        self.score_blocked(query, cfg, hw, rng, &mut scores)?;
        Ok(argmin(&scores))
    }
}

/// Lowest total distance, earliest class on ties. `scores` must be non-empty.
pub fn argmin(scores: &[ClassScore]) -> Prediction {
    let mut best = Prediction { class: 0, distance: scores[0].distance };
    for (i, s) in scores.iter().enumerate().skip(1) {
        if s.distance < best.distance {
            best = Prediction { class: i, distance: s.distance };
        }
    }
    best
}

/// True per-block distances, each clamped to the block's effective precision.
pub fn blocked_distances_true(
    query: &Hypervector,
    class: &Hypervector,
    cfg: &BlockConfig,
) -> Result<Vec<u32>> {
    if query.dimension() != class.dimension() || query.dimension() != cfg.dimension() {
        return Err(invalid_arg!(
            "dimension mismatch: query {}, class {}, blocks {}",
            query.dimension(),
            class.dimension(),
            cfg.dimension()
        ));
    }
    Ok(cfg
        .blocks()
        .map(|(r, p)| query.hamming_range(class, r.start, r.end).min(p as u32))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hwmodel::RramShift;
    use crate::seed;
    use alloc::vec;
    use proptest::prelude::*;

    type NoHw = RramShift;

    fn hv(s: &str) -> Hypervector {
        Hypervector::from_bit_str(s).unwrap()
    }

    #[test]
    fn block_config_validation_and_partition() {
        assert!(BlockConfig::new(0, 2, 1).is_err());
        assert!(BlockConfig::new(10, 1, 1).is_err());
        assert!(BlockConfig::new(10, 4, 0).is_err());
        assert!(BlockConfig::new(10, 4, 5).is_err());
        let cfg = BlockConfig::new(10, 4, 3).unwrap();
        assert_eq!(cfg.num_blocks(), 3);
        let blocks: Vec<_> = cfg.blocks().collect();
        assert_eq!(blocks, vec![(0..4, 3), (4..8, 3), (8..10, 2)]);
    }

    #[test]
    fn clamp_at_precision() {
        let q = Hypervector::zeros(15).unwrap();
        let mut c = Hypervector::zeros(15).unwrap();
        for i in 0..12 {
            c.set(i, true);
        }
        let cfg = BlockConfig::new(15, 15, 7).unwrap();
        assert_eq!(blocked_distances_true(&q, &c, &cfg).unwrap(), vec![7]);
    }

    #[test]
    fn per_block_values_match_naive_popcount() {
        let mut rng = seed::stream(8);
        let cfg = BlockConfig::new(100, 7, 7).unwrap();
        for _ in 0..200 {
            let a = Hypervector::random(100, &mut rng).unwrap();
            let b = Hypervector::random(100, &mut rng).unwrap();
            let got = blocked_distances_true(&a, &b, &cfg).unwrap();
            let naive: Vec<u32> = (0..100)
                .collect::<Vec<_>>()
                .chunks(7)
                .map(|idx| idx.iter().filter(|&&i| a.get(i) != b.get(i)).count() as u32)
                .collect();
            assert_eq!(got, naive);
        }
    }

    #[test]
    fn training_rules() {
        let a = hv("1100");
        let b = hv("0011");
        let mut rng = seed::stream(0);
        let am = AssociativeMemory::train(
            &[("x".into(), vec![a.clone()]), ("y".into(), vec![b.clone()])],
            &mut rng,
        )
        .unwrap();
        assert_eq!(am.class_vector(0), &a);
        assert_eq!(am.class_vector(1), &b);
        assert!(AssociativeMemory::train(
            &[("x".into(), vec![a.clone()]), ("x".into(), vec![b.clone()])],
            &mut rng
        )
        .is_err());
        assert!(AssociativeMemory::train(
            &[("x".into(), vec![a.clone()]), ("y".into(), vec![])],
            &mut rng
        )
        .is_err());
    }

    #[test]
    fn class_vector_is_the_bundle_of_members() {
        let mut rng = seed::stream(3);
        let members: Vec<_> = (0..6).map(|_| Hypervector::random(300, &mut rng).unwrap()).collect();
        let am = AssociativeMemory::train(&[("c".into(), members.clone())], &mut seed::stream(1))
            .unwrap();
        assert_eq!(am.class_vector(0), &bundle(&members, &mut seed::stream(1)).unwrap());
    }

    #[test]
    fn ideal_inference_rules() {
        let mut am = AssociativeMemory::new(4).unwrap();
        assert!(matches!(am.infer_ideal(&hv("0000")), Err(Error::InvalidState(_))));
        am.insert("a", hv("1100")).unwrap();
        am.insert("b", hv("0011")).unwrap();
        let p = am.infer_ideal(&hv("0011")).unwrap();
        assert_eq!((am.label(p.class), p.distance), ("b", 0));
        // equidistant from both classes: first stored wins
        let p = am.infer_ideal(&hv("1010")).unwrap();
        assert_eq!((p.class, p.distance), (0, 2));
        assert!(am.infer_ideal(&hv("101")).is_err());
    }

    #[test]
    fn full_precision_blocked_equals_ideal() {
        let mut rng = seed::stream(21);
        let mut am = AssociativeMemory::new(333).unwrap();
        for i in 0..6 {
            am.insert(alloc::format!("c{i}"), Hypervector::random(333, &mut rng).unwrap()).unwrap();
        }
        for n in [2usize, 5, 7, 16, 333] {
            let cfg = BlockConfig::new(333, n, n).unwrap();
            for _ in 0..50 {
                let q = Hypervector::random(333, &mut rng).unwrap();
                let ideal = am.infer_ideal(&q).unwrap();
                let blocked = am.infer_blocked::<NoHw, _>(&q, &cfg, None, &mut rng).unwrap();
                assert_eq!(ideal, blocked);
            }
        }
    }

    #[test]
    fn blocked_rejects_mismatched_config() {
        let mut am = AssociativeMemory::new(8).unwrap();
        am.insert("a", Hypervector::zeros(8).unwrap()).unwrap();
        let cfg = BlockConfig::new(16, 4, 4).unwrap();
        let q = Hypervector::zeros(8).unwrap();
        assert!(am.infer_blocked::<NoHw, _>(&q, &cfg, None, &mut seed::stream(0)).is_err());
    }

    proptest! {
        #[test]
        fn partition_identity_and_monotone_precision(
            dim in 1usize..400, n in 2usize..30, s in any::<u64>()
        ) {
            let mut rng = seed::stream(s);
            let a = Hypervector::random(dim, &mut rng).unwrap();
            let b = Hypervector::random(dim, &mut rng).unwrap();
            let full = BlockConfig::new(dim, n, n).unwrap();
            let sum: u32 = blocked_distances_true(&a, &b, &full).unwrap().iter().sum();
            prop_assert_eq!(sum, a.hamming(&b).unwrap());
            let mut prev: Option<Vec<u32>> = None;
            for p in (1..=n).rev() {
                let cfg = BlockConfig::new(dim, n, p).unwrap();
                let d = blocked_distances_true(&a, &b, &cfg).unwrap();
                for (b_idx, &v) in d.iter().enumerate() {
                    prop_assert!(v as usize <= cfg.effective_precision(b_idx));
                }
                if let Some(prev) = &prev {
                    for (x, y) in d.iter().zip(prev) {
                        prop_assert!(x <= y);
                    }
                }
                prev = Some(d);
            }
        }
    }
}
