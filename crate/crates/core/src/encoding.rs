//! Item memories and encoders mapping text and images into hypervectors.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use rand::RngCore;

use crate::error::{invalid_arg, Error, Result};
use crate::hypervector::{bundle, BundleAccumulator, Hypervector};
use crate::seed;

/// Default n-gram size for language recognition.
pub const DEFAULT_NGRAM: usize = 4;

/// Default binarization threshold for 8-bit grayscale images.
pub const DEFAULT_THRESHOLD: u8 = 128;

/// An atomic symbol stored in an item memory.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Symbol {
    Char(char),
    /// Pixel position, row-major from the top-left corner.
    Position(u32),
}

impl Symbol {
    fn key(self) -> u64 {
        match self {
            Symbol::Char(c) => u64::from(c as u32),
            Symbol::Position(p) => (1 << 40) | u64::from(p),
        }
    }
}

/// Fixed random hypervectors for atomic symbols.
///
/// The vector of a symbol depends only on the memory seed and the symbol, so
/// regenerating a memory reproduces every entry regardless of symbol order.
#[derive(Clone, Debug)]
pub struct ItemMemory {
    dim: usize,
    seed: u64,
    symbols: Vec<Symbol>,
    entries: Vec<Hypervector>,
    index: BTreeMap<Symbol, usize>,
}

impl ItemMemory {
    pub fn new<I: IntoIterator<Item = Symbol>>(dim: usize, seed: u64, symbols: I) -> Result<Self> {
        let mut im = Self {
            dim,
            seed,
            symbols: Vec::new(),
            entries: Vec::new(),
            index: BTreeMap::new(),
        };
        for s in symbols {
            if im.index.contains_key(&s) {
                return Err(invalid_arg!("symbol {s:?} listed twice"));
            }
            let hv = Hypervector::random(dim, &mut seed::substream(seed, &[s.key()]))?;
            im.index.insert(s, im.entries.len());
            im.symbols.push(s);
            im.entries.push(hv);
        }
        if im.entries.is_empty() {
            // still validate the dimension
            Hypervector::zeros(dim)?;
        }
        Ok(im)
    }

    /// The 27-symbol text alphabet: `a`..`z` and space.
    pub fn alphabet(dim: usize, seed: u64) -> Result<Self> {
        Self::new(dim, seed, ('a'..='z').chain(core::iter::once(' ')).map(Symbol::Char))
    }

    /// One entry per pixel position `0..count`.
    pub fn positions(dim: usize, count: u32, seed: u64) -> Result<Self> {
        Self::new(dim, seed, (0..count).map(Symbol::Position))
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, symbol: Symbol) -> Option<&Hypervector> {
        self.index.get(&symbol).map(|&i| &self.entries[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (Symbol, &Hypervector)> {
        self.symbols.iter().copied().zip(&self.entries)
    }
}

/// Lowercases, maps whitespace to a single space, drops everything outside
/// `a..z` and space, collapses space runs and trims the ends.
pub fn normalize_text(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut pending_space = false;
    for c in text.chars().flat_map(char::to_lowercase) {
        if c.is_whitespace() {
            pending_space = !out.is_empty();
        } else if c.is_ascii_lowercase() {
            if pending_space {
                out.push(' ');
                pending_space = false;
            }
            out.push(c);
        }
    }
    out
}

/// n-gram text encoder: a window `L0 L1 .. Ln-1` maps to
/// `HV(L0) ^ rot1(HV(L1)) ^ .. ^ rot(n-1)(HV(Ln-1))` and the windows of a
/// text are bundled.
#[derive(Clone, Debug)]
pub struct TextEncoder {
    n: usize,
    items: ItemMemory,
    /// `rotated[j][i]` is entry `i` of the item memory permuted by `j`.
    rotated: Vec<Vec<Hypervector>>,
}

impl TextEncoder {
    pub fn new(n: usize, items: ItemMemory) -> Result<Self> {
        if n == 0 {
            return Err(invalid_arg!("n-gram size must be at least 1"));
        }
        let rotated = (0..n)
            .map(|j| items.entries.iter().map(|hv| hv.permute(j)).collect())
            .collect();
        Ok(Self { n, items, rotated })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn item_memory(&self) -> &ItemMemory {
        &self.items
    }

    pub fn dimension(&self) -> usize {
        self.items.dim
    }

    /// Adds every n-gram of `text` (after normalization) to `acc`.
    /// Returns the number of windows added.
    pub fn accumulate(&self, text: &str, acc: &mut BundleAccumulator) -> Result<usize> {
        let norm = normalize_text(text);
        let idx = norm
            .chars()
            .map(|c| {
                self.items
                    .index
                    .get(&Symbol::Char(c))
                    .copied()
                    .ok_or_else(|| invalid_arg!("symbol {c:?} missing from item memory"))
            })
            .collect::<Result<Vec<_>>>()?;
        if idx.len() < self.n {
            return Err(invalid_arg!(
                "normalized text has {} symbols, fewer than n = {}",
                idx.len(),
                self.n
            ));
        }
        let windows = idx.len() - self.n + 1;
        let mut gram = Hypervector::zeros(self.dimension())?;
        for start in 0..windows {
            gram.clone_from(&self.rotated[0][idx[start]]);
            for j in 1..self.n {
                gram.bind_assign(&self.rotated[j][idx[start + j]])?;
            }
            acc.add(&gram)?;
        }
        Ok(windows)
    }

    /// Encodes `text` into one hypervector.
    pub fn encode<R: RngCore + ?Sized>(&self, text: &str, tie_rng: &mut R) -> Result<Hypervector> {
        let mut acc = BundleAccumulator::new(self.dimension())?;
        self.accumulate(text, &mut acc)?;
        acc.finalize(tie_rng)
    }
}

/// Encodes `text` with a fresh encoder built from `items`.
pub fn encode_text_ngram<R: RngCore + ?Sized>(
    text: &str,
    n: usize,
    items: &ItemMemory,
    tie_rng: &mut R,
) -> Result<Hypervector> {
    TextEncoder::new(n, items.clone())?.encode(text, tie_rng)
}

/// Binarizes a row-major grayscale image at `pixel >= threshold` and bundles
/// the position vectors of the white pixels.
pub fn encode_image<R: RngCore + ?Sized>(
    pixels: &[u8],
    width: usize,
    height: usize,
    threshold: u8,
    positions: &ItemMemory,
    tie_rng: &mut R,
) -> Result<Hypervector> {
    let count = width * height;
    if pixels.len() != count {
        return Err(invalid_arg!(
            "image has {} pixels, expected {width}x{height} = {count}",
            pixels.len()
        ));
    }
    if positions.len() != count {
        return Err(invalid_arg!(
            "position memory holds {} entries for a {count}-pixel image",
            positions.len()
        ));
    }
    let mut acc = BundleAccumulator::new(positions.dim)?;
    for (i, &p) in pixels.iter().enumerate() {
        if p >= threshold {
            let hv = positions
                .get(Symbol::Position(i as u32))
                .ok_or_else(|| invalid_arg!("position {i} missing from item memory"))?;
            acc.add(hv)?;
        }
    }
    if acc.total() == 0 {
        return Err(Error::DegenerateInput(alloc::format!(
            "no pixel reaches threshold {threshold}"
        )));
    }
    acc.finalize(tie_rng)
}

/// Majority of binary vectors, i.e. the thresholded class average.
pub fn binarize_and_average_class<R: RngCore + ?Sized>(
    vectors: &[Hypervector],
    tie_rng: &mut R,
) -> Result<Hypervector> {
    bundle(vectors, tie_rng)
}

/// Labeled hypervectors of one dimension.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LabeledSet {
    dim: usize,
    items: Vec<(Hypervector, String)>,
}

impl LabeledSet {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(invalid_arg!("labeled set dimension must be at least 1"));
        }
        Ok(Self { dim, items: Vec::new() })
    }

    pub fn push(&mut self, hv: Hypervector, label: impl Into<String>) -> Result<()> {
        let label = label.into();
        if label.is_empty() {
            return Err(invalid_arg!("labels must be non-empty"));
        }
        if hv.dimension() != self.dim {
            return Err(invalid_arg!(
                "vector of dimension {} added to a set of dimension {}",
                hv.dimension(),
                self.dim
            ));
        }
        self.items.push((hv, label));
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[(Hypervector, String)] {
        &self.items
    }

    /// Vectors grouped by label, in order of first appearance.
    pub fn grouped(&self) -> Vec<(String, Vec<Hypervector>)> {
        let mut order: Vec<(String, Vec<Hypervector>)> = Vec::new();
        let mut slot: BTreeMap<&str, usize> = BTreeMap::new();
        for (hv, label) in &self.items {
            let i = *slot.entry(label.as_str()).or_insert_with(|| {
                order.push((label.clone(), Vec::new()));
                order.len() - 1
            });
            order[i].1.push(hv.clone());
        }
        order
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;
    use alloc::vec;

    #[test]
    fn normalization_rules() {
        assert_eq!(normalize_text("  Hello,\t World!\n\nÉté 42 "), "hello world t");
        assert_eq!(normalize_text("a - b"), "a b");
        assert_eq!(normalize_text("?!"), "");
    }

    #[test]
    fn item_memory_is_reproducible_and_order_free() {
        let a = ItemMemory::alphabet(256, 7).unwrap();
        let b = ItemMemory::new(256, 7, "zyx wvutsrqponmlkjihgfedcba".chars().map(Symbol::Char))
            .unwrap();
        assert_eq!(a.len(), 27);
        for (s, hv) in a.iter() {
            assert_eq!(b.get(s), Some(hv));
        }
        let c = ItemMemory::alphabet(256, 8).unwrap();
        assert_ne!(a.get(Symbol::Char('a')), c.get(Symbol::Char('a')));
        assert!(ItemMemory::new(16, 0, [Symbol::Char('a'), Symbol::Char('a')]).is_err());
        assert!(ItemMemory::alphabet(0, 0).is_err());
    }

    #[test]
    fn unigram_of_repeated_letter_is_the_letter() {
        let im = ItemMemory::alphabet(512, 1).unwrap();
        let out = encode_text_ngram("aaa", 1, &im, &mut seed::stream(0)).unwrap();
        assert_eq!(&out, im.get(Symbol::Char('a')).unwrap());
    }

    #[test]
    fn bigram_matches_manual_composition() {
        let im = ItemMemory::alphabet(16, 3).unwrap();
        let a = im.get(Symbol::Char('a')).unwrap();
        let b = im.get(Symbol::Char('b')).unwrap();
        // manual: rotate b by one index, then XOR bit by bit
        let mut expect = Hypervector::zeros(16).unwrap();
        for i in 0..16 {
            expect.set(i, a.get(i) ^ b.get((i + 15) % 16));
        }
        let out = encode_text_ngram("ab", 2, &im, &mut seed::stream(0)).unwrap();
        assert_eq!(out, expect);
    }

    #[test]
    fn text_errors() {
        let im = ItemMemory::alphabet(64, 1).unwrap();
        let err = encode_text_ngram("abc", 4, &im, &mut seed::stream(0)).unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
        let small = ItemMemory::new(64, 1, [Symbol::Char('a')]).unwrap();
        assert!(encode_text_ngram("ab", 1, &small, &mut seed::stream(0)).is_err());
        assert!(TextEncoder::new(0, im).is_err());
    }

    #[test]
    fn encoding_is_deterministic() {
        let enc = TextEncoder::new(DEFAULT_NGRAM, ItemMemory::alphabet(1024, 5).unwrap()).unwrap();
        let text = "the quick brown fox jumps over the lazy dog";
        let x = enc.encode(text, &mut seed::stream(2)).unwrap();
        let y = enc.encode(text, &mut seed::stream(2)).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn image_with_one_white_pixel() {
        let im = ItemMemory::positions(128, 9, 4).unwrap();
        let mut px = vec![0u8; 9];
        px[5] = 255;
        let out = encode_image(&px, 3, 3, DEFAULT_THRESHOLD, &im, &mut seed::stream(0)).unwrap();
        assert_eq!(&out, im.get(Symbol::Position(5)).unwrap());
    }

    #[test]
    fn image_equals_direct_bundle() {
        let im = ItemMemory::positions(512, 784, 4).unwrap();
        let mut px = vec![0u8; 784];
        for (i, v) in [(3, 128u8), (400, 200), (783, 255), (10, 127)] {
            px[i] = v;
        }
        let out = encode_image(&px, 28, 28, 128, &im, &mut seed::stream(6)).unwrap();
        let members = [3u32, 400, 783].map(|p| im.get(Symbol::Position(p)).unwrap().clone());
        assert_eq!(out, bundle(&members, &mut seed::stream(6)).unwrap());
    }

    #[test]
    fn image_errors() {
        let im = ItemMemory::positions(64, 4, 0).unwrap();
        let black = [0u8; 4];
        let err = encode_image(&black, 2, 2, 128, &im, &mut seed::stream(0)).unwrap_err();
        assert!(matches!(err, Error::DegenerateInput(_)));
        assert!(encode_image(&[255u8; 9], 3, 3, 128, &im, &mut seed::stream(0)).is_err());
        assert!(encode_image(&[255u8; 3], 2, 2, 128, &im, &mut seed::stream(0)).is_err());
    }

    #[test]
    fn labeled_set_groups_in_first_seen_order() {
        let mut set = LabeledSet::new(4).unwrap();
        let v = Hypervector::from_bit_str("1010").unwrap();
        set.push(v.clone(), "b").unwrap();
        set.push(v.clone(), "a").unwrap();
        set.push(v.clone(), "b").unwrap();
        assert!(set.push(v.clone(), "").is_err());
        assert!(set.push(Hypervector::zeros(3).unwrap(), "a").is_err());
        let g = set.grouped();
        assert_eq!(g.len(), 2);
        assert_eq!(g[0].0, "b");
        assert_eq!(g[0].1.len(), 2);
    }
}
