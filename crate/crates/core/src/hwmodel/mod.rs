//! Behavioral model of TCAM block read-out.
//!
//! A block with `h` mismatching cells discharges its match line in a latency
//! drawn from `Normal(mu(h), sigma(h))`; more misses discharge faster, so
//! `mu` decreases with `h`. The sensing logic reports the distance whose
//! decision interval contains the latency. Interval boundaries are the
//! midpoints between adjacent `mu` values. Latencies below the last boundary
//! saturate at the precision `P`. Latencies beyond the match timeout report a
//! perfect match.
//!
//! The same rule yields a closed-form [`ConfusionMatrix`] from Gaussian CDF
//! masses, which is how the sampling path is cross-checked.

mod defaults;
mod table;

pub use defaults::{default_catalog, default_table, DEFAULT_BLOCK_SIZES, DEFAULT_VOLTAGES};
pub use table::{Catalog, EnergySpec, HwTable, Violation};

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::am::BlockConfig;
use crate::error::{invalid_arg, Error, Result};

/// TCAM cell technology.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Technology {
    /// 16-transistor SRAM-based cell.
    #[serde(rename = "SRAM")]
    Sram,
    /// 2-transistor ferroelectric FinFET cell.
    #[serde(rename = "FeFinFET")]
    FeFinFet,
}

impl Technology {
    pub const ALL: [Technology; 2] = [Technology::Sram, Technology::FeFinFet];

    pub fn name(self) -> &'static str {
        match self {
            Technology::Sram => "SRAM",
            Technology::FeFinFet => "FeFinFET",
        }
    }
}

impl fmt::Display for Technology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Technology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sram" => Ok(Technology::Sram),
            "fefinfet" | "fefet" | "fe-finfet" => Ok(Technology::FeFinFet),
            _ => Err(invalid_arg!("unknown technology {s:?}")),
        }
    }
}

/// Voltage in whole millivolts, used as a lookup key.
pub fn millivolts(volts: f64) -> u32 {
    libm::round(volts * 1000.0) as u32
}

/// One block read-out.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Reading {
    pub distance: u32,
    pub latency_ns: f64,
}

/// Something that turns a block's true (clamped) distance into a reported one.
pub trait BlockReader {
    /// `true_h` is already clamped to `precision`, the block's effective
    /// precision.
    fn read<R: RngCore + ?Sized>(&self, true_h: u32, precision: u32, rng: &mut R) -> Reading;
}

impl<T: BlockReader + ?Sized> BlockReader for &T {
    fn read<R: RngCore + ?Sized>(&self, true_h: u32, precision: u32, rng: &mut R) -> Reading {
        (**self).read(true_h, precision, rng)
    }
}

fn uniform01<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / core::f64::consts::SQRT_2)
}

/// Gaussian latency distributions per Hamming distance for one
/// (technology, voltage, block size).
#[derive(Clone, Debug, PartialEq)]
pub struct LatencyModel {
    /// `mu_ns[h - 1]` for `h = 1..=P`.
    mu_ns: Vec<f64>,
    sigma_ns: Vec<f64>,
    match_timeout_ns: f64,
    zero_flip_probability: f64,
    /// `mids[h - 1]` separates distance `h` from `h + 1`.
    mids: Vec<f64>,
}

impl LatencyModel {
    /// `mu` must be strictly decreasing, `sigma` non-negative, and the
    /// timeout above `mu(1)`.
    pub fn new(mu_ns: Vec<f64>, sigma_ns: Vec<f64>, match_timeout_ns: f64) -> Result<Self> {
        if mu_ns.is_empty() || mu_ns.len() != sigma_ns.len() {
            return Err(Error::Config(alloc::format!(
                "latency model needs equally long, non-empty mu/sigma (got {} and {})",
                mu_ns.len(),
                sigma_ns.len()
            )));
        }
        if mu_ns.windows(2).any(|w| !(w[1] < w[0])) || mu_ns.iter().any(|m| !m.is_finite()) {
            return Err(Error::Config("mu must be finite and strictly decreasing in h".into()));
        }
        if sigma_ns.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(Error::Config("sigma must be finite and non-negative".into()));
        }
        if !(match_timeout_ns > mu_ns[0]) {
            return Err(Error::Config("match timeout must exceed mu(1)".into()));
        }
        let mids = mu_ns.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        Ok(Self { mu_ns, sigma_ns, match_timeout_ns, zero_flip_probability: 0.0, mids })
    }

    /// Probability that a perfectly matching block reports distance 1.
    pub fn with_zero_flip(mut self, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Config(alloc::format!("zero flip probability {p} outside [0, 1]")));
        }
        self.zero_flip_probability = p;
        Ok(self)
    }

    /// Keeps the first `precision` distances.
    pub fn truncated(&self, precision: usize) -> Result<Self> {
        if precision == 0 || precision > self.precision() {
            return Err(Error::Config(alloc::format!(
                "model covers distances 1..={}, precision {precision} requested",
                self.precision()
            )));
        }
        let mut m = Self::new(
            self.mu_ns[..precision].to_vec(),
            self.sigma_ns[..precision].to_vec(),
            self.match_timeout_ns,
        )?;
        m.zero_flip_probability = self.zero_flip_probability;
        Ok(m)
    }

    /// Largest distance the model distinguishes.
    pub fn precision(&self) -> usize {
        self.mu_ns.len()
    }

    pub fn mu(&self, h: usize) -> f64 {
        self.mu_ns[h - 1]
    }

    pub fn sigma(&self, h: usize) -> f64 {
        self.sigma_ns[h - 1]
    }

    pub fn match_timeout(&self) -> f64 {
        self.match_timeout_ns
    }

    pub fn zero_flip_probability(&self) -> f64 {
        self.zero_flip_probability
    }

    /// Maps a latency to a distance for a block of effective precision `p`.
    pub fn decide(&self, latency_ns: f64, p: usize) -> u32 {
        if latency_ns > self.match_timeout_ns {
            return 0;
        }
        let p = p.min(self.precision());
        for h in 1..p {
            if latency_ns >= self.mids[h - 1] {
                return h as u32;
            }
        }
        p as u32
    }

    /// Draws one latency for true distance `h >= 1`.
    pub fn sample_latency<R: RngCore + ?Sized>(&self, h: usize, rng: &mut R) -> f64 {
        let z: f64 = StandardNormal.sample(&mut RngAdapter(rng));
        self.mu_ns[h - 1] + self.sigma_ns[h - 1] * z
    }

    /// Analytic confusion matrix at the model's own precision.
    pub fn confusion(&self) -> ConfusionMatrix {
        self.confusion_at(self.precision())
    }

    /// Analytic confusion matrix for a block of effective precision `p`.
    pub fn confusion_at(&self, p: usize) -> ConfusionMatrix {
        let p = p.clamp(1, self.precision());
        let mut rows = vec![vec![0.0; p + 1]; p + 1];
        rows[0][0] = 1.0 - self.zero_flip_probability;
        rows[0][1] = self.zero_flip_probability;
        for (i, row) in rows.iter_mut().enumerate().skip(1) {
            let (mu, sigma) = (self.mu_ns[i - 1], self.sigma_ns[i - 1]);
            let cdf = |t: f64| -> f64 {
                if sigma > 0.0 {
                    normal_cdf((t - mu) / sigma)
                } else if t >= mu {
                    1.0
                } else {
                    0.0
                }
            };
            // interval of j is [lower(j), upper(j)); latencies shrink as j grows
            let upper = |j: usize| -> f64 {
                match j {
                    0 => f64::INFINITY,
                    1 => self.match_timeout_ns,
                    _ => self.mids[j - 2],
                }
            };
            let lower = |j: usize| -> f64 {
                match j {
                    0 => self.match_timeout_ns,
                    j if j == p => f64::NEG_INFINITY,
                    j => self.mids[j - 1],
                }
            };
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (cdf(upper(j)) - cdf(lower(j))).max(0.0);
            }
        }
        ConfusionMatrix { rows }
    }
}

/// Reported distance for a block whose true distance is `true_h`.
///
/// `true_h` is clamped to the model precision first.
pub fn sample_reported_distance<R: RngCore + ?Sized>(
    true_h: u32,
    model: &LatencyModel,
    rng: &mut R,
) -> u32 {
    let p = model.precision() as u32;
    model.read(true_h.min(p), p, rng).distance
}

impl BlockReader for LatencyModel {
    fn read<R: RngCore + ?Sized>(&self, true_h: u32, precision: u32, rng: &mut R) -> Reading {
        let p = (precision as usize).min(self.precision());
        let h = (true_h as usize).min(p);
        if h == 0 {
            let flip = self.zero_flip_probability > 0.0 && uniform01(rng) < self.zero_flip_probability;
            return if flip {
                Reading { distance: 1, latency_ns: self.mu_ns[0] }
            } else {
                Reading { distance: 0, latency_ns: self.match_timeout_ns }
            };
        }
        let t = self.sample_latency(h, rng);
        Reading { distance: self.decide(t, p), latency_ns: t }
    }
}

/// `rand_distr` samples through `rand::Rng`, which is only implemented for
/// sized generators.
struct RngAdapter<'a, R: RngCore + ?Sized>(&'a mut R);

impl<R: RngCore + ?Sized> RngCore for RngAdapter<'_, R> {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }
    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.0.fill_bytes(dst)
    }
}

/// `p[i][j]`: probability of reporting `j` when the true distance is `i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    rows: Vec<Vec<f64>>,
}

impl ConfusionMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let cm = Self { rows };
        cm.validate()?;
        Ok(cm)
    }

    pub fn identity(precision: usize) -> Self {
        let rows = (0..=precision)
            .map(|i| (0..=precision).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Self { rows }
    }

    /// Square, non-negative, rows summing to one within 1e-9.
    pub fn validate(&self) -> Result<()> {
        let n = self.rows.len();
        if n < 2 {
            return Err(Error::Config("confusion matrix needs at least two rows".into()));
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Config(alloc::format!("row {i} has {} entries, expected {n}", row.len())));
            }
            if row.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                return Err(Error::Config(alloc::format!("row {i} has a negative or non-finite entry")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-9 {
                return Err(Error::Config(alloc::format!("row {i} sums to {s}")));
            }
        }
        Ok(())
    }

    pub fn precision(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i][j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// `1 - p[h][h]`.
    pub fn error_probability(&self, h: usize) -> f64 {
        1.0 - self.rows[h][h]
    }

    /// Largest per-distance error probability over `1..=P`.
    pub fn max_error_probability(&self) -> f64 {
        (1..self.rows.len()).map(|h| self.error_probability(h)).fold(0.0, f64::max)
    }
}

/// `1 - p[h][h]`.
pub fn error_probability(cm: &ConfusionMatrix, h: usize) -> f64 {
    cm.error_probability(h)
}

impl BlockReader for ConfusionMatrix {
    /// Categorical draw from row `true_h`; reports above `precision` fold
    /// onto `precision`.
    fn read<R: RngCore + ?Sized>(&self, true_h: u32, precision: u32, rng: &mut R) -> Reading {
        let p = (precision as usize).min(self.precision());
        let row = &self.rows[(true_h as usize).min(p)];
        let u = uniform01(rng);
        let mut acc = 0.0;
        for (j, &q) in row.iter().enumerate().take(p) {
            acc += q;
            if u < acc {
                return Reading { distance: j as u32, latency_ns: 0.0 };
            }
        }
        Reading { distance: p as u32, latency_ns: 0.0 }
    }
}

/// Deterministic +1 distance shift of voltage-scaled RRAM crossbars:
/// reported = min(true + 1, P).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RramShift;

impl BlockReader for RramShift {
    fn read<R: RngCore + ?Sized>(&self, true_h: u32, precision: u32, _rng: &mut R) -> Reading {
        Reading { distance: (true_h + 1).min(precision), latency_ns: 0.0 }
    }
}

/// The deterministic shift model of a `P`-bit crossbar as a confusion matrix.
pub fn rram_shift_model(precision: usize) -> ConfusionMatrix {
    let rows = (0..=precision)
        .map(|i| (0..=precision).map(|j| if j == (i + 1).min(precision) { 1.0 } else { 0.0 }).collect())
        .collect();
    ConfusionMatrix { rows }
}

/// Any of the built-in read-out models.
#[derive(Clone, Debug, PartialEq)]
pub enum ErrorModel {
    Latency(LatencyModel),
    Confusion(ConfusionMatrix),
    RramShift,
}

impl BlockReader for ErrorModel {
    #[inline]
    fn read<R: RngCore + ?Sized>(&self, true_h: u32, precision: u32, rng: &mut R) -> Reading {
        match self {
            ErrorModel::Latency(m) => m.read(true_h, precision, rng),
            ErrorModel::Confusion(m) => m.read(true_h, precision, rng),
            ErrorModel::RramShift => RramShift.read(true_h, precision, rng),
        }
    }
}

/// The same class row stored in `replicas` arrays; the median report wins.
/// All arrays sense in parallel, so the latency is the slowest replica.
#[derive(Clone, Debug, PartialEq)]
pub struct Replicated<M> {
    inner: M,
    replicas: u32,
}

const MAX_HISTOGRAM: usize = 64;

impl<M: BlockReader> Replicated<M> {
    pub fn new(inner: M, replicas: u32) -> Result<Self> {
        if replicas % 2 == 0 {
            return Err(invalid_arg!("replica count must be odd, got {replicas}"));
        }
        Ok(Self { inner, replicas })
    }

    pub fn replicas(&self) -> u32 {
        self.replicas
    }

    pub fn inner(&self) -> &M {
        &self.inner
    }
}

impl<M: BlockReader> BlockReader for Replicated<M> {
    fn read<R: RngCore + ?Sized>(&self, true_h: u32, precision: u32, rng: &mut R) -> Reading {
        if self.replicas == 1 {
            return self.inner.read(true_h, precision, rng);
        }
        let mut latency_ns = f64::NEG_INFINITY;
        let rank = self.replicas / 2;
        if (precision as usize) < MAX_HISTOGRAM {
            let mut hist = [0u32; MAX_HISTOGRAM];
            for _ in 0..self.replicas {
                let r = self.inner.read(true_h, precision, rng);
                hist[(r.distance as usize).min(MAX_HISTOGRAM - 1)] += 1;
                latency_ns = latency_ns.max(r.latency_ns);
            }
            let mut seen = 0;
            for (d, &c) in hist.iter().enumerate() {
                seen += c;
                if seen > rank {
                    return Reading { distance: d as u32, latency_ns };
                }
            }
            unreachable!("histogram holds every replica");
        }
        let mut ds: Vec<u32> = (0..self.replicas)
            .map(|_| {
                let r = self.inner.read(true_h, precision, rng);
                latency_ns = latency_ns.max(r.latency_ns);
                r.distance
            })
            .collect();
        ds.sort_unstable();
        Reading { distance: ds[rank as usize], latency_ns }
    }
}

/// Median of `replicas` independent reports of `true_h`.
pub fn replica_vote<R: RngCore + ?Sized>(
    true_h: u32,
    model: &LatencyModel,
    replicas: u32,
    rng: &mut R,
) -> Result<u32> {
    let voter = Replicated::new(model, replicas)?;
    let p = model.precision() as u32;
    Ok(voter.read(true_h.min(p), p, rng).distance)
}

/// Energy of one block comparison with `h` mismatches, in femtojoules.
pub fn block_energy(energy: &EnergySpec, h: u32) -> Result<f64> {
    energy.at(h)
}

/// Energy of comparing one query against every class, in picojoules.
///
/// `distances[c][b]` is the distance seen by block `b` of class `c`.
pub fn query_energy(cfg: &BlockConfig, energy: &EnergySpec, distances: &[Vec<u32>]) -> Result<f64> {
    let mut fj = 0.0;
    for (c, blocks) in distances.iter().enumerate() {
        if blocks.len() != cfg.num_blocks() {
            return Err(invalid_arg!(
                "class {c} lists {} block distances, configuration has {} blocks",
                blocks.len(),
                cfg.num_blocks()
            ));
        }
        for &h in blocks {
            fj += energy.at(h)?;
        }
    }
    Ok(fj / 1000.0)
}

/// Figures of merit of a single TCAM cell.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellFigures {
    pub transistors: u32,
    pub mismatch_energy_fj: f64,
    pub latency_ns: f64,
    /// Layout area relative to one 16T SRAM cell.
    pub relative_area: f64,
}

impl CellFigures {
    pub const SRAM: CellFigures =
        CellFigures { transistors: 16, mismatch_energy_fj: 1.15, latency_ns: 0.099, relative_area: 1.0 };
    pub const FEFINFET: CellFigures =
        CellFigures { transistors: 2, mismatch_energy_fj: 1.24, latency_ns: 0.305, relative_area: 0.13 };

    pub fn of(tech: Technology) -> CellFigures {
        match tech {
            Technology::Sram => Self::SRAM,
            Technology::FeFinFet => Self::FEFINFET,
        }
    }
}

/// Number of cells (hypervector bits) fitting in `budget`, measured in
/// SRAM-cell areas.
pub fn area_capacity(budget: f64, cell: &CellFigures) -> u64 {
    if !(budget > 0.0) || !(cell.relative_area > 0.0) {
        return 0;
    }
    // guard against 1000 / 0.5 style quotients landing a hair below an integer
    libm::floor(budget / cell.relative_area * (1.0 + 4.0 * f64::EPSILON)) as u64
}
