use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use super::{millivolts, LatencyModel, Technology};
use crate::error::{Error, Result};

/// Block-comparison energy in femtojoules, flat or indexed by distance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EnergySpec {
    Constant(f64),
    /// Entry `h` for `h = 0..=P`.
    PerDistance(Vec<f64>),
}

impl EnergySpec {
    pub fn at(&self, h: u32) -> Result<f64> {
        match self {
            EnergySpec::Constant(e) => Ok(*e),
            EnergySpec::PerDistance(es) => es.get(h as usize).copied().ok_or_else(|| {
                Error::Config(format!("energy_fJ has no entry for distance {h} ({} entries)", es.len()))
            }),
        }
    }
}

/// One row of the hardware catalog: a characterized (technology, voltage,
/// block size) combination.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HwTable {
    pub technology: Technology,
    #[serde(rename = "voltage_V")]
    pub voltage_v: f64,
    pub block_size: usize,
    pub precision: usize,
    pub mu_ns: Vec<f64>,
    pub sigma_ns: Vec<f64>,
    pub match_timeout_ns: f64,
    #[serde(rename = "energy_fJ")]
    pub energy_fj: EnergySpec,
    #[serde(rename = "temperature_C", default, skip_serializing_if = "Option::is_none")]
    pub temperature_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zero_flip_probability: Option<f64>,
}

/// A failed table check, located by key path such as `[3].mu_ns[2]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

fn violations_to_error(vs: &[Violation]) -> Error {
    let parts: Vec<String> = vs.iter().map(ToString::to_string).collect();
    Error::Config(parts.join("; "))
}

impl HwTable {
    pub fn key(&self) -> (Technology, u32, usize) {
        (self.technology, millivolts(self.voltage_v), self.block_size)
    }

    /// Checks every invariant; `prefix` is prepended to key paths.
    pub fn violations(&self, prefix: &str) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut bad = |field: String, message: String| {
            let path = if prefix.is_empty() { field } else { format!("{prefix}.{field}") };
            out.push(Violation { path, message })
        };
        if !(self.voltage_v.is_finite() && self.voltage_v > 0.0) {
            bad("voltage_V".into(), format!("must be positive, got {}", self.voltage_v));
        }
        if self.block_size == 0 {
            bad("block_size".into(), "must be at least 1".into());
        }
        if self.precision == 0 || self.precision > self.block_size {
            bad("precision".into(), format!("must lie in 1..={}, got {}", self.block_size, self.precision));
        }
        if self.mu_ns.len() != self.precision {
            bad("mu_ns".into(), format!("expected {} entries (h = 1..=P), got {}", self.precision, self.mu_ns.len()));
        }
        if self.sigma_ns.len() != self.precision {
            bad(
                "sigma_ns".into(),
                format!("expected {} entries (h = 1..=P), got {}", self.precision, self.sigma_ns.len()),
            );
        }
        for (i, m) in self.mu_ns.iter().enumerate() {
            if !(m.is_finite() && *m > 0.0) {
                bad(format!("mu_ns[{i}]"), format!("must be positive, got {m}"));
            } else if i > 0 && !(*m < self.mu_ns[i - 1]) {
                bad(
                    format!("mu_ns[{i}]"),
                    format!("mu must strictly decrease with distance: mu({}) = {m} >= mu({}) = {}", i + 1, i, self.mu_ns[i - 1]),
                );
            }
        }
        for (i, s) in self.sigma_ns.iter().enumerate() {
            if !(s.is_finite() && *s > 0.0) {
                bad(format!("sigma_ns[{i}]"), format!("must be positive, got {s}"));
            }
        }
        if let Some(&mu1) = self.mu_ns.first() {
            if !(self.match_timeout_ns > mu1) {
                bad("match_timeout_ns".into(), format!("must exceed mu(1) = {mu1}, got {}", self.match_timeout_ns));
            }
        }
        match &self.energy_fj {
            EnergySpec::Constant(e) => {
                if !(e.is_finite() && *e > 0.0) {
                    bad("energy_fJ".into(), format!("must be positive, got {e}"));
                }
            }
            EnergySpec::PerDistance(es) => {
                if es.len() != self.precision + 1 {
                    bad("energy_fJ".into(), format!("expected {} entries (h = 0..=P), got {}", self.precision + 1, es.len()));
                }
                for (i, e) in es.iter().enumerate() {
                    if !(e.is_finite() && *e > 0.0) {
                        bad(format!("energy_fJ[{i}]"), format!("must be positive, got {e}"));
                    }
                }
            }
        }
        if let Some(p) = self.zero_flip_probability {
            if !(0.0..=1.0).contains(&p) {
                bad("zero_flip_probability".into(), format!("must lie in [0, 1], got {p}"));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let vs = self.violations("");
        if vs.is_empty() {
            Ok(())
        } else {
            Err(violations_to_error(&vs))
        }
    }

    /// Latency model at the table's full precision.
    pub fn latency_model(&self) -> Result<LatencyModel> {
        self.validate()?;
        LatencyModel::new(self.mu_ns.clone(), self.sigma_ns.clone(), self.match_timeout_ns)?
            .with_zero_flip(self.zero_flip_probability.unwrap_or(0.0))
    }

    /// Latency model restricted to a block precision `p <= precision`.
    pub fn latency_model_at(&self, p: usize) -> Result<LatencyModel> {
        self.latency_model()?.truncated(p)
    }
}

/// All characterized tables, keyed by (technology, voltage, block size).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Catalog {
    pub(super) tables: Vec<HwTable>,
}

impl Catalog {
    /// Builds and validates a catalog.
    pub fn new(tables: Vec<HwTable>) -> Result<Self> {
        let c = Self { tables };
        c.validate()?;
        Ok(c)
    }

    pub fn tables(&self) -> &[HwTable] {
        &self.tables
    }

    pub fn len(&self) -> usize {
        self.tables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }

    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for (i, t) in self.tables.iter().enumerate() {
            out.extend(t.violations(&format!("[{i}]")));
            if let Some(j) = self.tables[..i].iter().position(|u| u.key() == t.key()) {
                out.push(Violation {
                    path: format!("[{i}]"),
                    message: format!(
                        "duplicate entry for {} {} V N={} (first at [{j}])",
                        t.technology, t.voltage_v, t.block_size
                    ),
                });
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let vs = self.violations();
        if vs.is_empty() {
            Ok(())
        } else {
            Err(violations_to_error(&vs))
        }
    }

    pub fn get(&self, tech: Technology, voltage_v: f64, block_size: usize) -> Option<&HwTable> {
        let key = (tech, millivolts(voltage_v), block_size);
        self.tables.iter().find(|t| t.key() == key)
    }

    /// Like [`Catalog::get`], with a configuration error naming the key.
    pub fn require(&self, tech: Technology, voltage_v: f64, block_size: usize) -> Result<&HwTable> {
        self.get(tech, voltage_v, block_size).ok_or_else(|| {
            Error::Config(format!("hardware catalog has no table for {tech} {voltage_v} V N={block_size}"))
        })
    }
}
