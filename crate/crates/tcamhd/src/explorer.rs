//! Noisy accuracy evaluation, design-space sweeps and Pareto extraction.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tcamhd_core::am::{argmin, blocked_distances_true};
use tcamhd_core::hwmodel::{
    millivolts, query_energy, BlockReader, Catalog, EnergySpec, LatencyModel, Replicated, Technology,
};
use tcamhd_core::pareto;
use tcamhd_core::seed::{derive, substream};
use tcamhd_core::{AssociativeMemory, BlockConfig};

use crate::datasets::{Encoded, TestSet};
use crate::error::{Error, Result};

/// Default Monte-Carlo repetitions of the test set per noisy point.
pub const DEFAULT_TRIALS: usize = 10;

/// Metrics of one (memory, block configuration, hardware) combination.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub accuracies: Vec<f64>,
    pub accuracy_mean: f64,
    pub accuracy_std: f64,
    /// Energy of one query against every class, from the true clamped
    /// distances. Zero without an energy table.
    pub energy_pj: f64,
    /// Mean over trials and queries of the slowest block read-out.
    pub latency_ns: f64,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn check(am: &AssociativeMemory, test: &TestSet, cfg: &BlockConfig) -> Result<()> {
    if am.is_empty() {
        return Err(tcamhd_core::Error::InvalidState("associative memory has no classes".into()).into());
    }
    if cfg.dimension() != am.dimension() {
        return Err(tcamhd_core::Error::InvalidArgument(format!(
            "block configuration covers {} bits, memory has {}",
            cfg.dimension(),
            am.dimension()
        ))
        .into());
    }
    if test.is_empty() {
        return Err(Error::Config("test set is empty".into()));
    }
    Ok(())
}

/// Full-Hamming accuracy without blocking or noise.
pub fn ideal_accuracy(am: &AssociativeMemory, test: &TestSet) -> Result<f64> {
    let hits = test
        .queries
        .par_iter()
        .zip(&test.labels)
        .map(|(q, &l)| Ok(usize::from(am.infer_ideal(q)?.class == l)))
        .collect::<Result<Vec<_>>>()?;
    Ok(hits.iter().sum::<usize>() as f64 / test.len() as f64)
}

/// Predicted class and slowest read-out per query for one trial. The
/// stream of query `q` in trial `t` is derived from `(seed, t, q)`.
pub fn run_trial<M>(
    am: &AssociativeMemory,
    test: &TestSet,
    cfg: &BlockConfig,
    hw: Option<&M>,
    seed: u64,
    trial: u64,
) -> Result<Vec<(usize, f64)>>
where
    M: BlockReader + Sync + ?Sized,
{
    check(am, test, cfg)?;
    test.queries
        .par_iter()
        .enumerate()
        .map_init(Vec::new, |scores, (q, query)| {
            let mut rng = substream(seed, &[trial, q as u64]);
            am.score_blocked(query, cfg, hw, &mut rng, scores)?;
            let latency = scores.iter().map(|s| s.latency_ns).fold(0.0, f64::max);
            Ok((argmin(scores).class, latency))
        })
        .collect()
}

/// Per-query predictions for one trial.
pub fn predictions<M>(
    am: &AssociativeMemory,
    test: &TestSet,
    cfg: &BlockConfig,
    hw: Option<&M>,
    seed: u64,
    trial: u64,
) -> Result<Vec<usize>>
where
    M: BlockReader + Sync + ?Sized,
{
    Ok(run_trial(am, test, cfg, hw, seed, trial)?.into_iter().map(|(c, _)| c).collect())
}

/// Mean energy of one query in picojoules.
pub fn mean_query_energy(
    am: &AssociativeMemory,
    test: &TestSet,
    cfg: &BlockConfig,
    energy: &EnergySpec,
) -> Result<f64> {
    if let EnergySpec::Constant(e) = energy {
        return Ok(am.len() as f64 * cfg.num_blocks() as f64 * e / 1000.0);
    }
    let per_query = test
        .queries
        .par_iter()
        .map(|q| {
            let d = am
                .classes()
                .iter()
                .map(|(_, c)| blocked_distances_true(q, c, cfg))
                .collect::<tcamhd_core::Result<Vec<_>>>()?;
            Ok(query_energy(cfg, energy, &d)?)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(per_query.iter().sum::<f64>() / per_query.len() as f64)
}

/// Runs blocked inference over the test set `trials` times.
pub fn evaluate<M>(
    am: &AssociativeMemory,
    test: &TestSet,
    cfg: &BlockConfig,
    hw: Option<&M>,
    energy: Option<&EnergySpec>,
    trials: usize,
    seed: u64,
) -> Result<Evaluation>
where
    M: BlockReader + Sync + ?Sized,
{
    if trials == 0 {
        return Err(tcamhd_core::Error::InvalidArgument("trials must be at least 1".into()).into());
    }
    check(am, test, cfg)?;
    let mut accuracies = Vec::with_capacity(trials);
    let mut latency = 0.0;
    for t in 0..trials {
        // without a model every trial is identical
        if hw.is_none() && t > 0 {
            accuracies.push(accuracies[0]);
            continue;
        }
        let out = run_trial(am, test, cfg, hw, seed, t as u64)?;
        let hits = out.iter().zip(&test.labels).filter(|((p, _), l)| p == *l).count();
        accuracies.push(hits as f64 / test.len() as f64);
        latency += out.iter().map(|(_, l)| l).sum::<f64>() / out.len() as f64;
    }
    let runs = if hw.is_none() { 1 } else { trials };
    let (accuracy_mean, accuracy_std) = mean_std(&accuracies);
    let energy_pj = match energy {
        Some(e) => mean_query_energy(am, test, cfg, e)?,
        None => 0.0,
    };
    Ok(Evaluation { accuracies, accuracy_mean, accuracy_std, energy_pj, latency_ns: latency / runs as f64 })
}

/// Loss of the noise-free blocked model against full Hamming for one
/// (N, P) pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrecisionRow {
    pub block_size: usize,
    pub precision: usize,
    pub accuracy: f64,
    pub accuracy_loss: f64,
}

pub fn precision_sweep_report(
    am: &AssociativeMemory,
    test: &TestSet,
    block_sizes: &[usize],
    precisions: &[usize],
) -> Result<Vec<PrecisionRow>> {
    let ideal = ideal_accuracy(am, test)?;
    let mut rows = Vec::new();
    for &n in block_sizes {
        for &p in precisions.iter().filter(|&&p| p <= n) {
            let cfg = BlockConfig::new(am.dimension(), n, p)?;
            let e = evaluate::<LatencyModel>(am, test, &cfg, None, None, 1, 0)?;
            rows.push(PrecisionRow {
                block_size: n,
                precision: p,
                accuracy: e.accuracy_mean,
                accuracy_loss: ideal - e.accuracy_mean,
            });
        }
    }
    Ok(rows)
}

/// Axes of a design-space sweep. Only (N, P) pairs with P <= N are
/// evaluated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpace {
    pub technologies: Vec<Technology>,
    #[serde(rename = "voltages_V")]
    pub voltages: Vec<f64>,
    pub block_sizes: Vec<usize>,
    pub precisions: Vec<usize>,
    pub dimensions: Vec<usize>,
    #[serde(default = "one_replica")]
    pub replicas: Vec<u32>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
}

fn one_replica() -> Vec<u32> {
    vec![1]
}

fn default_trials() -> usize {
    DEFAULT_TRIALS
}

/// Identity of one swept configuration; also its canonical sort order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PointKey {
    pub technology: Technology,
    pub millivolts: u32,
    pub block_size: usize,
    pub precision: usize,
    pub dimension: usize,
    pub replicas: u32,
}

impl PointKey {
    pub fn voltage_v(&self) -> f64 {
        self.millivolts as f64 / 1000.0
    }

    /// Seed of this point's noise, independent of sweep order.
    pub fn seed(&self, master: u64) -> u64 {
        derive(
            master,
            &[
                self.technology as u64,
                self.millivolts as u64,
                self.block_size as u64,
                self.precision as u64,
                self.dimension as u64,
                self.replicas as u64,
            ],
        )
    }
}

impl SweepSpace {
    pub fn validate(&self) -> Result<()> {
        let empty = [
            ("technologies", self.technologies.is_empty()),
            ("voltages_V", self.voltages.is_empty()),
            ("block_sizes", self.block_sizes.is_empty()),
            ("precisions", self.precisions.is_empty()),
            ("dimensions", self.dimensions.is_empty()),
            ("replicas", self.replicas.is_empty()),
        ];
        if let Some((name, _)) = empty.iter().find(|(_, e)| *e) {
            return Err(Error::Config(format!("sweep.{name} must not be empty")));
        }
        if self.trials == 0 {
            return Err(Error::Config("sweep.trials must be at least 1".into()));
        }
        if let Some(r) = self.replicas.iter().find(|r| *r % 2 == 0) {
            return Err(Error::Config(format!("sweep.replicas: {r} is not odd")));
        }
        if self.block_sizes.iter().chain(&self.precisions).chain(&self.dimensions).any(|&x| x == 0) {
            return Err(Error::Config("sweep sizes must be positive".into()));
        }
        if self.block_sizes.contains(&1) {
            return Err(Error::Config("sweep.block_sizes: blocks need at least 2 cells".into()));
        }
        if self.points().is_empty() {
            return Err(Error::Config("sweep has no (block size, precision) pair with precision <= block size".into()));
        }
        Ok(())
    }

    /// Every configuration, deduplicated, in canonical order.
    pub fn points(&self) -> Vec<PointKey> {
        let mut keys = std::collections::BTreeSet::new();
        for &technology in &self.technologies {
            for &v in &self.voltages {
                for &block_size in &self.block_sizes {
                    for &precision in self.precisions.iter().filter(|&&p| p <= block_size) {
                        for &dimension in &self.dimensions {
                            for &replicas in &self.replicas {
                                keys.insert(PointKey {
                                    technology,
                                    millivolts: millivolts(v),
                                    block_size,
                                    precision,
                                    dimension,
                                    replicas,
                                });
                            }
                        }
                    }
                }
            }
        }
        keys.into_iter().collect()
    }

    /// Fails on the first (technology, voltage, N) the catalog lacks.
    pub fn check_catalog(&self, catalog: &Catalog) -> Result<()> {
        for k in self.points() {
            let t = catalog.require(k.technology, k.voltage_v(), k.block_size)?;
            if t.precision < k.precision {
                return Err(Error::Config(format!(
                    "catalog table {} {} V N={} covers precision {}, sweep needs {}",
                    k.technology,
                    k.voltage_v(),
                    k.block_size,
                    t.precision,
                    k.precision
                )));
            }
        }
        Ok(())
    }
}

/// One evaluated configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignPoint {
    pub technology: Technology,
    #[serde(rename = "voltage_V")]
    pub voltage_v: f64,
    pub block_size: usize,
    pub precision: usize,
    pub dimension: usize,
    pub replicas: u32,
    pub trials: usize,
    pub accuracy_mean: f64,
    pub accuracy_std: f64,
    pub accuracy_loss: f64,
    #[serde(rename = "energy_pJ")]
    pub energy_pj: f64,
    pub latency_ns: f64,
    pub pareto: bool,
}

impl DesignPoint {
    pub fn key(&self) -> PointKey {
        PointKey {
            technology: self.technology,
            millivolts: millivolts(self.voltage_v),
            block_size: self.block_size,
            precision: self.precision,
            dimension: self.dimension,
            replicas: self.replicas,
        }
    }

    pub fn coordinates(&self) -> (f64, f64) {
        (self.energy_pj, self.accuracy_loss)
    }
}

/// Read-out model of one catalog entry at precision `p`, with replicas.
pub fn hardware(
    catalog: &Catalog,
    key: &PointKey,
) -> Result<(Replicated<LatencyModel>, EnergySpec)> {
    let t = catalog.require(key.technology, key.voltage_v(), key.block_size)?;
    let m = t.latency_model_at(key.precision)?;
    Ok((Replicated::new(m, key.replicas)?, t.energy_fj.clone()))
}

/// Evaluates one configuration against an encoded task.
pub fn evaluate_point(
    key: &PointKey,
    task: &Encoded,
    ideal: f64,
    catalog: &Catalog,
    trials: usize,
    master: u64,
) -> Result<DesignPoint> {
    let (reader, energy) = hardware(catalog, key)?;
    let cfg = BlockConfig::new(key.dimension, key.block_size, key.precision)?;
    let e = evaluate(&task.am, &task.test, &cfg, Some(&reader), Some(&energy), trials, key.seed(master))?;
    Ok(DesignPoint {
        technology: key.technology,
        voltage_v: key.voltage_v(),
        block_size: key.block_size,
        precision: key.precision,
        dimension: key.dimension,
        replicas: key.replicas,
        trials,
        accuracy_mean: e.accuracy_mean,
        accuracy_std: e.accuracy_std,
        accuracy_loss: ideal - e.accuracy_mean,
        energy_pj: e.energy_pj,
        latency_ns: e.latency_ns,
        pareto: false,
    })
}

/// Sweeps every point of `space`. `encode` builds the task at a dimension;
/// points already in `done` are reused, and `on_point` sees each newly
/// evaluated point. The result is in canonical order with Pareto flags set.
pub fn sweep(
    space: &SweepSpace,
    encode: &(dyn Fn(usize) -> Result<Encoded> + Sync),
    catalog: &Catalog,
    done: &[DesignPoint],
    on_point: &mut dyn FnMut(&DesignPoint) -> Result<()>,
) -> Result<Vec<DesignPoint>> {
    space.validate()?;
    space.check_catalog(catalog)?;
    let mut results: BTreeMap<PointKey, DesignPoint> = BTreeMap::new();
    let wanted: std::collections::BTreeSet<PointKey> = space.points().into_iter().collect();
    for p in done {
        if wanted.contains(&p.key()) && p.trials == space.trials {
            results.insert(p.key(), p.clone());
        }
    }
    let mut by_dim: BTreeMap<usize, Vec<PointKey>> = BTreeMap::new();
    for k in wanted.iter().filter(|k| !results.contains_key(k)) {
        by_dim.entry(k.dimension).or_default().push(*k);
    }
    for (dim, keys) in by_dim {
        let task = encode(dim)?;
        if task.am.dimension() != dim {
            return Err(Error::Config(format!("task encoded at {} bits, sweep asked for {dim}", task.am.dimension())));
        }
        let ideal = ideal_accuracy(&task.am, &task.test)?;
        for k in keys {
            let p = evaluate_point(&k, &task, ideal, catalog, space.trials, space.seed)?;
            on_point(&p)?;
            results.insert(k, p);
        }
    }
    let mut points: Vec<DesignPoint> = results.into_values().collect();
    mark_pareto(&mut points)?;
    Ok(points)
}

/// Sets `pareto` on the non-dominated points.
pub fn mark_pareto(points: &mut [DesignPoint]) -> Result<()> {
    if points.is_empty() {
        return Ok(());
    }
    let coords: Vec<(f64, f64)> = points.iter().map(DesignPoint::coordinates).collect();
    let front = pareto::pareto_front(&coords)?;
    for p in points.iter_mut() {
        p.pareto = false;
    }
    for i in front {
        points[i].pareto = true;
    }
    Ok(())
}

/// Energy ratio between the cheapest loss-free point and the cheapest point
/// within `acceptable_loss`, over the Pareto front of `points`.
pub fn energy_savings(points: &[DesignPoint], acceptable_loss: f64) -> Result<Option<f64>> {
    let coords: Vec<(f64, f64)> = points.iter().map(DesignPoint::coordinates).collect();
    let front: Vec<(f64, f64)> = pareto::pareto_front(&coords)?.into_iter().map(|i| coords[i]).collect();
    Ok(pareto::energy_savings(&front, acceptable_loss)?)
}
