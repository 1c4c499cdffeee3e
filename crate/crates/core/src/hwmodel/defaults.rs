//! Shipped default tables.
//!
//! These are fitted approximations, not circuit extractions. Per table:
//!
//! - `mu(h) = s(V) * t0 * (0.7 + 0.3 N / 15) + k(N) / (h + 1)`, with
//!   `k(N) = k15 * sqrt(15 / N)`: the discharge time falls roughly as the
//!   inverse of the mismatch count and longer match lines are slower.
//! - `sigma` is constant within a table, `s(V) * sigma0`.
//! - `k15` is solved by bisection so that the largest per-distance error
//!   probability of the N = 15, P = 7 block equals a per-voltage target.
//!   The non-monotonic voltage behaviour of SRAM is therefore carried by the
//!   spacing of `mu`.
//! - `match_timeout = mu(1) + 6 sigma`.
//! - Energy is flat in `h`. The 15-bit SRAM value follows a power law through
//!   0.73 fJ at 0.5 V and 4.53 fJ at 1.0 V; the 1-bit value is the cell
//!   mismatch energy scaled by the same law from 0.7 V; other block sizes
//!   interpolate linearly in `N`.

use alloc::vec::Vec;

use super::{CellFigures, EnergySpec, HwTable, LatencyModel, Technology};
use super::table::Catalog;

/// Supply voltages covered by the default catalog.
pub const DEFAULT_VOLTAGES: [f64; 6] = [0.5, 0.6, 0.7, 0.8, 0.9, 1.0];

/// Block sizes covered by the default catalog.
pub const DEFAULT_BLOCK_SIZES: core::ops::RangeInclusive<usize> = 2..=25;

const CAL_N: usize = 15;
const CAL_P: usize = 7;

struct TechParams {
    t0_ns: f64,
    sigma0_ns: f64,
    latency_scale: [f64; 6],
    max_error: [f64; 6],
    /// Ratio to the SRAM 15-bit energy at the same voltage.
    energy_factor: [f64; 6],
}

const SRAM: TechParams = TechParams {
    t0_ns: 0.045,
    sigma0_ns: 0.0016,
    latency_scale: [1.5, 1.2, 1.0, 0.88, 0.78, 0.70],
    max_error: [0.31, 0.35, 0.39, 0.27, 0.19, 0.13],
    energy_factor: [1.0; 6],
};

const FEFINFET: TechParams = TechParams {
    t0_ns: 0.045,
    sigma0_ns: 0.0016,
    latency_scale: [15.0, 6.0, 3.08, 2.2, 1.8, 1.5],
    max_error: [0.78, 0.72, 0.66, 0.60, 0.54, 0.48],
    energy_factor: [1.19, 1.10, 1.02, 1.01, 1.00, 0.98],
};

fn params(tech: Technology) -> &'static TechParams {
    match tech {
        Technology::Sram => &SRAM,
        Technology::FeFinFet => &FEFINFET,
    }
}

const E15_LOW: f64 = 0.73;
const E15_HIGH: f64 = 4.53;

fn energy_exponent() -> f64 {
    libm::log(E15_HIGH / E15_LOW) / libm::log(2.0)
}

fn round4(x: f64) -> f64 {
    libm::round(x * 1e4) / 1e4
}

/// Flat block energy in fJ.
fn block_energy_fj(tech: Technology, vi: usize, n: usize) -> f64 {
    let v = DEFAULT_VOLTAGES[vi];
    let g = energy_exponent();
    let e15 = E15_LOW * libm::pow(v / 0.5, g) * params(tech).energy_factor[vi];
    let e1 = CellFigures::of(tech).mismatch_energy_fj * libm::pow(v / 0.7, g);
    round4(e1 + (e15 - e1) * (n as f64 - 1.0) / (CAL_N as f64 - 1.0))
}

fn mu_table(tech: Technology, vi: usize, n: usize, k15: f64) -> Vec<f64> {
    let p = params(tech);
    let base = p.latency_scale[vi] * p.t0_ns * (0.7 + 0.3 * n as f64 / CAL_N as f64);
    let k = k15 * libm::sqrt(CAL_N as f64 / n as f64);
    (1..=n).map(|h| base + k / (h as f64 + 1.0)).collect()
}

fn max_error_at_cal(tech: Technology, vi: usize, k15: f64) -> f64 {
    let sigma = params(tech).latency_scale[vi] * params(tech).sigma0_ns;
    let mu = mu_table(tech, vi, CAL_N, k15);
    let timeout = mu[0] + 6.0 * sigma;
    let m = LatencyModel::new(mu, alloc::vec![sigma; CAL_N], timeout).expect("calibration model is valid");
    m.confusion_at(CAL_P).max_error_probability()
}

/// Solves for the `mu` spacing that hits the target error; error falls as
/// spacing grows.
fn calibrate_k15(tech: Technology, vi: usize) -> f64 {
    let target = params(tech).max_error[vi];
    let sigma = params(tech).latency_scale[vi] * params(tech).sigma0_ns;
    let (mut lo, mut hi) = (1e-3 * sigma, 1e4 * sigma);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if max_error_at_cal(tech, vi, mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// One default table (precision = block size).
pub fn default_table(tech: Technology, voltage_v: f64, block_size: usize) -> Option<HwTable> {
    let vi = DEFAULT_VOLTAGES.iter().position(|&v| super::millivolts(v) == super::millivolts(voltage_v))?;
    if !DEFAULT_BLOCK_SIZES.contains(&block_size) {
        return None;
    }
    Some(build(tech, vi, block_size, calibrate_k15(tech, vi)))
}

fn build(tech: Technology, vi: usize, n: usize, k15: f64) -> HwTable {
    let sigma = params(tech).latency_scale[vi] * params(tech).sigma0_ns;
    let mu_ns = mu_table(tech, vi, n, k15);
    let match_timeout_ns = mu_ns[0] + 6.0 * sigma;
    HwTable {
        technology: tech,
        voltage_v: DEFAULT_VOLTAGES[vi],
        block_size: n,
        precision: n,
        mu_ns,
        sigma_ns: alloc::vec![sigma; n],
        match_timeout_ns,
        energy_fj: EnergySpec::Constant(block_energy_fj(tech, vi, n)),
        temperature_c: Some(27.0),
        zero_flip_probability: None,
    }
}

/// Both technologies, all default voltages, block sizes 2 to 25.
pub fn default_catalog() -> Catalog {
    let mut tables = Vec::new();
    for tech in Technology::ALL {
        for vi in 0..DEFAULT_VOLTAGES.len() {
            let k15 = calibrate_k15(tech, vi);
            for n in DEFAULT_BLOCK_SIZES {
                tables.push(build(tech, vi, n, k15));
            }
        }
    }
    Catalog::new(tables).expect("default tables satisfy every invariant")
}
