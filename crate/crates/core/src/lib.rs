//! Binary hyperdimensional computing on blocked, error-prone TCAM hardware.
//!
//! This crate is `no_std` (it needs `alloc`). It holds the algorithmic core:
//!
//! - [`hypervector`]: packed binary hypervectors, bind / permute / bundle and
//!   Hamming similarity.
//! - [`encoding`]: item memories and the n-gram text and pixel-position image
//!   encoders.
//! - [`am`]: the associative memory with ideal and blocked (precision-clamped)
//!   inference.
//! - [`hwmodel`]: latency distributions, confusion matrices, error sampling,
//!   replica voting, energy and area figures, and the shipped default tables.
//! - [`pareto`]: non-dominated filtering and energy-savings ratios.
//!
//! File formats, the parallel design-space explorer and the CLI live in the
//! `tcamhd` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod am;
pub mod encoding;
mod error;
pub mod hwmodel;
pub mod hypervector;
pub mod pareto;
pub mod seed;

pub use am::{AssociativeMemory, BlockConfig, Prediction};
pub use encoding::{ItemMemory, LabeledSet, Symbol, TextEncoder};
pub use error::{Error, Result};
pub use hypervector::{BundleAccumulator, Hypervector};
