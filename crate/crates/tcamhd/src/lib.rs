//! File formats, dataset encoding, the design-space explorer and reports
//! around [`tcamhd_core`].

pub mod config;
pub mod datasets;
mod error;
pub mod explorer;
pub mod io;
pub mod report;

pub use error::{Error, Result};

/// Version string embedded in every artifact.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
