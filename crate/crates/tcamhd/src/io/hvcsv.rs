//! Pre-encoded hypervectors as CSV rows `label,bitstring`.
//!
//! A first row whose label column reads `label` is a header and skipped.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use tcamhd_core::{Hypervector, LabeledSet};

use crate::error::{Error, Result};

pub fn parse(path: &Path, text: &str) -> Result<LabeledSet> {
    let mut rows: Vec<(usize, &str, &str)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let row = i + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let Some((label, bits)) = line.rsplit_once(',') else {
            return Err(Error::row(path, row, "expected `label,bitstring`"));
        };
        let (label, bits) = (label.trim(), bits.trim());
        if rows.is_empty() && row == 1 && label.eq_ignore_ascii_case("label") {
            continue;
        }
        rows.push((row, label, bits));
    }
    let Some(&(_, _, first)) = rows.first() else {
        return Err(tcamhd_core::Error::InvalidArgument(format!("{}: no hypervector rows", path.display())).into());
    };
    let dim = first.len();
    let mut set = LabeledSet::new(dim.max(1)).map_err(|e| Error::row(path, rows[0].0, e.to_string()))?;
    for (row, label, bits) in rows {
        if label.is_empty() {
            return Err(Error::row(path, row, "empty label"));
        }
        if bits.len() != dim {
            return Err(Error::row(path, row, format!("bitstring has {} characters, expected {dim}", bits.len())));
        }
        if let Some(c) = bits.chars().find(|c| *c != '0' && *c != '1') {
            return Err(Error::row(path, row, format!("character {c:?} outside {{0,1}}")));
        }
        let hv = Hypervector::from_bit_str(bits).map_err(|e| Error::row(path, row, e.to_string()))?;
        set.push(hv, label).map_err(|e| Error::row(path, row, e.to_string()))?;
    }
    Ok(set)
}

pub fn load(path: impl AsRef<Path>) -> Result<LabeledSet> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse(path, &text)
}

pub fn render(set: &LabeledSet) -> String {
    let mut out = String::from("label,bits\n");
    for (hv, label) in set.items() {
        writeln!(out, "{label},{}", hv.to_bit_string()).unwrap();
    }
    out
}
