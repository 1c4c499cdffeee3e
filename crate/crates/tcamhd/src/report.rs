//! CSV and JSON result files.
//!
//! Every artifact starts with `#` comment lines naming the tool version,
//! master seed and configuration hash. A timestamp line is added unless the
//! run is deterministic.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::explorer::{DesignPoint, PrecisionRow};

pub const RESULT_COLUMNS: &str = "technology,voltage_V,block_size,precision,dimension,replicas,trials,\
accuracy_mean,accuracy_std,accuracy_loss,energy_pJ,latency_ns,pareto";

/// Provenance shared by every emitted file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Header {
    pub tool_version: String,
    pub seed: u64,
    pub config_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generated_unix: Option<u64>,
}

impl Header {
    pub fn new(seed: u64, config_hash: String, deterministic: bool) -> Self {
        let generated_unix = (!deterministic).then(|| {
            std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map_or(0, |d| d.as_secs())
        });
        Header { tool_version: crate::VERSION.to_string(), seed, config_hash, generated_unix }
    }

    fn comment_lines(&self) -> String {
        let mut s = format!(
            "# tcamhd {}\n# seed {}\n# config_hash {}\n",
            self.tool_version, self.seed, self.config_hash
        );
        if let Some(t) = self.generated_unix {
            writeln!(s, "# generated_unix {t}").unwrap();
        }
        s
    }
}

/// SHA-256 of the bytes, lowercase hex.
pub fn hash_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        write!(s, "{b:02x}").unwrap();
        s
    })
}

pub fn results_csv(header: &Header, points: &[DesignPoint]) -> String {
    let mut s = header.comment_lines();
    s.push_str(RESULT_COLUMNS);
    s.push('\n');
    for p in points {
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            p.technology,
            p.voltage_v,
            p.block_size,
            p.precision,
            p.dimension,
            p.replicas,
            p.trials,
            p.accuracy_mean,
            p.accuracy_std,
            p.accuracy_loss,
            p.energy_pj,
            p.latency_ns,
            u8::from(p.pareto)
        )
        .unwrap();
    }
    s
}

#[derive(Serialize, Deserialize)]
struct ResultsJson {
    #[serde(flatten)]
    header: Header,
    points: Vec<DesignPoint>,
}

pub fn results_json(header: &Header, points: &[DesignPoint]) -> String {
    let doc = ResultsJson { header: header.clone(), points: points.to_vec() };
    let mut s = serde_json::to_string_pretty(&doc).expect("results serialize");
    s.push('\n');
    s
}

fn field<T: std::str::FromStr>(path: &Path, row: usize, name: &str, v: &str) -> Result<T> {
    v.trim().parse().map_err(|_| Error::row(path, row, format!("column {name}: cannot parse {v:?}")))
}

/// Reads a results CSV written by [`results_csv`]; comment lines are
/// skipped.
pub fn parse_results_csv(path: &Path, text: &str) -> Result<Vec<DesignPoint>> {
    let mut points = Vec::new();
    let mut saw_header = false;
    for (i, line) in text.lines().enumerate() {
        let row = i + 1;
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        if !saw_header {
            if line.trim() != RESULT_COLUMNS {
                return Err(Error::row(path, row, "expected the results column header"));
            }
            saw_header = true;
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 13 {
            return Err(Error::row(path, row, format!("expected 13 columns, found {}", f.len())));
        }
        let technology = f[0].parse().map_err(|e| Error::row(path, row, format!("{e}")))?;
        let pareto: u8 = field(path, row, "pareto", f[12])?;
        points.push(DesignPoint {
            technology,
            voltage_v: field(path, row, "voltage_V", f[1])?,
            block_size: field(path, row, "block_size", f[2])?,
            precision: field(path, row, "precision", f[3])?,
            dimension: field(path, row, "dimension", f[4])?,
            replicas: field(path, row, "replicas", f[5])?,
            trials: field(path, row, "trials", f[6])?,
            accuracy_mean: field(path, row, "accuracy_mean", f[7])?,
            accuracy_std: field(path, row, "accuracy_std", f[8])?,
            accuracy_loss: field(path, row, "accuracy_loss", f[9])?,
            energy_pj: field(path, row, "energy_pJ", f[10])?,
            latency_ns: field(path, row, "latency_ns", f[11])?,
            pareto: pareto == 1,
        });
    }
    if !saw_header {
        return Err(Error::row(path, 1, "no results header"));
    }
    Ok(points)
}

pub fn precision_csv(header: &Header, rows: &[PrecisionRow]) -> String {
    let mut s = header.comment_lines();
    s.push_str("block_size,precision,accuracy,accuracy_loss\n");
    for r in rows {
        writeln!(s, "{},{},{},{}", r.block_size, r.precision, r.accuracy, r.accuracy_loss).unwrap();
    }
    s
}

/// `h,error_probability` for `h = 0..=P`.
pub fn errorprob_csv(header: &Header, cm: &tcamhd_core::hwmodel::ConfusionMatrix) -> String {
    let mut s = header.comment_lines();
    s.push_str("h,error_probability\n");
    for h in 0..=cm.precision() {
        writeln!(s, "{h},{}", cm.error_probability(h)).unwrap();
    }
    s
}

/// Square matrix with a `true\reported` corner cell.
pub fn confusion_csv(header: &Header, cm: &tcamhd_core::hwmodel::ConfusionMatrix) -> String {
    let mut s = header.comment_lines();
    s.push_str("true");
    for j in 0..=cm.precision() {
        write!(s, ",{j}").unwrap();
    }
    s.push('\n');
    for (i, row) in cm.rows().iter().enumerate() {
        write!(s, "{i}").unwrap();
        for p in row {
            write!(s, ",{p}").unwrap();
        }
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use tcamhd_core::hwmodel::Technology;

    fn point(e: f64) -> DesignPoint {
        DesignPoint {
            technology: Technology::FeFinFet,
            voltage_v: 0.7,
            block_size: 15,
            precision: 7,
            dimension: 10000,
            replicas: 3,
            trials: 10,
            accuracy_mean: 0.9712345678901234,
            accuracy_std: 0.001,
            accuracy_loss: -0.0004166666666667318,
            energy_pj: e,
            latency_ns: 0.1,
            pareto: true,
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let h = Header::new(7, hash_hex(b"cfg"), true);
        let pts = vec![point(1.25), point(0.1 + 0.2)];
        let text = results_csv(&h, &pts);
        assert!(text.starts_with("# tcamhd "));
        assert!(!text.contains("generated"));
        assert_eq!(parse_results_csv(Path::new("r.csv"), &text).unwrap(), pts);
    }

    #[test]
    fn timestamp_only_when_not_deterministic() {
        let h = Header::new(7, String::new(), false);
        assert!(results_csv(&h, &[]).contains("# generated_unix "));
    }

    #[test]
    fn json_mirror_carries_the_same_fields() {
        let h = Header::new(1, "x".into(), true);
        let v: serde_json::Value = serde_json::from_str(&results_json(&h, &[point(2.0)])).unwrap();
        assert_eq!(v["seed"], 1);
        let p = &v["points"][0];
        for col in RESULT_COLUMNS.split(',') {
            assert!(p.get(col).is_some(), "missing {col}");
        }
    }

    #[test]
    fn hash_is_sha256() {
        assert_eq!(hash_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn bad_rows_are_located() {
        let text = format!("{RESULT_COLUMNS}\nSRAM,0.7,15,7\n");
        let err = parse_results_csv(Path::new("r.csv"), &text).unwrap_err();
        assert!(matches!(err, Error::Row { row: 2, .. }));
    }

    proptest::proptest! {
        #[test]
        fn any_point_survives_the_csv(
            v in 0.1f64..2.0, n in 2usize..64, acc in 0.0f64..1.0, std in 0.0f64..0.5,
            loss in -0.1f64..1.0, e in 1e-6f64..1e6, lat in 0.0f64..10.0, fe in proptest::bool::ANY, pareto in proptest::bool::ANY,
        ) {
            let p = DesignPoint {
                technology: if fe { Technology::FeFinFet } else { Technology::Sram },
                voltage_v: v,
                block_size: n,
                precision: n / 2 + 1,
                dimension: 10 * n,
                replicas: 3,
                trials: 4,
                accuracy_mean: acc,
                accuracy_std: std,
                accuracy_loss: loss,
                energy_pj: e,
                latency_ns: lat,
                pareto,
            };
            let text = results_csv(&Header::new(0, String::new(), true), std::slice::from_ref(&p));
            proptest::prop_assert_eq!(parse_results_csv(Path::new("p.csv"), &text).unwrap(), vec![p]);
        }
    }
}
