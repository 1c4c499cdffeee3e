//! Hardware table files: one table object or an array of them.

use std::path::Path;

use tcamhd_core::hwmodel::{Catalog, HwTable};

use crate::error::{Error, Result};

/// Parses without checking table invariants.
pub fn parse_unchecked(path: &Path, text: &str) -> Result<Vec<HwTable>> {
    let trimmed = text.trim_start();
    // untagged enums lose the key path, so dispatch on the first byte
    if trimmed.starts_with('{') {
        let t: HwTable = crate::io::from_json(path, text)?;
        Ok(vec![t])
    } else {
        let ts: Vec<HwTable> = crate::io::from_json(path, text)?;
        Ok(ts)
    }
}

pub fn parse(path: &Path, text: &str) -> Result<Catalog> {
    let tables = parse_unchecked(path, text)?;
    Catalog::new(tables).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

pub fn load(path: impl AsRef<Path>) -> Result<Catalog> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse(path, &text)
}

pub fn render(catalog: &Catalog) -> String {
    let mut s = serde_json::to_string_pretty(catalog).expect("catalog serializes");
    s.push('\n');
    s
}


#[cfg(test)]
mod tests {
    use super::*;
    use tcamhd_core::hwmodel::{default_catalog, Technology};

    fn p() -> &'static Path {
        Path::new("hw.json")
    }

    #[test]
    fn default_catalog_round_trips() {
        let cat = default_catalog();
        let text = render(&cat);
        let back = parse(p(), &text).unwrap();
        assert_eq!(back, cat);
        assert_eq!(render(&back), text);
    }

    #[test]
    fn single_object_is_accepted() {
        let t = default_catalog().get(Technology::Sram, 0.7, 15).unwrap().clone();
        let text = serde_json::to_string(&t).unwrap();
        assert_eq!(parse(p(), &text).unwrap().tables(), &[t]);
    }

    #[test]
    fn non_monotone_mu_is_rejected_with_path() {
        let mut t = default_catalog().get(Technology::Sram, 0.7, 5).unwrap().clone();
        t.mu_ns[2] = t.mu_ns[1] + 0.001;
        let text = serde_json::to_string(&vec![t]).unwrap();
        let err = parse(p(), &text).unwrap_err().to_string();
        assert!(err.contains("[0].mu_ns[2]"), "{err}");
    }

    #[test]
    fn malformed_number_and_missing_key_name_the_path() {
        let t = default_catalog().get(Technology::Sram, 0.7, 3).unwrap().clone();
        let mut v = serde_json::to_value(vec![t]).unwrap();
        v[0]["sigma_ns"][1] = serde_json::Value::String("0.1x".into());
        let err = parse(p(), &v.to_string()).unwrap_err().to_string();
        assert!(err.contains("[0].sigma_ns[1]"), "{err}");

        v[0].as_object_mut().unwrap().remove("sigma_ns");
        let err = parse(p(), &v.to_string()).unwrap_err().to_string();
        assert!(err.contains("sigma_ns"), "{err}");
    }
}
